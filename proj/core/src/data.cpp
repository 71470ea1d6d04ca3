#include "ramlab/data.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "ramlab/rng.hpp"

namespace ramlab {

namespace {

uint32_t read_be32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4))
    throw DataError(path + ": truncated header");
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

void write_be32(std::ofstream& f, uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v >> 24), (unsigned char)(v >> 16),
                        (unsigned char)(v >> 8), (unsigned char)v};
  f.write(reinterpret_cast<char*>(b), 4);
}

std::string hex(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

Dataset Dataset::slice(const std::vector<int>& idx) const {
  Dataset out;
  out.meta = meta;
  out.images.resize((Eigen::Index)idx.size(), images.cols());
  out.labels.reserve(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    out.images.row((Eigen::Index)i) = images.row(idx[i]);
    out.labels.push_back(labels[idx[i]]);
  }
  return out;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream fi(images_path, std::ios::binary);
  if (!fi) throw DataError(images_path + ": cannot open");
  uint32_t magic = read_be32(fi, images_path);
  if (magic != 0x00000803)
    throw DataError(images_path + ": bad image magic " + hex(magic) + ", expected 0x00000803");
  uint32_t n = read_be32(fi, images_path);
  uint32_t h = read_be32(fi, images_path);
  uint32_t w = read_be32(fi, images_path);
  std::vector<unsigned char> pixels((size_t)n * h * w);
  if (!fi.read(reinterpret_cast<char*>(pixels.data()), (std::streamsize)pixels.size()))
    throw DataError(images_path + ": truncated, expected " + std::to_string(pixels.size()) +
                    " pixel bytes");

  std::ifstream fl(labels_path, std::ios::binary);
  if (!fl) throw DataError(labels_path + ": cannot open");
  uint32_t lmagic = read_be32(fl, labels_path);
  if (lmagic != 0x00000801)
    throw DataError(labels_path + ": bad label magic " + hex(lmagic) + ", expected 0x00000801");
  uint32_t ln = read_be32(fl, labels_path);
  if (ln != n)
    throw DataError(labels_path + ": " + std::to_string(ln) + " labels for " +
                    std::to_string(n) + " images");
  std::vector<unsigned char> labs(ln);
  if (!fl.read(reinterpret_cast<char*>(labs.data()), (std::streamsize)labs.size()))
    throw DataError(labels_path + ": truncated label payload");

  Dataset ds;
  ds.meta.height = (int)h;
  ds.meta.width = (int)w;
  ds.images.resize((Eigen::Index)n, (Eigen::Index)(h * w));
  ds.labels.resize(n);
  int max_label = 0;
  for (uint32_t i = 0; i < n; ++i) {
    const unsigned char* src = pixels.data() + (size_t)i * h * w;
    for (uint32_t p = 0; p < h * w; ++p) ds.images(i, p) = (float)src[p] / 255.0f;
    ds.labels[i] = labs[i];
    max_label = std::max(max_label, (int)labs[i]);
  }
  ds.meta.num_classes = max_label + 1;
  if (!ds.images.allFinite()) throw DataError(images_path + ": non-finite pixels after load");
  return ds;
}

void write_idx_images(const std::string& path,
                      const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& images,
                      int h, int w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(path + ": cannot open for write");
  write_be32(f, 0x00000803);
  write_be32(f, (uint32_t)images.rows());
  write_be32(f, (uint32_t)h);
  write_be32(f, (uint32_t)w);
  for (Eigen::Index i = 0; i < images.rows(); ++i)
    for (Eigen::Index p = 0; p < images.cols(); ++p) {
      float v = images(i, p);
      unsigned char b = (unsigned char)std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f);
      f.write(reinterpret_cast<char*>(&b), 1);
    }
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(path + ": cannot open for write");
  write_be32(f, 0x00000801);
  write_be32(f, (uint32_t)labels.size());
  for (int l : labels) {
    unsigned char b = (unsigned char)l;
    f.write(reinterpret_cast<char*>(&b), 1);
  }
}

FerSplits load_fer_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError(path + ": cannot open");
  std::string line;
  if (!std::getline(f, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "emotion,pixels,Usage")
    throw DataError(path + ": bad header '" + line + "', expected 'emotion,pixels,Usage'");

  constexpr int kSide = 48, kPixels = kSide * kSide, kClasses = 7;
  struct Rows {
    std::vector<float> pixels;
    std::vector<int> labels;
  };
  Rows train, pub, priv;
  long line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* s = line.c_str();
    char* end = nullptr;
    long emotion = std::strtol(s, &end, 10);
    if (end == s || *end != ',' || emotion < 0 || emotion >= kClasses)
      throw DataError(path + ":" + std::to_string(line_no) + ": bad emotion field");
    s = end + 1;
    float px[kPixels];
    int count = 0;
    while (*s && *s != ',') {
      long v = std::strtol(s, &end, 10);
      if (end == s) break;
      if (count >= kPixels)
        throw DataError(path + ":" + std::to_string(line_no) + ": more than " +
                        std::to_string(kPixels) + " pixels");
      px[count++] = (float)v / 255.0f;
      s = end;
      while (*s == ' ') ++s;
    }
    if (count != kPixels)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(kPixels) + " pixels, got " + std::to_string(count));
    if (*s != ',')
      throw DataError(path + ":" + std::to_string(line_no) + ": missing Usage field");
    std::string usage(s + 1);
    Rows* dst = nullptr;
    if (usage == "Training") dst = &train;
    else if (usage == "PublicTest") dst = &pub;
    else if (usage == "PrivateTest") dst = &priv;
    else
      throw DataError(path + ":" + std::to_string(line_no) + ": unknown Usage '" + usage + "'");
    dst->pixels.insert(dst->pixels.end(), px, px + kPixels);
    dst->labels.push_back((int)emotion);
  }

  auto make = [&](Rows& r, const std::string& split) {
    Dataset ds;
    ds.meta = {"fer2013/" + split, kSide, kSide, kClasses};
    ds.labels = std::move(r.labels);
    ds.images.resize((Eigen::Index)ds.labels.size(), kPixels);
    for (size_t i = 0; i < ds.labels.size(); ++i)
      for (int p = 0; p < kPixels; ++p) ds.images((Eigen::Index)i, p) = r.pixels[i * kPixels + p];
    return ds;
  };
  FerSplits out{make(train, "train"), make(pub, "public_test"), make(priv, "private_test")};
  return out;
}

NormStats normalize(Dataset& train, std::vector<Dataset*> others) {
  double sum = 0, sq = 0;
  const double n = (double)train.images.size();
  sum = (double)train.images.sum();
  sq = (double)train.images.array().square().sum();
  double mean = sum / n;
  double var = sq / n - mean * mean;
  NormStats st;
  st.mean = (float)mean;
  st.stdev = (float)std::sqrt(std::max(var, 0.0));
  if (st.stdev < 1e-8f) st.stdev = 1e-8f;
  apply_normalization(train, st);
  for (Dataset* d : others) apply_normalization(*d, st);
  return st;
}

void apply_normalization(Dataset& ds, const NormStats& st) {
  ds.images.array() -= st.mean;
  ds.images.array() /= st.stdev;
}

std::vector<std::vector<int>> epoch_batches(int n, int batch_size, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    int j = (int)(rng.next_u64() % (uint64_t)(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::vector<int>> batches;
  for (int at = 0; at < n; at += batch_size) {
    int take = std::min(batch_size, n - at);
    batches.emplace_back(perm.begin() + at, perm.begin() + at + take);
  }
  return batches;
}

TrainValSplit split_train_val(const Dataset& ds, double fraction, uint64_t seed) {
  int n = ds.size();
  int n_val = (int)(n * fraction);
  Rng rng = Rng::substream(seed, {kStreamSplit});
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    int j = (int)(rng.next_u64() % (uint64_t)(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int> tr(perm.begin(), perm.end() - n_val);
  std::vector<int> va(perm.end() - n_val, perm.end());
  return {ds.slice(tr), ds.slice(va)};
}

}  // namespace ramlab
