#include "ramlab/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "ramlab/data.hpp"

namespace ramlab {

using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'R', 'A', 'M', 'L', 'A', 'B', 'C', '1'};

json spec_json(const ModelSpec& s) {
  return json{{"variant", to_string(s.variant)},
              {"hidden", s.hidden},
              {"num_glimpses", s.num_glimpses},
              {"patch_size", s.glimpse.patch_size},
              {"num_scales", s.glimpse.num_scales},
              {"scale_factor", s.glimpse.scale_factor},
              {"baseline", to_string(s.baseline)},
              {"context_cnn", s.context_cnn},
              {"num_classes", s.num_classes},
              {"policy_sigma", s.policy_sigma},
              {"image_size", s.image_size},
              {"what_width", s.what_width},
              {"where_width", s.where_width}};
}

ModelSpec spec_from(const json& j) {
  ModelSpec s;
  s.variant = variant_from_string(j.at("variant").get<std::string>());
  s.hidden = j.at("hidden").get<int>();
  s.num_glimpses = j.at("num_glimpses").get<int>();
  s.glimpse.patch_size = j.at("patch_size").get<int>();
  s.glimpse.num_scales = j.at("num_scales").get<int>();
  s.glimpse.scale_factor = j.at("scale_factor").get<int>();
  s.baseline = baseline_from_string(j.at("baseline").get<std::string>());
  s.context_cnn = j.at("context_cnn").get<bool>();
  s.num_classes = j.at("num_classes").get<int>();
  s.policy_sigma = j.at("policy_sigma").get<double>();
  s.image_size = j.at("image_size").get<int>();
  s.what_width = j.at("what_width").get<int>();
  s.where_width = j.at("where_width").get<int>();
  return s;
}

void write_mat(std::ofstream& f, const Mat<float>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      float v = m(r, c);
      f.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

void read_mat(std::ifstream& f, Mat<float>& m, const std::string& path) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      float v;
      if (!f.read(reinterpret_cast<char*>(&v), sizeof v))
        throw DataError(path + ": truncated tensor payload");
      m(r, c) = v;
    }
}
}  // namespace

std::string spec_to_json(const ModelSpec& spec) { return spec_json(spec).dump(); }

ModelSpec spec_from_json(const std::string& text) { return spec_from(json::parse(text)); }

void save_checkpoint(const std::string& path, AttentionModel<float>& model,
                     const AdamState<float>* adam, const TrainState* train) {
  auto params = model.parameters();
  json tensors = json::array();
  for (auto* p : params)
    tensors.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  json header{{"spec", spec_json(model.spec())}, {"tensors", tensors}};
  if (adam) {
    header["adam"] = {{"lr", adam->lr},       {"beta1", adam->beta1}, {"beta2", adam->beta2},
                      {"eps", adam->eps},     {"step", adam->step}};
  }
  if (train) {
    header["train"] = {{"epoch", train->epoch},
                       {"best_val_acc", train->best_val_acc},
                       {"best_epoch", train->best_epoch},
                       {"flat_epochs", train->flat_epochs},
                       {"lr_flat_epochs", train->lr_flat_epochs}};
  }
  std::string htext = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(path + ": cannot open for write");
  f.write(kMagic, sizeof kMagic);
  uint64_t len = htext.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof len);
  f.write(htext.data(), (std::streamsize)htext.size());
  for (auto* p : params) write_mat(f, p->value);
  if (adam) {
    for (const auto& m : adam->m) write_mat(f, m);
    for (const auto& v : adam->v) write_mat(f, v);
  }
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError(path + ": cannot open");
  char magic[8];
  if (!f.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw DataError(path + ": not a checkpoint file");
  uint64_t len = 0;
  if (!f.read(reinterpret_cast<char*>(&len), sizeof len))
    throw DataError(path + ": truncated header length");
  std::string htext(len, '\0');
  if (!f.read(htext.data(), (std::streamsize)len)) throw DataError(path + ": truncated header");
  json header = json::parse(htext);

  LoadedCheckpoint out;
  out.spec = spec_from(header.at("spec"));
  out.model = std::make_unique<AttentionModel<float>>(out.spec);
  auto params = out.model->parameters();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size())
    throw DataError(path + ": tensor directory size mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[(int)i];
    if (t.at("name").get<std::string>() != params[i]->name ||
        t.at("rows").get<Eigen::Index>() != params[i]->value.rows() ||
        t.at("cols").get<Eigen::Index>() != params[i]->value.cols())
      throw DataError(path + ": tensor '" + t.at("name").get<std::string>() +
                      "' does not match the model layout");
    read_mat(f, params[i]->value, path);
  }
  if (header.contains("adam")) {
    out.has_adam = true;
    const auto& a = header.at("adam");
    out.adam.lr = a.at("lr").get<float>();
    out.adam.beta1 = a.at("beta1").get<float>();
    out.adam.beta2 = a.at("beta2").get<float>();
    out.adam.eps = a.at("eps").get<float>();
    out.adam.step = a.at("step").get<long>();
    out.adam.attach(params);
    for (auto& m : out.adam.m) read_mat(f, m, path);
    for (auto& v : out.adam.v) read_mat(f, v, path);
  }
  if (header.contains("train")) {
    const auto& t = header.at("train");
    out.train.epoch = t.at("epoch").get<int>();
    out.train.best_val_acc = t.at("best_val_acc").get<double>();
    out.train.best_epoch = t.at("best_epoch").get<int>();
    out.train.flat_epochs = t.at("flat_epochs").get<int>();
    out.train.lr_flat_epochs = t.at("lr_flat_epochs").get<int>();
  }
  return out;
}

}  // namespace ramlab
