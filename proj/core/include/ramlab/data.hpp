#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ramlab {

// Malformed or missing input files (distinct from numeric failures so the
// CLI can map them to their own exit code).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetMeta {
  std::string name;
  int height = 0, width = 0;
  int num_classes = 0;
};

// Images are one row per example, row-major pixels, in [0,1] as loaded and
// mean/std-normalized in place afterwards.
struct Dataset {
  DatasetMeta meta;
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> images;  // [N, H*W]
  std::vector<int> labels;

  int size() const { return (int)images.rows(); }
  const float* image(int i) const { return images.row(i).data(); }
  Dataset slice(const std::vector<int>& idx) const;
};

struct NormStats {
  float mean = 0, stdev = 1;
};

// IDX container (big-endian magic 0x803 for images, 0x801 for labels).
// Pixels are scaled to [0,1]. Throws DataError on bad magic, truncation,
// or label/image count mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writes the same container; used by tests and the dataset round-trip.
void write_idx_images(const std::string& path,
                      const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& images,
                      int h, int w);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

struct FerSplits {
  Dataset train, public_test, private_test;
};

// fer2013.csv: header "emotion,pixels,Usage", rows of a class index 0..6,
// 2304 space-separated bytes (48x48 row-major), and a split tag of
// Training / PublicTest / PrivateTest.
FerSplits load_fer_csv(const std::string& path);

// Mean/std over the train split's pixels; applied to every split passed.
// Zero spread is guarded so constant images stay finite.
NormStats normalize(Dataset& train, std::vector<Dataset*> others = {});
void apply_normalization(Dataset& ds, const NormStats& st);

// Deterministic shuffled batch index lists; the final partial batch is kept.
class Rng;
std::vector<std::vector<int>> epoch_batches(int n, int batch_size, Rng& rng);

// Seeded (permute, then split off the last `fraction`) train/val split.
struct TrainValSplit {
  Dataset train, val;
};
TrainValSplit split_train_val(const Dataset& ds, double fraction, uint64_t seed);

}  // namespace ramlab
