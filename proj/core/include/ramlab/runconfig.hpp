#pragma once

#include <cstdint>
#include <string>

#include "ramlab/models.hpp"
#include "ramlab/training.hpp"

namespace ramlab {

// One experiment = one flat key=value config. Files hold `key = value`
// lines ('#' comments); unknown keys are rejected. "auto" fields resolve
// against the chosen variant.
struct RunConfig {
  std::string dataset = "mnist";  // mnist | fashion_mnist | fer2013
  std::string data_root = "data";
  std::string out_dir = "runs";
  std::string variant = "mram";   // ram | dram | mram | lenet
  int glimpses = 10;
  int patch = 8;
  int scales = 1;
  int scale_factor = 2;
  std::string baseline = "auto";  // auto: hybrid for mram, single otherwise
  int context = -1;               // auto: 1 for dram, 0 otherwise
  double sigma = 0.1;
  int hidden = 256;
  double alpha = 0.01;
  int batch = 128;
  int epochs = 300;
  int patience = 50;
  double lr = 3e-4;
  double lr_decay = 0.5;
  int lr_patience = 20;
  double lr_floor = 1e-5;
  double clip = 5.0;
  double val_fraction = 0.1;
  uint64_t seed = 1;
  bool trace = false;
  int limit_train = 0;  // cap on train images (0 = all); smoke runs only

  static RunConfig from_file(const std::string& path);
  void set(const std::string& key, const std::string& value);  // throws on unknown key

  std::string resolved_baseline() const;
  bool resolved_context() const;

  // canonical snapshot (fixed key order, resolved auto fields)
  std::string serialize() const;
  // FNV-1a of the canonical snapshot, 16 hex digits
  std::string hash() const;

  ModelSpec model_spec(int image_size, int num_classes) const;
  TrainConfig train_config() const;
  std::string model_tag() const;  // e.g. "mram-t10-s1"
};

// data_root precedence: explicit config value, else $RAMLAB_DATA_ROOT,
// else "data"
std::string resolve_data_root(const RunConfig& cfg);

}  // namespace ramlab
