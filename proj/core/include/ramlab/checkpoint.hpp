#pragma once

#include <string>

#include "ramlab/models.hpp"
#include "ramlab/nn.hpp"

namespace ramlab {

// Extra training-loop state carried inside a checkpoint so interrupted
// runs resume exactly at an epoch boundary.
struct TrainState {
  int epoch = 0;          // last completed epoch
  double best_val_acc = -1;
  int best_epoch = -1;
  int flat_epochs = 0;
  int lr_flat_epochs = 0;
};

// Self-describing container: magic + JSON header (model spec, tensor
// directory, Adam hyperparameters, train state) followed by raw
// little-endian float32 payloads, row-major, in directory order.
void save_checkpoint(const std::string& path, AttentionModel<float>& model,
                     const AdamState<float>* adam = nullptr,
                     const TrainState* train = nullptr);

struct LoadedCheckpoint {
  ModelSpec spec;
  std::unique_ptr<AttentionModel<float>> model;
  AdamState<float> adam;
  bool has_adam = false;
  TrainState train;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

std::string spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const std::string& text);

}  // namespace ramlab
