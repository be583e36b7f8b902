// pipeline/checkpoint.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_PIPELINE_CHECKPOINT_H_
#define CSFNET_PIPELINE_CHECKPOINT_H_

#include <limits>
#include <map>
#include <memory>
#include <string>

#include "pipeline/config.h"
#include "pipeline/model.h"

namespace csfnet {

struct Checkpoint {
  Stage stage = Stage::kCoarse;
  int epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::string fingerprint;
  // Id of the coarse checkpoint a fine checkpoint was initialized from.
  std::string parent_id;
  ModelConfig model;
  TrainConfig train;
  // Scheduler and optimizer scalars.
  Json optimizer = Json::object();
  std::map<std::string, Tensor> tensors;
  std::map<std::string, Tensor> optimizer_state;
  // Content hash, filled in by Save and Load.
  std::string id;
};

// Snapshot of every model tensor (parameters and buffers).
Checkpoint SnapshotModel(CsfNet* net, Stage stage);

// Rebuilds the model; tensor names must match exactly.
std::unique_ptr<CsfNet> RestoreModel(const Checkpoint& ckpt);

// Returns the checkpoint id.
std::string SaveCheckpoint(const std::string& path, Checkpoint* ckpt);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace csfnet

#endif  // CSFNET_PIPELINE_CHECKPOINT_H_
