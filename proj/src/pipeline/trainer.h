// pipeline/trainer.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_PIPELINE_TRAINER_H_
#define CSFNET_PIPELINE_TRAINER_H_

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pipeline/checkpoint.h"
#include "pipeline/config.h"
#include "pipeline/dataset.h"

namespace csfnet {

struct StepRecord {
  int epoch = 0;
  int64_t step = 0;
  double loss = 0;
  double grad_norm = 0;     // before clipping
  double clipped_norm = 0;  // after clipping
  double lr = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double lr = 0;  // after the scheduler step
  double train_sisdri = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0;
};

struct TrainOptions {
  // Checkpoints go to <out_dir>/<stage>-best.ckpt and <stage>-last.ckpt.
  std::string out_dir;
  // JSONL log of steps, epochs and failures; empty disables.
  std::string log_path;
  // Overrides cfg.max_epochs when positive.
  int epochs = 0;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::vector<size_t> train_indices, val_indices;
  // Training-set SI-SDRi of the final weights.
  double final_train_sisdri = 0;
  std::string best_path, last_path;
  Checkpoint last;
};

TrainResult RunCoarseStage(const Config& cfg, MixDataset data,
                           const TrainOptions& opts);

// Throws ConfigError when cfg.model does not match the coarse checkpoint.
TrainResult RunFineStage(const Config& cfg, const Checkpoint& coarse,
                         MixDataset data, const TrainOptions& opts);

}  // namespace csfnet

#endif  // CSFNET_PIPELINE_TRAINER_H_
