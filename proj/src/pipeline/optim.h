// pipeline/optim.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_PIPELINE_OPTIM_H_
#define CSFNET_PIPELINE_OPTIM_H_

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "base/layers.h"

namespace csfnet {

class Adam {
 public:
  Adam(std::vector<ParamEntry> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  // Applies one update from the accumulated gradients; parameters without a
  // gradient are left untouched.
  void Step();
  void ZeroGrad();

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  int64_t steps() const { return step_; }
  void set_steps(int64_t s) { step_ = s; }

  const std::vector<ParamEntry>& params() const { return params_; }
  // Moment buffers keyed by "m.<name>" and "v.<name>".
  std::map<std::string, Tensor> State() const;
  void LoadState(const std::map<std::string, Tensor>& state);

 private:
  std::vector<ParamEntry> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int64_t step_ = 0;
};

double GlobalGradNorm(const std::vector<ParamEntry>& params);

// Rescales gradients so the global norm is at most max_norm; returns the
// norm before clipping.
double ClipGradNorm(const std::vector<ParamEntry>& params, double max_norm);

// Multiplies the learning rate by `factor` once the monitored loss has failed
// to improve for `patience` consecutive epochs.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor, int patience)
      : factor_(factor), patience_(patience) {}

  // Returns the (possibly reduced) learning rate.
  double Step(double metric, double lr);

  double best() const { return best_; }
  int bad_epochs() const { return bad_epochs_; }
  void Restore(double best, int bad_epochs) {
    best_ = best;
    bad_epochs_ = bad_epochs;
  }

 private:
  double factor_;
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
};

}  // namespace csfnet

#endif  // CSFNET_PIPELINE_OPTIM_H_
