// objectives/losses.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_OBJECTIVES_LOSSES_H_
#define CSFNET_OBJECTIVES_LOSSES_H_

#include "base/autograd.h"
#include "dsp/stft.h"

namespace csfnet {

// Differentiable SI-SDR in dB of est [L] against a constant reference,
// matching SiSdr() in value. The gradient is zero at a silent estimate.
Var SiSdrVar(const Var& est, const Tensor& ref);

// |STFT| L1 distance normalized by the L1 norm of the reference magnitude.
Var MagnitudeLoss(const Var& est, const Tensor& ref, const StftConfig& cfg);

// MagnitudeLoss - SiSdrVar, the per-pair training objective.
Var TotalLoss(const Var& est, const Tensor& ref, const StftConfig& cfg);

// Plain-value conveniences for metrics and PIT search.
double MagnitudeLossValue(const Tensor& est, const Tensor& ref,
                          const StftConfig& cfg);
double TotalLossValue(const Tensor& est, const Tensor& ref,
                      const StftConfig& cfg);

}  // namespace csfnet

#endif  // CSFNET_OBJECTIVES_LOSSES_H_
