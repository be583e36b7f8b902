// encoder/audio-encoder.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "encoder/audio-encoder.h"

#include <numeric>

#include "base/error.h"

namespace csfnet {

int64_t NormGroups(int64_t channels) { return std::gcd<int64_t>(8, channels); }

AudioEncoder::AudioEncoder(int64_t channels, Rng* rng) : channels_(channels) {
  CSF_CHECK_CONFIG(channels > 0 && channels % kBranches == 0,
                   "encoder channels must be a positive multiple of 4, got ",
                   channels);
  const int64_t per = channels / kBranches;
  ops::Conv2dGeometry pointwise;
  branches_.emplace_back(2, per, pointwise, rng);
  for (int64_t d = 1; d <= 3; ++d) {
    ops::Conv2dGeometry g;
    g.kernel_h = g.kernel_w = 3;
    g.dilation_h = g.dilation_w = d;
    g.pad_h = g.pad_w = d;
    branches_.emplace_back(2, per, g, rng);
  }
  norm_ = GroupNormLayer(NormGroups(channels), channels);
}

Var AudioEncoder::Forward(const Var& spec) const {
  CSF_CHECK_INPUT(spec.value().ndim() == 3 && spec.dim(0) == 2,
                  "audio encoder expects [2, T, F], got ",
                  ShapeString(spec.shape()));
  const int64_t t = spec.dim(1), f = spec.dim(2);
  Var x = ops::Reshape(spec, {1, 2, t, f});
  std::vector<Var> outs;
  for (const auto& b : branches_) outs.push_back(b.Forward(x));
  Var y = ops::Reshape(ops::Concat(outs, 1), {channels_, t, f});
  return act_.Forward(norm_.Forward(y));
}

void AudioEncoder::Collect(const std::string& prefix,
                           std::vector<ParamEntry>* out) {
  for (size_t i = 0; i < branches_.size(); ++i)
    branches_[i].Collect(prefix + "branch" + std::to_string(i) + ".", out);
  norm_.Collect(prefix + "norm.", out);
  act_.Collect(prefix + "act.", out);
}

}  // namespace csfnet
