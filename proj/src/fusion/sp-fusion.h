// fusion/sp-fusion.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_FUSION_SP_FUSION_H_
#define CSFNET_FUSION_SP_FUSION_H_

#include <vector>

#include "base/layers.h"

namespace csfnet {

// Pointwise two-layer MLP over channels: 2C -> C -> C with PReLU between.
class ChannelMlp : public Module {
 public:
  ChannelMlp() = default;
  ChannelMlp(int64_t in, int64_t hidden, int64_t out, Rng* rng);
  Var Forward(const Var& x) const;  // [in, ...] -> [out, ...]
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

 private:
  PointwiseConv fc1_, fc2_;
  PReluLayer act_;
};

// Linear time interpolation matrix [T, T1] with endpoints aligned.
Tensor InterpolationMatrix(int64_t t1, int64_t t);

// Speaker-wise fusion of the audio feature map with S semantic streams.
// Each stream [T1, Cv] is projected to C, interpolated to T frames and
// repeated over F. A shared MLP f forms [Y; L_i] maps, a joint MLP g forms
// the map of [Y; sum_i L_i]; [Y, f_1..f_S, g] is reduced back to C by a 1x1
// convolution, group norm and PReLU.
class SpFusion : public Module {
 public:
  SpFusion() = default;
  SpFusion(int64_t channels, int64_t semantic_dim, int num_speakers, Rng* rng);

  // stream [T1, Cv] -> [C, T, F]. Throws InvalidInput when T1 < 2.
  Var AlignSemantics(const Var& stream, int64_t frames, int64_t bins) const;
  // y [C, T, F], aligned: S maps [C, T, F] -> [C, T, F].
  Var Fuse(const Var& y, const std::vector<Var>& aligned) const;
  // The (S + 2) C channel tensor fed to the reduction convolution.
  Var PreReduction(const Var& y, const std::vector<Var>& aligned) const;
  // Align each stream, then fuse.
  Var Forward(const Var& y, const std::vector<Var>& streams) const;

  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  int num_speakers() const { return num_speakers_; }

 private:
  int64_t channels_ = 0;
  int num_speakers_ = 0;
  Linear proj_;
  ChannelMlp pair_, joint_;
  PointwiseConv reduce_;
  GroupNormLayer norm_;
  PReluLayer act_;
};

}  // namespace csfnet

#endif  // CSFNET_FUSION_SP_FUSION_H_
