// encoder/audio-encoder.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_ENCODER_AUDIO_ENCODER_H_
#define CSFNET_ENCODER_AUDIO_ENCODER_H_

#include <vector>

#include "base/layers.h"

namespace csfnet {

// Four parallel 2-D convolutions over (T, F): 1x1 and 3x3 with dilation
// 1, 2, 3, each with C/4 outputs and "same" zero padding, concatenated,
// then group norm and PReLU.
class AudioEncoder : public Module {
 public:
  static constexpr int kBranches = 4;

  AudioEncoder() = default;
  // Throws ConfigError unless channels is a positive multiple of 4.
  AudioEncoder(int64_t channels, Rng* rng);

  // spec [2, T, F] -> [C, T, F]
  Var Forward(const Var& spec) const;
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  int64_t channels() const { return channels_; }

 private:
  int64_t channels_ = 0;
  std::vector<Conv2dLayer> branches_;
  GroupNormLayer norm_;
  PReluLayer act_;
};

// Group count used by every group norm in the model: 8 when it divides the
// channel count, otherwise the largest common divisor.
int64_t NormGroups(int64_t channels);

}  // namespace csfnet

#endif  // CSFNET_ENCODER_AUDIO_ENCODER_H_
