// semantics/semantic-encoders.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_SEMANTICS_SEMANTIC_ENCODERS_H_
#define CSFNET_SEMANTICS_SEMANTIC_ENCODERS_H_

#include <vector>

#include "base/layers.h"
#include "dsp/stft.h"
#include "semantics/mouth-frames.h"

namespace csfnet {

enum class SemanticSource { kVideoOnly, kAudioVisual };

// Per-speaker semantic sequence [T1, Cv].
struct SemanticStream {
  Var features;
  SemanticSource source = SemanticSource::kVideoOnly;

  int64_t frames() const { return features.dim(0); }
};

// conv3x3-BN-PReLU-conv3x3-BN, plus a 1x1 projection on the skip path when
// the width changes, summed, PReLU, then 2x2 max pooling.
class ResidualBlock : public Module {
 public:
  ResidualBlock() = default;
  ResidualBlock(int64_t in, int64_t out, Rng* rng);
  Var Forward(const Var& x, bool training);
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

 private:
  Conv2dLayer conv1_, conv2_, skip_;
  BatchNorm2dLayer bn1_, bn2_;
  PReluLayer act1_, act2_;
  bool has_skip_ = false;
};

// Dilated 1-D convolution over time with a residual connection.
class TemporalConvLayer : public Module {
 public:
  TemporalConvLayer() = default;
  TemporalConvLayer(int64_t channels, int64_t dilation, Rng* rng);
  Var Forward(const Var& x) const;  // [C, T] -> [C, T]
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

 private:
  Conv2dLayer conv_;
  PReluLayer act_;
};

// Lip encoder: residual CNN (1 -> w -> 2w -> 4w, spatial /8, w = 16 by
// default), global average pool, three-layer TCN with dilations 1, 2, 4,
// linear to Cv.
class VsrEncoder : public Module {
 public:
  static constexpr int64_t kDefaultWidth = 16;

  VsrEncoder() = default;
  VsrEncoder(int64_t semantic_dim, Rng* rng, int64_t width = kDefaultWidth);

  // Requires 88 x 88 frames.
  SemanticStream Encode(const MouthFrames& m);
  // frames [T_v, 1, H, W] with H, W divisible by 8 -> [T_v, Cv].
  Var Forward(const Var& frames);
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  void set_training(bool t) { training_ = t; }
  bool training() const { return training_; }
  // Output shapes of the residual blocks in the last forward pass.
  const std::vector<Shape>& block_shapes() const { return block_shapes_; }

 private:
  int64_t out_width_ = 0;
  std::vector<Shape> block_shapes_;
  std::vector<ResidualBlock> blocks_;
  std::vector<TemporalConvLayer> tcn_;
  Linear out_;
  bool training_ = false;
};

// Average-pooling matrix [out, in] with adaptive bin edges
// floor(i * in / out) .. ceil((i + 1) * in / out).
Tensor AdaptivePoolMatrix(int64_t in, int64_t out);

// Audio semantic stand-in: log-compressed STFT magnitude, two kernel-3 temporal
// convolutions with PReLU, adaptive average pooling to T1, linear to Cv.
class AsrEncoder : public Module {
 public:
  AsrEncoder() = default;
  AsrEncoder(int64_t semantic_dim, const StftConfig& cfg, Rng* rng);

  // samples [L] with L = T1 * sample_rate / fps -> [T1, Cv].
  Var Forward(const Var& samples, int64_t t1) const;
  SemanticStream Encode(const Waveform& w, int64_t t1) const;
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  const StftConfig& stft() const { return stft_; }

 private:
  StftConfig stft_;
  Conv2dLayer conv1_, conv2_;
  PReluLayer act1_, act2_;
  Linear out_;
};

// L_hat = v + MLP([v; a]), a two-layer MLP 2Cv -> Cv -> Cv with PReLU.
class AvFusion : public Module {
 public:
  AvFusion() = default;
  AvFusion(int64_t semantic_dim, Rng* rng);

  Var Forward(const Var& video, const Var& audio) const;
  SemanticStream Fuse(const SemanticStream& v, const SemanticStream& a) const;
  // Zeroes the output layer so the fused stream starts equal to the video
  // stream.
  void ZeroOutputLayer();
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

 private:
  Linear fc1_, fc2_;
  PReluLayer act_;
};

}  // namespace csfnet

#endif  // CSFNET_SEMANTICS_SEMANTIC_ENCODERS_H_
