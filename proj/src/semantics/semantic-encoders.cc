// semantics/semantic-encoders.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "semantics/semantic-encoders.h"

#include <cmath>

#include "base/error.h"

namespace csfnet {

namespace {

ops::Conv2dGeometry Square3x3() {
  ops::Conv2dGeometry g;
  g.kernel_h = g.kernel_w = 3;
  g.pad_h = g.pad_w = 1;
  return g;
}

// Kernel 3 along H only, used for 1-D convolutions laid out as [1, C, T, 1].
ops::Conv2dGeometry Temporal3(int64_t dilation) {
  ops::Conv2dGeometry g;
  g.kernel_h = 3;
  g.dilation_h = dilation;
  g.pad_h = dilation;
  return g;
}

// [C, T] -> [1, C, T, 1] -> conv -> [C', T]
Var Conv1d(const Conv2dLayer& conv, const Var& x) {
  const int64_t t = x.dim(1);
  Var y = conv.Forward(ops::Reshape(x, {1, x.dim(0), t, 1}));
  return ops::Reshape(y, {y.dim(1), t});
}

// Log compression log(1 + |X| / kLogScale); zero input maps to zero.
constexpr double kLogScale = 1e-3;

}  // namespace

ResidualBlock::ResidualBlock(int64_t in, int64_t out, Rng* rng)
    : conv1_(in, out, Square3x3(), rng),
      conv2_(out, out, Square3x3(), rng),
      bn1_(out),
      bn2_(out),
      has_skip_(in != out) {
  if (has_skip_) skip_ = Conv2dLayer(in, out, ops::Conv2dGeometry(), rng);
}

Var ResidualBlock::Forward(const Var& x, bool training) {
  Var h = act1_.Forward(bn1_.Forward(conv1_.Forward(x), training));
  h = bn2_.Forward(conv2_.Forward(h), training);
  Var s = has_skip_ ? skip_.Forward(x) : x;
  return ops::MaxPool2x2(act2_.Forward(ops::Add(h, s)));
}

void ResidualBlock::Collect(const std::string& prefix,
                            std::vector<ParamEntry>* out) {
  conv1_.Collect(prefix + "conv1.", out);
  bn1_.Collect(prefix + "bn1.", out);
  act1_.Collect(prefix + "act1.", out);
  conv2_.Collect(prefix + "conv2.", out);
  bn2_.Collect(prefix + "bn2.", out);
  if (has_skip_) skip_.Collect(prefix + "skip.", out);
  act2_.Collect(prefix + "act2.", out);
}

TemporalConvLayer::TemporalConvLayer(int64_t channels, int64_t dilation,
                                     Rng* rng)
    : conv_(channels, channels, Temporal3(dilation), rng) {}

Var TemporalConvLayer::Forward(const Var& x) const {
  return ops::Add(x, act_.Forward(Conv1d(conv_, x)));
}

void TemporalConvLayer::Collect(const std::string& prefix,
                                std::vector<ParamEntry>* out) {
  conv_.Collect(prefix + "conv.", out);
  act_.Collect(prefix + "act.", out);
}

VsrEncoder::VsrEncoder(int64_t semantic_dim, Rng* rng, int64_t width)
    : out_width_(4 * width) {
  CSF_CHECK_CONFIG(width > 0, "lip encoder width must be positive");
  const int64_t widths[] = {1, width, 2 * width, 4 * width};
  for (int i = 0; i < 3; ++i) blocks_.emplace_back(widths[i], widths[i + 1], rng);
  for (int64_t d : {1, 2, 4}) tcn_.emplace_back(out_width_, d, rng);
  out_ = Linear(out_width_, semantic_dim, rng);
}

Var VsrEncoder::Forward(const Var& frames) {
  CSF_CHECK_INPUT(frames.value().ndim() == 4 && frames.dim(1) == 1 &&
                      frames.dim(2) % 8 == 0 && frames.dim(3) % 8 == 0,
                  "lip encoder expects [T, 1, H, W] with H, W divisible by 8,"
                  " got ", ShapeString(frames.shape()));
  const int64_t t = frames.dim(0);
  Var x = frames;
  block_shapes_.clear();
  for (auto& b : blocks_) {
    x = b.Forward(x, training_);
    block_shapes_.push_back(x.shape());
  }
  const int64_t hw = x.dim(2) * x.dim(3);
  // Global average pool as a product with a constant column.
  Var pooled = ops::MatMul(ops::Reshape(x, {t * out_width_, hw}),
                           Var(Tensor({hw, 1}, 1.0 / hw)));
  Var seq = ops::Permute(ops::Reshape(pooled, {t, out_width_}), {1, 0});  // [C, T]
  for (const auto& layer : tcn_) seq = layer.Forward(seq);
  return out_.Forward(ops::Permute(seq, {1, 0}));
}

SemanticStream VsrEncoder::Encode(const MouthFrames& m) {
  m.Validate();
  return {Forward(Var(m.AsTensor())), SemanticSource::kVideoOnly};
}

void VsrEncoder::Collect(const std::string& prefix,
                         std::vector<ParamEntry>* out) {
  for (size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i].Collect(prefix + "res" + std::to_string(i) + ".", out);
  for (size_t i = 0; i < tcn_.size(); ++i)
    tcn_[i].Collect(prefix + "tcn" + std::to_string(i) + ".", out);
  out_.Collect(prefix + "out.", out);
}

Tensor AdaptivePoolMatrix(int64_t in, int64_t out) {
  Tensor m({out, in});
  for (int64_t i = 0; i < out; ++i) {
    const int64_t lo = (i * in) / out;
    const int64_t hi = ((i + 1) * in + out - 1) / out;
    for (int64_t j = lo; j < hi; ++j) m.at({i, j}) = 1.0 / (hi - lo);
  }
  return m;
}

AsrEncoder::AsrEncoder(int64_t semantic_dim, const StftConfig& cfg, Rng* rng)
    : stft_(cfg) {
  cfg.Validate();
  // Bias-free so silence stays zero through the zero-padded convolutions and
  // the stream of a silent input is the output bias at every frame.
  conv1_ = Conv2dLayer(cfg.FftBins(), semantic_dim, Temporal3(1), rng, false);
  conv2_ = Conv2dLayer(semantic_dim, semantic_dim, Temporal3(1), rng, false);
  out_ = Linear(semantic_dim, semantic_dim, rng);
}

Var AsrEncoder::Forward(const Var& samples, int64_t t1) const {
  const int64_t per_frame = stft_.sample_rate / kVideoFps;
  CSF_CHECK_INPUT(samples.value().ndim() == 1 && t1 >= 1 &&
                      samples.numel() == t1 * per_frame,
                  "audio of ", samples.numel(), " samples does not span ", t1,
                  " video frames of ", per_frame, " samples");
  Var mag = ops::Magnitude(ops::Stft(samples, stft_));          // [T, F]
  Var logmag = ops::Log(ops::Scale(mag, 1.0 / kLogScale), 1.0);
  Var feat = ops::Permute(logmag, {1, 0});                       // [F, T]
  Var h = act1_.Forward(Conv1d(conv1_, feat));
  h = act2_.Forward(Conv1d(conv2_, h));                          // [Cv, T]
  Var pooled = ops::MatMul(Var(AdaptivePoolMatrix(h.dim(1), t1)), h, false,
                           true);                                // [T1, Cv]
  return out_.Forward(pooled);
}

SemanticStream AsrEncoder::Encode(const Waveform& w, int64_t t1) const {
  return {Forward(Var(w.AsTensor()), t1), SemanticSource::kAudioVisual};
}

void AsrEncoder::Collect(const std::string& prefix,
                         std::vector<ParamEntry>* out) {
  conv1_.Collect(prefix + "conv1.", out);
  act1_.Collect(prefix + "act1.", out);
  conv2_.Collect(prefix + "conv2.", out);
  act2_.Collect(prefix + "act2.", out);
  out_.Collect(prefix + "out.", out);
}

AvFusion::AvFusion(int64_t semantic_dim, Rng* rng)
    : fc1_(2 * semantic_dim, semantic_dim, rng),
      fc2_(semantic_dim, semantic_dim, rng) {}

Var AvFusion::Forward(const Var& video, const Var& audio) const {
  CSF_CHECK_INPUT(video.value().ndim() == 2 && video.shape() == audio.shape(),
                  "video stream ", ShapeString(video.shape()),
                  " and audio stream ", ShapeString(audio.shape()),
                  " must match");
  Var h = act_.Forward(fc1_.Forward(ops::Concat({video, audio}, 1)));
  return ops::Add(video, fc2_.Forward(h));
}

SemanticStream AvFusion::Fuse(const SemanticStream& v,
                              const SemanticStream& a) const {
  return {Forward(v.features, a.features), SemanticSource::kAudioVisual};
}

void AvFusion::ZeroOutputLayer() {
  fc2_.weight.mutable_value().Fill(0.0);
  fc2_.bias.mutable_value().Fill(0.0);
}

void AvFusion::Collect(const std::string& prefix, std::vector<ParamEntry>* out) {
  fc1_.Collect(prefix + "fc1.", out);
  act_.Collect(prefix + "act.", out);
  fc2_.Collect(prefix + "fc2.", out);
}

}  // namespace csfnet
