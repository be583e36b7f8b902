// separator/mst.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "separator/mst.h"

#include <cmath>

#include "base/error.h"

namespace csfnet {

void MstConfig::Validate() const {
  CSF_CHECK_CONFIG(channels > 0, "channels must be positive");
  CSF_CHECK_CONFIG(hidden > 0 && hidden % 2 == 0,
                   "hidden size must be positive and even, got ", hidden);
  CSF_CHECK_CONFIG(blocks >= 1, "need at least one block");
  CSF_CHECK_CONFIG(heads >= 1 && channels % heads == 0, "heads (", heads,
                   ") must divide the channel count ", channels);
  CSF_CHECK_CONFIG(bins >= 1 && attn_qk_dim >= 1, "bad attention widths");
  bool has_global = false;
  for (const auto& b : branches) {
    CSF_CHECK_CONFIG(b.window >= 1 && b.stride >= 1,
                     "branch window and stride must be >= 1");
    has_global |= b.window == 1 && b.stride == 1;
  }
  CSF_CHECK_CONFIG(has_global, "branch list must contain the (1, 1) branch");
}

BranchModule::BranchModule(int64_t channels, ops::Axis axis,
                           const BranchSpec& spec, int64_t hidden, Rng* rng)
    : channels_(channels), axis_(axis), spec_(spec) {
  const int64_t width = channels * spec.window;
  in_proj = Linear(width, hidden, rng);
  rnn = BiLstmLayer(hidden, hidden / 2, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  deconv_weight = UniformParam({hidden, width}, bound, rng);
  deconv_bias = UniformParam({channels}, bound, rng);
}

Var BranchModule::Delta(const Var& x) const {
  CSF_CHECK_INPUT(x.value().ndim() == 3 && x.dim(0) == channels_,
                  "branch expects [", channels_, ", T, F], got ",
                  ShapeString(x.shape()));
  const int64_t t = x.dim(1), f = x.dim(2);
  Var u = ops::UnfoldAxis(x, axis_, spec_.window, spec_.stride);
  const int64_t other = u.dim(0), windows = u.dim(1), width = u.dim(2);
  Var h = in_proj.Forward(ops::Reshape(u, {other * windows, width}));
  h = rnn.Forward(ops::Reshape(h, {other, windows, h.dim(1)}));
  Var y = ops::MatMul(ops::Reshape(h, {other * windows, h.dim(2)}),
                      deconv_weight);
  y = ops::FoldAxis(ops::Reshape(y, {other, windows, width}), channels_, t, f,
                    axis_, spec_.window, spec_.stride);
  return ops::AddBias(y, deconv_bias, 0);
}

void BranchModule::Collect(const std::string& prefix,
                           std::vector<ParamEntry>* out) {
  in_proj.Collect(prefix + "in_proj.", out);
  rnn.Collect(prefix + "rnn.", out);
  out->push_back({prefix + "deconv.weight", deconv_weight});
  out->push_back({prefix + "deconv.bias", deconv_bias});
}

FullBandAttention::FullBandAttention(const MstConfig& cfg, Rng* rng)
    : channels_(cfg.channels), bins_(cfg.bins), embed_(cfg.QkEmbed()) {
  const int64_t v_dim = cfg.channels / cfg.heads;
  for (int64_t h = 0; h < cfg.heads; ++h) {
    Head head;
    head.q = PointwiseConv(cfg.channels, embed_, rng);
    head.k = PointwiseConv(cfg.channels, embed_, rng);
    head.v = PointwiseConv(cfg.channels, v_dim, rng);
    head.q_norm = LayerNormLayer(embed_ * bins_);
    head.k_norm = LayerNormLayer(embed_ * bins_);
    head.v_norm = LayerNormLayer(v_dim * bins_);
    heads_.push_back(std::move(head));
  }
  out_proj_ = PointwiseConv(cfg.channels, cfg.channels, rng);
  out_norm_ = LayerNormLayer(cfg.channels * bins_);
}

namespace {

// [D, T, F] -> [T, D * F] after activation, normalized per frame.
Var FrameEmbedding(const Var& x, const PointwiseConv& conv,
                   const PReluLayer& act, const LayerNormLayer& norm) {
  Var e = act.Forward(conv.Forward(x));
  const int64_t d = e.dim(0), t = e.dim(1), f = e.dim(2);
  e = ops::Reshape(ops::Permute(e, {1, 0, 2}), {t, d * f});
  return norm.ForwardLastDim(e);
}

}  // namespace

Var FullBandAttention::Forward(const Var& x) const {
  CSF_CHECK_INPUT(x.value().ndim() == 3 && x.dim(0) == channels_ &&
                      x.dim(2) == bins_,
                  "attention built for [", channels_, ", T, ", bins_,
                  "], got ", ShapeString(x.shape()));
  const int64_t t = x.dim(1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(embed_ * bins_));
  std::vector<Var> outs;
  for (const Head& h : heads_) {
    Var q = FrameEmbedding(x, h.q, h.q_act, h.q_norm);
    Var k = FrameEmbedding(x, h.k, h.k_act, h.k_norm);
    Var v = FrameEmbedding(x, h.v, h.v_act, h.v_norm);
    Var a = ops::SoftmaxLastDim(ops::Scale(ops::MatMul(q, k, false, true), scale));
    if (probe_) probe_->push_back(a.value());
    Var o = ops::MatMul(a, v);  // [T, Dv * F]
    outs.push_back(ops::Reshape(o, {t, o.dim(1) / bins_, bins_}));
  }
  Var cat = ops::Permute(ops::Concat(outs, 1), {1, 0, 2});  // [C, T, F]
  Var y = out_act_.Forward(out_proj_.Forward(cat));
  y = ops::Reshape(ops::Permute(y, {1, 0, 2}), {t, channels_ * bins_});
  y = out_norm_.ForwardLastDim(y);
  y = ops::Permute(ops::Reshape(y, {t, channels_, bins_}), {1, 0, 2});
  return ops::Add(x, y);
}

void FullBandAttention::Collect(const std::string& prefix,
                                std::vector<ParamEntry>* out) {
  for (size_t i = 0; i < heads_.size(); ++i) {
    const std::string p = prefix + "head" + std::to_string(i) + ".";
    Head& h = heads_[i];
    h.q.Collect(p + "q.", out);
    h.q_act.Collect(p + "q_act.", out);
    h.q_norm.Collect(p + "q_norm.", out);
    h.k.Collect(p + "k.", out);
    h.k_act.Collect(p + "k_act.", out);
    h.k_norm.Collect(p + "k_norm.", out);
    h.v.Collect(p + "v.", out);
    h.v_act.Collect(p + "v_act.", out);
    h.v_norm.Collect(p + "v_norm.", out);
  }
  out_proj_.Collect(prefix + "out_proj.", out);
  out_act_.Collect(prefix + "out_act.", out);
  out_norm_.Collect(prefix + "out_norm.", out);
}

MstBlock::MstBlock(const MstConfig& cfg, Rng* rng) : channels_(cfg.channels) {
  cfg.Validate();
  spectral_norm_ = LayerNormLayer(cfg.channels);
  temporal_norm_ = LayerNormLayer(cfg.channels);
  for (const auto& b : cfg.branches)
    spectral_.emplace_back(cfg.channels, ops::Axis::kFrequency, b, cfg.hidden,
                           rng);
  for (const auto& b : cfg.branches)
    temporal_.emplace_back(cfg.channels, ops::Axis::kTime, b, cfg.hidden, rng);
  attention_ = FullBandAttention(cfg, rng);
}

Var MstBlock::BranchStage(const Var& x, const LayerNormLayer& norm,
                          const std::vector<BranchModule>& branches) const {
  const Shape shape = x.shape();
  Var n = ops::Reshape(
      norm.ForwardFirstDim(ops::Reshape(x, {channels_, x.numel() / channels_})),
      shape);
  std::vector<Var> terms{x};
  for (const auto& b : branches) terms.push_back(b.Delta(n));
  return ops::AddN(terms);
}

Var MstBlock::SpectralStage(const Var& x) const {
  return BranchStage(x, spectral_norm_, spectral_);
}

Var MstBlock::TemporalStage(const Var& x) const {
  return BranchStage(x, temporal_norm_, temporal_);
}

Var MstBlock::Forward(const Var& x) const {
  return attention_.Forward(TemporalStage(SpectralStage(x)));
}

void MstBlock::Collect(const std::string& prefix, std::vector<ParamEntry>* out) {
  spectral_norm_.Collect(prefix + "ifs.norm.", out);
  for (size_t i = 0; i < spectral_.size(); ++i)
    spectral_[i].Collect(prefix + "ifs.branch" + std::to_string(i) + ".", out);
  temporal_norm_.Collect(prefix + "sbt.norm.", out);
  for (size_t i = 0; i < temporal_.size(); ++i)
    temporal_[i].Collect(prefix + "sbt.branch" + std::to_string(i) + ".", out);
  attention_.Collect(prefix + "fbs.", out);
}

MstSeparator::MstSeparator(const MstConfig& cfg, Rng* rng) : cfg_(cfg) {
  cfg.Validate();
  for (int64_t b = 0; b < cfg.blocks; ++b) blocks_.emplace_back(cfg, rng);
}

Var MstSeparator::Forward(const Var& x) const {
  Var y = x;
  for (const auto& b : blocks_) y = b.Forward(y);
  return y;
}

void MstSeparator::Collect(const std::string& prefix,
                           std::vector<ParamEntry>* out) {
  for (size_t i = 0; i < blocks_.size(); ++i)
    blocks_[i].Collect(prefix + "block" + std::to_string(i) + ".", out);
}

Decoder::Decoder(int64_t channels, int num_speakers, Rng* rng)
    : num_speakers_(num_speakers) {
  CSF_CHECK_INPUT(num_speakers >= 1, "decoder needs at least one speaker");
  conv_ = PointwiseConv(channels, 2 * num_speakers, rng);
}

std::vector<Var> Decoder::Forward(const Var& y) const {
  Var out = conv_.Forward(y);
  std::vector<Var> specs;
  for (int s = 0; s < num_speakers_; ++s)
    specs.push_back(ops::Slice(out, 0, 2 * s, 2));
  return specs;
}

void Decoder::Collect(const std::string& prefix, std::vector<ParamEntry>* out) {
  conv_.Collect(prefix + "conv.", out);
}

}  // namespace csfnet
