// separator/mst.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_SEPARATOR_MST_H_
#define CSFNET_SEPARATOR_MST_H_

#include <vector>

#include "base/layers.h"

namespace csfnet {

struct BranchSpec {
  int64_t window = 1;  // I
  int64_t stride = 1;  // J
};

struct MstConfig {
  int64_t channels = 192;   // C
  // Width of the concatenated bidirectional state; each direction gets H/2.
  int64_t hidden = 96;
  int64_t blocks = 6;       // B
  int64_t heads = 4;        // N
  int64_t bins = 257;       // F, fixes the full-band normalization widths
  // Per-head query/key width E is ceil(attn_qk_dim / F).
  int64_t attn_qk_dim = 512;
  std::vector<BranchSpec> branches{{1, 1}, {4, 1}, {8, 1}};

  int64_t QkEmbed() const { return (attn_qk_dim + bins - 1) / bins; }
  // Throws ConfigError on any violated invariant.
  void Validate() const;
};

// unfold -> linear C*I -> H -> BLSTM -> transposed conv (kernel I, stride J)
// back to the original axis length. Forward adds the input back.
class BranchModule : public Module {
 public:
  BranchModule() = default;
  BranchModule(int64_t channels, ops::Axis axis, const BranchSpec& spec,
               int64_t hidden, Rng* rng);

  Var Delta(const Var& x) const;  // [C, T, F] -> [C, T, F]
  Var Forward(const Var& x) const { return ops::Add(x, Delta(x)); }
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  ops::Axis axis() const { return axis_; }
  const BranchSpec& spec() const { return spec_; }

  Linear in_proj;
  BiLstmLayer rnn;
  Var deconv_weight;  // [H, C * I], column c * I + i
  Var deconv_bias;    // [C]

 private:
  int64_t channels_ = 0;
  ops::Axis axis_ = ops::Axis::kTime;
  BranchSpec spec_;
};

// Multi-head self-attention across frames with full-band embeddings.
class FullBandAttention : public Module {
 public:
  FullBandAttention() = default;
  FullBandAttention(const MstConfig& cfg, Rng* rng);

  Var Forward(const Var& x) const;  // [C, T, F] -> [C, T, F]
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  // When set, each forward appends the [T, T] attention weights of every
  // head, in head order.
  void set_probe(std::vector<Tensor>* sink) { probe_ = sink; }

 private:
  struct Head {
    PointwiseConv q, k, v;
    PReluLayer q_act, k_act, v_act;
    LayerNormLayer q_norm, k_norm, v_norm;
  };
  int64_t channels_ = 0, bins_ = 0, embed_ = 0;
  std::vector<Head> heads_;
  PointwiseConv out_proj_;
  PReluLayer out_act_;
  LayerNormLayer out_norm_;
  std::vector<Tensor>* probe_ = nullptr;
};

// Intra-frame spectral stage, sub-band temporal stage, full-band attention.
// Each branch stage computes x + sum_b delta_b(LN(x)), LN over channels at
// every (t, f).
class MstBlock : public Module {
 public:
  MstBlock() = default;
  MstBlock(const MstConfig& cfg, Rng* rng);

  Var Forward(const Var& x) const;
  Var SpectralStage(const Var& x) const;
  Var TemporalStage(const Var& x) const;
  const FullBandAttention& attention() const { return attention_; }
  FullBandAttention& attention() { return attention_; }
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

 private:
  Var BranchStage(const Var& x, const LayerNormLayer& norm,
                  const std::vector<BranchModule>& branches) const;

  int64_t channels_ = 0;
  LayerNormLayer spectral_norm_, temporal_norm_;
  std::vector<BranchModule> spectral_, temporal_;
  FullBandAttention attention_;
};

class MstSeparator : public Module {
 public:
  MstSeparator() = default;
  MstSeparator(const MstConfig& cfg, Rng* rng);

  Var Forward(const Var& x) const;
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  std::vector<MstBlock>& blocks() { return blocks_; }
  const MstConfig& config() const { return cfg_; }

 private:
  MstConfig cfg_;
  std::vector<MstBlock> blocks_;
};

// 1x1 transposed convolution C -> 2S; channels 2s and 2s+1 are the real and
// imaginary parts of speaker s.
class Decoder : public Module {
 public:
  Decoder() = default;
  Decoder(int64_t channels, int num_speakers, Rng* rng);

  std::vector<Var> Forward(const Var& y) const;  // each [2, T, F]
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  int num_speakers() const { return num_speakers_; }

 private:
  int num_speakers_ = 0;
  PointwiseConv conv_;
};

}  // namespace csfnet

#endif  // CSFNET_SEPARATOR_MST_H_
