// base/layers.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_BASE_LAYERS_H_
#define CSFNET_BASE_LAYERS_H_

#include <string>
#include <vector>

#include "base/autograd.h"
#include "base/nn-ops.h"
#include "base/ops.h"
#include "base/random.h"

namespace csfnet {

// A named tensor owned by a module. Buffers (batch-norm running statistics)
// are checkpointed but never updated by the optimizer.
struct ParamEntry {
  std::string name;
  Var var;
  bool trainable = true;
};

// Trainable tensor drawn from U(-bound, bound).
Var UniformParam(Shape shape, double bound, Rng* rng);

class Module {
 public:
  virtual ~Module() = default;

  // Appends this module's tensors, names prefixed with `prefix`.
  virtual void Collect(const std::string& prefix,
                       std::vector<ParamEntry>* out) = 0;

  std::vector<ParamEntry> Parameters(const std::string& prefix = "");
  std::vector<Var> TrainableVars();
  int64_t NumTrainable();
  void ZeroGrad();
  void SetRequiresGrad(bool r);
};

// y = x W^T + b over the last axis of a 2-D input [R, In] -> [R, Out].
class Linear : public Module {
 public:
  Linear() = default;
  Linear(int64_t in, int64_t out, Rng* rng, bool bias = true);
  Var Forward(const Var& x) const;
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  Var weight, bias;
};

// Pointwise channel mixing on a channel-first tensor [Cin, ...] -> [Cout, ...].
class PointwiseConv : public Module {
 public:
  PointwiseConv() = default;
  PointwiseConv(int64_t in, int64_t out, Rng* rng, bool bias = true);
  Var Forward(const Var& x) const;
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  Var weight, bias;  // weight [Cout, Cin]
};

class Conv2dLayer : public Module {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(int64_t in, int64_t out, const ops::Conv2dGeometry& geom,
              Rng* rng, bool bias = true);
  // x [N, Cin, H, W].
  Var Forward(const Var& x) const;
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  ops::Conv2dGeometry geom;
  Var weight, bias;
};

class PReluLayer : public Module {
 public:
  PReluLayer();
  Var Forward(const Var& x) const { return ops::PRelu(x, slope); }
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  Var slope;
};

class GroupNormLayer : public Module {
 public:
  GroupNormLayer() = default;
  GroupNormLayer(int64_t groups, int64_t channels);
  Var Forward(const Var& x) const;
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  int64_t groups = 1;
  Var gamma, beta;
};

// Affine layer norm over a D-sized axis; see LayerNormFirstDim/LastDim.
class LayerNormLayer : public Module {
 public:
  LayerNormLayer() = default;
  explicit LayerNormLayer(int64_t dim);
  Var ForwardFirstDim(const Var& x) const;  // [D, P]
  Var ForwardLastDim(const Var& x) const;   // [R, D]
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  Var gamma, beta;
};

class BatchNorm2dLayer : public Module {
 public:
  BatchNorm2dLayer() = default;
  explicit BatchNorm2dLayer(int64_t channels);
  Var Forward(const Var& x, bool training);
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  Var gamma, beta;
  Var running_mean, running_var;  // buffers
};

// Bidirectional LSTM, hidden size per direction `hidden`.
class BiLstmLayer : public Module {
 public:
  BiLstmLayer() = default;
  BiLstmLayer(int64_t in, int64_t hidden, Rng* rng);
  Var Forward(const Var& x) const;  // [B, L, In] -> [B, L, 2 * hidden]
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  ops::LstmDirectionParams fwd, bwd;
};

}  // namespace csfnet

#endif  // CSFNET_BASE_LAYERS_H_
