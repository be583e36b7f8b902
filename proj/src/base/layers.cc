// base/layers.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "base/layers.h"

#include <cmath>

#include "base/error.h"
#include "base/ops.h"

namespace csfnet {

Var UniformParam(Shape shape, double bound, Rng* rng) {
  return Var::Parameter(rng->UniformTensor(std::move(shape), -bound, bound));
}

std::vector<ParamEntry> Module::Parameters(const std::string& prefix) {
  std::vector<ParamEntry> out;
  Collect(prefix, &out);
  return out;
}

std::vector<Var> Module::TrainableVars() {
  std::vector<Var> vars;
  for (ParamEntry& e : Parameters())
    if (e.trainable) vars.push_back(e.var);
  return vars;
}

int64_t Module::NumTrainable() {
  int64_t n = 0;
  for (const Var& v : TrainableVars()) n += v.numel();
  return n;
}

void Module::ZeroGrad() {
  for (Var& v : TrainableVars()) v.ZeroGrad();
}

void Module::SetRequiresGrad(bool r) {
  for (Var& v : TrainableVars()) v.set_requires_grad(r);
}

Linear::Linear(int64_t in, int64_t out, Rng* rng, bool with_bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = UniformParam({out, in}, bound, rng);
  if (with_bias) bias = UniformParam({out}, bound, rng);
}

Var Linear::Forward(const Var& x) const {
  Var y = ops::MatMul(x, weight, false, true);
  return bias.defined() ? ops::AddBias(y, bias, 1) : y;
}

void Linear::Collect(const std::string& prefix, std::vector<ParamEntry>* out) {
  out->push_back({prefix + "weight", weight});
  if (bias.defined()) out->push_back({prefix + "bias", bias});
}

PointwiseConv::PointwiseConv(int64_t in, int64_t out, Rng* rng,
                             bool with_bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = UniformParam({out, in}, bound, rng);
  if (with_bias) bias = UniformParam({out}, bound, rng);
}

Var PointwiseConv::Forward(const Var& x) const {
  Shape shape = x.shape();
  CSF_CHECK_INPUT(!shape.empty() && shape[0] == weight.dim(1),
                  "PointwiseConv expects ", weight.dim(1), " channels, got ",
                  ShapeString(shape));
  const int64_t rest = x.numel() / shape[0];
  Var y = ops::MatMul(weight, ops::Reshape(x, {shape[0], rest}));
  if (bias.defined()) y = ops::AddBias(y, bias, 0);
  shape[0] = weight.dim(0);
  return ops::Reshape(y, shape);
}

void PointwiseConv::Collect(const std::string& prefix,
                            std::vector<ParamEntry>* out) {
  out->push_back({prefix + "weight", weight});
  if (bias.defined()) out->push_back({prefix + "bias", bias});
}

Conv2dLayer::Conv2dLayer(int64_t in, int64_t out,
                         const ops::Conv2dGeometry& g, Rng* rng,
                         bool with_bias)
    : geom(g) {
  const double fan_in = static_cast<double>(in * g.kernel_h * g.kernel_w);
  const double bound = 1.0 / std::sqrt(fan_in);
  weight = UniformParam({out, in, g.kernel_h, g.kernel_w}, bound, rng);
  if (with_bias) bias = UniformParam({out}, bound, rng);
}

Var Conv2dLayer::Forward(const Var& x) const {
  return ops::Conv2d(x, weight, bias, geom);
}

void Conv2dLayer::Collect(const std::string& prefix,
                          std::vector<ParamEntry>* out) {
  out->push_back({prefix + "weight", weight});
  if (bias.defined()) out->push_back({prefix + "bias", bias});
}

PReluLayer::PReluLayer() : slope(Var::Parameter(Tensor(Shape{1}, 0.25))) {}

void PReluLayer::Collect(const std::string& prefix,
                         std::vector<ParamEntry>* out) {
  out->push_back({prefix + "slope", slope});
}

GroupNormLayer::GroupNormLayer(int64_t g, int64_t channels)
    : groups(g),
      gamma(Var::Parameter(Tensor(Shape{channels}, 1.0))),
      beta(Var::Parameter(Tensor(Shape{channels}, 0.0))) {
  CSF_CHECK_CONFIG(g > 0 && channels % g == 0, "group count ", g,
                   " does not divide ", channels, " channels");
}

Var GroupNormLayer::Forward(const Var& x) const {
  return ops::GroupNorm(x, groups, gamma, beta);
}

void GroupNormLayer::Collect(const std::string& prefix,
                             std::vector<ParamEntry>* out) {
  out->push_back({prefix + "gamma", gamma});
  out->push_back({prefix + "beta", beta});
}

LayerNormLayer::LayerNormLayer(int64_t dim)
    : gamma(Var::Parameter(Tensor(Shape{dim}, 1.0))),
      beta(Var::Parameter(Tensor(Shape{dim}, 0.0))) {}

Var LayerNormLayer::ForwardFirstDim(const Var& x) const {
  return ops::LayerNormFirstDim(x, gamma, beta);
}

Var LayerNormLayer::ForwardLastDim(const Var& x) const {
  return ops::LayerNormLastDim(x, gamma, beta);
}

void LayerNormLayer::Collect(const std::string& prefix,
                             std::vector<ParamEntry>* out) {
  out->push_back({prefix + "gamma", gamma});
  out->push_back({prefix + "beta", beta});
}

BatchNorm2dLayer::BatchNorm2dLayer(int64_t channels)
    : gamma(Var::Parameter(Tensor(Shape{channels}, 1.0))),
      beta(Var::Parameter(Tensor(Shape{channels}, 0.0))),
      running_mean(Tensor(Shape{channels}, 0.0)),
      running_var(Tensor(Shape{channels}, 1.0)) {}

Var BatchNorm2dLayer::Forward(const Var& x, bool training) {
  // Running statistics only move when a graph is being recorded, so
  // inference calls never mutate the layer.
  const bool update = training && GradEnabled();
  if (training && !update) {
    Tensor rm = running_mean.value(), rv = running_var.value();
    return ops::BatchNorm2d(x, gamma, beta, &rm, &rv, true);
  }
  return ops::BatchNorm2d(x, gamma, beta, &running_mean.mutable_value(),
                          &running_var.mutable_value(), training);
}

void BatchNorm2dLayer::Collect(const std::string& prefix,
                               std::vector<ParamEntry>* out) {
  out->push_back({prefix + "gamma", gamma});
  out->push_back({prefix + "beta", beta});
  out->push_back({prefix + "running_mean", running_mean, false});
  out->push_back({prefix + "running_var", running_var, false});
}

BiLstmLayer::BiLstmLayer(int64_t in, int64_t hidden, Rng* rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (ops::LstmDirectionParams* p : {&fwd, &bwd}) {
    p->w_ih = UniformParam({4 * hidden, in}, bound, rng);
    p->w_hh = UniformParam({4 * hidden, hidden}, bound, rng);
    p->bias = UniformParam({4 * hidden}, bound, rng);
  }
}

Var BiLstmLayer::Forward(const Var& x) const { return ops::BiLstm(x, fwd, bwd); }

void BiLstmLayer::Collect(const std::string& prefix,
                          std::vector<ParamEntry>* out) {
  out->push_back({prefix + "fwd.w_ih", fwd.w_ih});
  out->push_back({prefix + "fwd.w_hh", fwd.w_hh});
  out->push_back({prefix + "fwd.bias", fwd.bias});
  out->push_back({prefix + "bwd.w_ih", bwd.w_ih});
  out->push_back({prefix + "bwd.w_hh", bwd.w_hh});
  out->push_back({prefix + "bwd.bias", bwd.bias});
}

}  // namespace csfnet
