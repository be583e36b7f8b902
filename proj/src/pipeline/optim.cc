// pipeline/optim.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pipeline/optim.h"

#include <cmath>

#include "base/error.h"

namespace csfnet {

Adam::Adam(std::vector<ParamEntry> params, double lr, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  for (const auto& p : params_) {
    m_.emplace_back(p.var.shape());
    v_.emplace_back(p.var.shape());
  }
}

void Adam::Step() {
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (size_t k = 0; k < params_.size(); ++k) {
    Var& var = params_[k].var;
    if (!var.has_grad()) continue;
    const double* g = var.grad().data();
    double* w = var.mutable_value().data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (int64_t i = 0; i < var.numel(); ++i) {
      m[i] = beta1_ * m[i] + (1 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1 - beta2_) * g[i] * g[i];
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

void Adam::ZeroGrad() {
  for (auto& p : params_) p.var.ZeroGrad();
}

std::map<std::string, Tensor> Adam::State() const {
  std::map<std::string, Tensor> out;
  for (size_t k = 0; k < params_.size(); ++k) {
    out["m." + params_[k].name] = m_[k];
    out["v." + params_[k].name] = v_[k];
  }
  return out;
}

void Adam::LoadState(const std::map<std::string, Tensor>& state) {
  for (size_t k = 0; k < params_.size(); ++k) {
    for (auto [prefix, buf] : {std::pair{"m.", &m_[k]}, std::pair{"v.", &v_[k]}}) {
      auto it = state.find(prefix + params_[k].name);
      CSF_CHECK_INPUT(it != state.end(), "optimizer state lacks ", prefix,
                      params_[k].name);
      CSF_CHECK_INPUT(it->second.shape() == buf->shape(),
                      "optimizer state shape mismatch for ", params_[k].name);
      *buf = it->second;
    }
  }
}

double GlobalGradNorm(const std::vector<ParamEntry>& params) {
  double sq = 0;
  for (const auto& p : params) {
    if (!p.var.has_grad()) continue;
    for (double g : p.var.grad().values()) sq += g * g;
  }
  return std::sqrt(sq);
}

double ClipGradNorm(const std::vector<ParamEntry>& params, double max_norm) {
  const double norm = GlobalGradNorm(params);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& p : params) {
      Var v = p.var;
      if (v.has_grad()) v.mutable_grad().Scale(scale);
    }
  }
  return norm;
}

double PlateauScheduler::Step(double metric, double lr) {
  if (metric < best_) {
    best_ = metric;
    bad_epochs_ = 0;
    return lr;
  }
  if (++bad_epochs_ >= patience_) {
    bad_epochs_ = 0;
    return lr * factor_;
  }
  return lr;
}

}  // namespace csfnet
