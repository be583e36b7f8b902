// base/autograd.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_BASE_AUTOGRAD_H_
#define CSFNET_BASE_AUTOGRAD_H_

#include <functional>
#include <memory>
#include <vector>

#include "base/tensor.h"

namespace csfnet {

struct Node;
using NodePtr = std::shared_ptr<Node>;
using BackwardFn = std::function<void(Node& self)>;

// One vertex of the define-by-run graph. A node's backward function reads
// self.grad and accumulates into the grads of self.inputs.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<NodePtr> inputs;
  BackwardFn backward;
  const char* op = "leaf";

  Tensor& EnsureGrad();
  // Grad buffer of input i, or nullptr when that input is not tracked.
  Tensor* InputGrad(size_t i);
  bool TracksInput(size_t i) const { return inputs[i]->requires_grad; }
  // Adds g to input i's grad. Takes the buffer over when that grad is still
  // empty; g must then not alias any other live gradient.
  void PassGrad(size_t i, Tensor&& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  static Var Parameter(Tensor value) { return Var(std::move(value), true); }

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  // Only meaningful for leaves; used by optimizers and checkpoint loading.
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  int64_t dim(int i) const { return node_->value.dim(i); }
  int64_t numel() const { return node_->value.numel(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool r) { node_->requires_grad = r; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  Tensor& mutable_grad() { return node_->EnsureGrad(); }
  void ZeroGrad() { node_->grad = Tensor(); }
  double item() const;

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

bool GradEnabled();

// Disables graph construction in its scope; ops still compute values.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool saved_;
};

// Wraps an op result. The graph edge is recorded only when grad mode is on
// and some input requires grad.
Var MakeResult(Tensor value, std::vector<Var> inputs, BackwardFn backward,
               const char* op);

// Reverse-mode sweep from a scalar root. Leaf grads accumulate across
// calls; intermediate state is released as the sweep passes it.
void Backward(const Var& root);

}  // namespace csfnet

#endif  // CSFNET_BASE_AUTOGRAD_H_
