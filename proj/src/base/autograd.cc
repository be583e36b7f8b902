// base/autograd.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "base/autograd.h"

#include <unordered_set>
#include <utility>

#include "base/error.h"

namespace csfnet {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

Tensor& Node::EnsureGrad() {
  if (grad.empty() && value.numel() > 0) grad = Tensor(value.shape());
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  return grad;
}

Tensor* Node::InputGrad(size_t i) {
  Node& in = *inputs[i];
  if (!in.requires_grad) return nullptr;
  return &in.EnsureGrad();
}

void Node::PassGrad(size_t i, Tensor&& g) {
  Node& in = *inputs[i];
  if (!in.requires_grad) return;
  if (in.grad.empty() && g.shape() == in.value.shape()) {
    in.grad = std::move(g);
  } else {
    in.EnsureGrad().AddInPlace(g);
  }
}

Var::Var(Tensor value, bool requires_grad)
    : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

double Var::item() const {
  CSF_CHECK_INPUT(value().numel() == 1, "item() on tensor of shape ",
                  ShapeString(shape()));
  return value()[0];
}

bool GradEnabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

Var MakeResult(Tensor value, std::vector<Var> inputs, BackwardFn backward,
               const char* op) {
  bool track = false;
  if (g_grad_enabled) {
    for (const Var& v : inputs) track = track || (v.defined() && v.requires_grad());
  }
  Var out(std::move(value), track);
  if (track) {
    Node& n = *out.node();
    n.op = op;
    n.backward = std::move(backward);
    n.inputs.reserve(inputs.size());
    for (Var& v : inputs) n.inputs.push_back(v.node());
  }
  return out;
}

void Backward(const Var& root) {
  CSF_CHECK_INPUT(root.defined() && root.value().numel() == 1,
                  "Backward() needs a scalar root");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  // Shared ownership keeps nodes alive while upstream edges are released.
  std::vector<NodePtr> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<NodePtr, size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    NodePtr node = stack.back().first;
    const size_t next = stack.back().second;
    if (next < node->inputs.size()) {
      ++stack.back().second;
      const NodePtr& child = node->inputs[next];
      if (child->requires_grad && !visited.count(child.get())) {
        visited.insert(child.get());
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->EnsureGrad().Fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = it->get();
    if (!node->backward) continue;  // leaf
    if (!node->grad.empty()) node->backward(*node);
    node->grad = Tensor();
    node->backward = nullptr;
    node->inputs.clear();
  }
}

}  // namespace csfnet
