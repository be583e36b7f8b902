// base/ops.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "base/ops.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "base/error.h"
#include "base/gemm.h"

namespace csfnet {
namespace ops {

namespace {

void CheckSame(const Var& a, const Var& b, const char* op) {
  CSF_CHECK_INPUT(a.shape() == b.shape(), op, ": shape mismatch ",
                  ShapeString(a.shape()), " vs ", ShapeString(b.shape()));
}

// Splits shape around `axis` into (outer, n, inner).
void AxisSplit(const Shape& s, int axis, int64_t* outer, int64_t* n,
               int64_t* inner) {
  *outer = 1;
  *inner = 1;
  for (int i = 0; i < axis; ++i) *outer *= s[i];
  *n = s[axis];
  for (size_t i = axis + 1; i < s.size(); ++i) *inner *= s[i];
}

int NormalizeAxis(int axis, int ndim) {
  if (axis < 0) axis += ndim;
  CSF_CHECK_INPUT(axis >= 0 && axis < ndim, "axis ", axis,
                  " out of range for rank ", ndim);
  return axis;
}

// Applies a permutation; out.shape[i] = in.shape[perm[i]].
Tensor PermuteTensor(const Tensor& in, const std::vector<int>& perm) {
  const int nd = in.ndim();
  Shape out_shape(nd);
  for (int i = 0; i < nd; ++i) out_shape[i] = in.shape()[perm[i]];
  std::vector<int64_t> in_strides(nd, 1);
  for (int i = nd - 2; i >= 0; --i)
    in_strides[i] = in_strides[i + 1] * in.shape()[i + 1];
  std::vector<int64_t> step(nd);
  for (int i = 0; i < nd; ++i) step[i] = in_strides[perm[i]];

  Tensor out(out_shape);
  const int64_t total = out.numel();
  if (total == 0) return out;
  std::vector<int64_t> idx(nd, 0);
  const double* src = in.data();
  double* dst = out.data();
  // Innermost output axis is walked with a fixed input stride.
  const int64_t inner_n = nd ? out_shape[nd - 1] : 1;
  const int64_t inner_step = nd ? step[nd - 1] : 0;
  int64_t base = 0;
  for (int64_t o = 0; o < total; o += inner_n) {
    for (int64_t j = 0; j < inner_n; ++j) dst[o + j] = src[base + j * inner_step];
    for (int d = nd - 2; d >= 0; --d) {
      ++idx[d];
      base += step[d];
      if (idx[d] < out_shape[d]) break;
      base -= step[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  return out;
}

std::vector<int> InversePerm(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
  return inv;
}

}  // namespace

Var Add(const Var& a, const Var& b) {
  CheckSame(a, b, "Add");
  Tensor out = a.value();
  out.AddInPlace(b.value());
  return MakeResult(std::move(out), {a, b}, [](Node& self) {
    if (self.TracksInput(0)) self.PassGrad(0, Tensor(self.grad));
    self.PassGrad(1, std::move(self.grad));
  }, "Add");
}

Var Sub(const Var& a, const Var& b) {
  CheckSame(a, b, "Sub");
  Tensor out = a.value();
  out.AddInPlace(b.value(), -1.0);
  return MakeResult(std::move(out), {a, b}, [](Node& self) {
    if (Tensor* g = self.InputGrad(0)) g->AddInPlace(self.grad);
    if (Tensor* g = self.InputGrad(1)) g->AddInPlace(self.grad, -1.0);
  }, "Sub");
}

Var Mul(const Var& a, const Var& b) {
  CheckSame(a, b, "Mul");
  Tensor out(a.shape());
  const int64_t n = out.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a.value()[i] * b.value()[i];
  return MakeResult(std::move(out), {a, b}, [n](Node& self) {
    const Tensor& av = self.inputs[0]->value;
    const Tensor& bv = self.inputs[1]->value;
    if (Tensor* g = self.InputGrad(0))
      for (int64_t i = 0; i < n; ++i) (*g)[i] += self.grad[i] * bv[i];
    if (Tensor* g = self.InputGrad(1))
      for (int64_t i = 0; i < n; ++i) (*g)[i] += self.grad[i] * av[i];
  }, "Mul");
}

Var Scale(const Var& a, double s) {
  Tensor out = a.value();
  out.Scale(s);
  return MakeResult(std::move(out), {a}, [s](Node& self) {
    self.grad.Scale(s);
    self.PassGrad(0, std::move(self.grad));
  }, "Scale");
}

Var AddScalar(const Var& a, double s) {
  Tensor out = a.value();
  for (double& v : out.values()) v += s;
  return MakeResult(std::move(out), {a}, [](Node& self) {
    self.PassGrad(0, std::move(self.grad));
  }, "AddScalar");
}

Var AddN(const std::vector<Var>& xs) {
  CSF_CHECK_INPUT(!xs.empty(), "AddN of nothing");
  Tensor out = xs[0].value();
  for (size_t i = 1; i < xs.size(); ++i) {
    CheckSame(xs[0], xs[i], "AddN");
    out.AddInPlace(xs[i].value());
  }
  return MakeResult(std::move(out), xs, [](Node& self) {
    const size_t last = self.inputs.size() - 1;
    for (size_t i = 0; i < last; ++i)
      if (self.TracksInput(i)) self.PassGrad(i, Tensor(self.grad));
    self.PassGrad(last, std::move(self.grad));
  }, "AddN");
}

Var Sum(const Var& a) {
  return MakeResult(Tensor::Scalar(a.value().Sum()), {a}, [](Node& self) {
    if (Tensor* g = self.InputGrad(0)) {
      const double s = self.grad[0];
      for (double& v : g->values()) v += s;
    }
  }, "Sum");
}

Var Mean(const Var& a) {
  const double n = static_cast<double>(a.numel());
  CSF_CHECK_INPUT(n > 0, "Mean of empty tensor");
  return Scale(Sum(a), 1.0 / n);
}

Var AddBias(const Var& x, const Var& bias, int axis) {
  axis = NormalizeAxis(axis, x.value().ndim());
  int64_t outer, n, inner;
  AxisSplit(x.shape(), axis, &outer, &n, &inner);
  CSF_CHECK_INPUT(bias.numel() == n, "AddBias: bias size ", bias.numel(),
                  " does not match axis size ", n);
  Tensor out = x.value();
  const double* b = bias.value().data();
  double* o = out.data();
  for (int64_t p = 0; p < outer; ++p)
    for (int64_t i = 0; i < n; ++i) {
      double* row = o + (p * n + i) * inner;
      for (int64_t q = 0; q < inner; ++q) row[q] += b[i];
    }
  return MakeResult(std::move(out), {x, bias}, [outer, n, inner](Node& self) {
    if (Tensor* g = self.InputGrad(1)) {
      const double* go = self.grad.data();
      for (int64_t p = 0; p < outer; ++p)
        for (int64_t i = 0; i < n; ++i) {
          const double* row = go + (p * n + i) * inner;
          double acc = 0.0;
          for (int64_t q = 0; q < inner; ++q) acc += row[q];
          (*g)[i] += acc;
        }
    }
    self.PassGrad(0, std::move(self.grad));
  }, "AddBias");
}

Var PRelu(const Var& x, const Var& slope) {
  CSF_CHECK_INPUT(slope.numel() == 1, "PRelu expects a single slope");
  const double a = slope.value()[0];
  Tensor out = x.value();
  for (double& v : out.values())
    if (v < 0) v *= a;
  return MakeResult(std::move(out), {x, slope}, [](Node& self) {
    const Tensor& xv = self.inputs[0]->value;
    const double a = self.inputs[1]->value[0];
    const int64_t n = xv.numel();
    if (Tensor* g = self.InputGrad(1)) {
      double acc = 0.0;
      for (int64_t i = 0; i < n; ++i)
        if (xv[i] < 0) acc += xv[i] * self.grad[i];
      (*g)[0] += acc;
    }
    if (self.TracksInput(0)) {
      for (int64_t i = 0; i < n; ++i)
        if (xv[i] < 0) self.grad[i] *= a;
      self.PassGrad(0, std::move(self.grad));
    }
  }, "PRelu");
}

Var Sigmoid(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  Tensor saved = out;
  return MakeResult(std::move(out), {x}, [saved = std::move(saved)](Node& self) {
    if (Tensor* g = self.InputGrad(0))
      for (int64_t i = 0; i < saved.numel(); ++i)
        (*g)[i] += self.grad[i] * saved[i] * (1.0 - saved[i]);
  }, "Sigmoid");
}

Var Tanh(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.values()) v = std::tanh(v);
  Tensor saved = out;
  return MakeResult(std::move(out), {x}, [saved = std::move(saved)](Node& self) {
    if (Tensor* g = self.InputGrad(0))
      for (int64_t i = 0; i < saved.numel(); ++i)
        (*g)[i] += self.grad[i] * (1.0 - saved[i] * saved[i]);
  }, "Tanh");
}

Var Log(const Var& x, double offset) {
  Tensor out = x.value();
  for (double& v : out.values()) {
    CSF_CHECK_INPUT(v + offset > 0.0, "Log of a non-positive value");
    v = std::log(v + offset);
  }
  return MakeResult(std::move(out), {x}, [offset](Node& self) {
    if (Tensor* g = self.InputGrad(0)) {
      const Tensor& xv = self.inputs[0]->value;
      for (int64_t i = 0; i < xv.numel(); ++i)
        (*g)[i] += self.grad[i] / (xv[i] + offset);
    }
  }, "Log");
}

Var MatMul(const Var& a, const Var& b, bool trans_a, bool trans_b) {
  CSF_CHECK_INPUT(a.value().ndim() == 2 && b.value().ndim() == 2,
                  "MatMul expects 2-D operands, got ", ShapeString(a.shape()),
                  " and ", ShapeString(b.shape()));
  const int64_t m = trans_a ? a.dim(1) : a.dim(0);
  const int64_t k = trans_a ? a.dim(0) : a.dim(1);
  const int64_t kb = trans_b ? b.dim(1) : b.dim(0);
  const int64_t n = trans_b ? b.dim(0) : b.dim(1);
  CSF_CHECK_INPUT(k == kb, "MatMul inner dimension mismatch ",
                  ShapeString(a.shape()), " x ", ShapeString(b.shape()));
  Tensor out(Shape{m, n});
  Gemm(trans_a, trans_b, m, n, k, a.value().data(), b.value().data(), 0.0,
       out.data());
  return MakeResult(std::move(out), {a, b},
                    [m, n, k, trans_a, trans_b](Node& self) {
    const Tensor& av = self.inputs[0]->value;
    const Tensor& bv = self.inputs[1]->value;
    const double* g = self.grad.data();
    if (Tensor* ga = self.InputGrad(0)) {
      // dA = G * op(B)^T, stored in A's layout.
      if (!trans_a) Gemm(false, !trans_b, m, k, n, g, bv.data(), 1.0, ga->data());
      else Gemm(trans_b, true, k, m, n, bv.data(), g, 1.0, ga->data());
    }
    if (Tensor* gb = self.InputGrad(1)) {
      // dB = op(A)^T * G, stored in B's layout.
      if (!trans_b) Gemm(!trans_a, false, k, n, m, av.data(), g, 1.0, gb->data());
      else Gemm(true, trans_a, n, k, m, g, av.data(), 1.0, gb->data());
    }
  }, "MatMul");
}

Var Reshape(const Var& x, Shape shape) {
  Shape old = x.shape();
  Tensor out = x.value().Reshaped(std::move(shape));
  return MakeResult(std::move(out), {x}, [old](Node& self) {
    self.PassGrad(0, std::move(self.grad).Reshaped(old));
  }, "Reshape");
}

Var Permute(const Var& x, const std::vector<int>& perm) {
  CSF_CHECK_INPUT(static_cast<int>(perm.size()) == x.value().ndim(),
                  "Permute rank mismatch");
  std::vector<int> check = perm;
  std::sort(check.begin(), check.end());
  for (size_t i = 0; i < check.size(); ++i)
    CSF_CHECK_INPUT(check[i] == static_cast<int>(i), "Permute: not a permutation");
  Tensor out = PermuteTensor(x.value(), perm);
  return MakeResult(std::move(out), {x}, [inv = InversePerm(perm)](Node& self) {
    if (self.TracksInput(0)) self.PassGrad(0, PermuteTensor(self.grad, inv));
  }, "Permute");
}

Var Concat(const std::vector<Var>& xs, int axis) {
  CSF_CHECK_INPUT(!xs.empty(), "Concat of nothing");
  const Shape& s0 = xs[0].shape();
  axis = NormalizeAxis(axis, static_cast<int>(s0.size()));
  Shape out_shape = s0;
  out_shape[axis] = 0;
  std::vector<int64_t> sizes;
  for (const Var& x : xs) {
    const Shape& s = x.shape();
    CSF_CHECK_INPUT(s.size() == s0.size(), "Concat rank mismatch");
    for (size_t d = 0; d < s.size(); ++d)
      CSF_CHECK_INPUT(static_cast<int>(d) == axis || s[d] == s0[d],
                      "Concat shape mismatch ", ShapeString(s), " vs ",
                      ShapeString(s0));
    sizes.push_back(s[axis]);
    out_shape[axis] += s[axis];
  }
  int64_t outer, n, inner;
  AxisSplit(out_shape, axis, &outer, &n, &inner);
  Tensor out(out_shape);
  int64_t offset = 0;
  for (size_t j = 0; j < xs.size(); ++j) {
    const double* src = xs[j].value().data();
    const int64_t block = sizes[j] * inner;
    for (int64_t p = 0; p < outer; ++p)
      std::copy(src + p * block, src + (p + 1) * block,
                out.data() + p * n * inner + offset * inner);
    offset += sizes[j];
  }
  return MakeResult(std::move(out), xs, [sizes, outer, n, inner](Node& self) {
    int64_t offset = 0;
    for (size_t j = 0; j < sizes.size(); ++j) {
      const int64_t block = sizes[j] * inner;
      if (Tensor* g = self.InputGrad(j)) {
        for (int64_t p = 0; p < outer; ++p) {
          const double* src = self.grad.data() + p * n * inner + offset * inner;
          double* dst = g->data() + p * block;
          for (int64_t q = 0; q < block; ++q) dst[q] += src[q];
        }
      }
      offset += sizes[j];
    }
  }, "Concat");
}

Var Slice(const Var& x, int axis, int64_t start, int64_t length) {
  axis = NormalizeAxis(axis, x.value().ndim());
  int64_t outer, n, inner;
  AxisSplit(x.shape(), axis, &outer, &n, &inner);
  CSF_CHECK_INPUT(start >= 0 && length >= 0 && start + length <= n,
                  "Slice [", start, ", ", start + length, ") out of range ", n);
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  Tensor out(out_shape);
  for (int64_t p = 0; p < outer; ++p) {
    const double* src = x.value().data() + (p * n + start) * inner;
    std::copy(src, src + length * inner, out.data() + p * length * inner);
  }
  return MakeResult(std::move(out), {x},
                    [outer, n, inner, start, length](Node& self) {
    if (Tensor* g = self.InputGrad(0)) {
      for (int64_t p = 0; p < outer; ++p) {
        const double* src = self.grad.data() + p * length * inner;
        double* dst = g->data() + (p * n + start) * inner;
        for (int64_t q = 0; q < length * inner; ++q) dst[q] += src[q];
      }
    }
  }, "Slice");
}

Var Expand(const Var& x, int axis, int64_t n) {
  const int nd = x.value().ndim();
  CSF_CHECK_INPUT(axis >= 0 && axis <= nd, "Expand axis out of range");
  CSF_CHECK_INPUT(n >= 1, "Expand size must be positive");
  Shape out_shape = x.shape();
  out_shape.insert(out_shape.begin() + axis, n);
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= x.shape()[i];
  for (int i = axis; i < nd; ++i) inner *= x.shape()[i];
  Tensor out(out_shape);
  for (int64_t p = 0; p < outer; ++p) {
    const double* src = x.value().data() + p * inner;
    for (int64_t r = 0; r < n; ++r)
      std::copy(src, src + inner, out.data() + (p * n + r) * inner);
  }
  return MakeResult(std::move(out), {x}, [outer, inner, n](Node& self) {
    if (Tensor* g = self.InputGrad(0)) {
      for (int64_t p = 0; p < outer; ++p)
        for (int64_t r = 0; r < n; ++r) {
          const double* src = self.grad.data() + (p * n + r) * inner;
          double* dst = g->data() + p * inner;
          for (int64_t q = 0; q < inner; ++q) dst[q] += src[q];
        }
    }
  }, "Expand");
}

Var SoftmaxLastDim(const Var& x) {
  CSF_CHECK_INPUT(x.value().ndim() >= 1, "Softmax of a scalar");
  const int64_t d = x.shape().back();
  const int64_t rows = x.numel() / std::max<int64_t>(d, 1);
  Tensor out = x.value();
  for (int64_t r = 0; r < rows; ++r) {
    double* row = out.data() + r * d;
    const double mx = *std::max_element(row, row + d);
    double z = 0.0;
    for (int64_t j = 0; j < d; ++j) z += (row[j] = std::exp(row[j] - mx));
    for (int64_t j = 0; j < d; ++j) row[j] /= z;
  }
  Tensor saved = out;
  return MakeResult(std::move(out), {x},
                    [saved = std::move(saved), rows, d](Node& self) {
    if (Tensor* g = self.InputGrad(0)) {
      for (int64_t r = 0; r < rows; ++r) {
        const double* y = saved.data() + r * d;
        const double* gy = self.grad.data() + r * d;
        double dot = 0.0;
        for (int64_t j = 0; j < d; ++j) dot += y[j] * gy[j];
        double* gx = g->data() + r * d;
        for (int64_t j = 0; j < d; ++j) gx[j] += y[j] * (gy[j] - dot);
      }
    }
  }, "Softmax");
}

Var L1Distance(const Var& a, const Tensor& b) {
  CSF_CHECK_INPUT(a.shape() == b.shape(), "L1Distance shape mismatch");
  double acc = 0.0;
  for (int64_t i = 0; i < b.numel(); ++i) acc += std::abs(a.value()[i] - b[i]);
  return MakeResult(Tensor::Scalar(acc), {a}, [b](Node& self) {
    if (Tensor* g = self.InputGrad(0)) {
      const Tensor& av = self.inputs[0]->value;
      const double s = self.grad[0];
      for (int64_t i = 0; i < b.numel(); ++i) {
        const double diff = av[i] - b[i];
        if (diff > 0) (*g)[i] += s;
        else if (diff < 0) (*g)[i] -= s;
      }
    }
  }, "L1Distance");
}

}  // namespace ops
}  // namespace csfnet
