// base/ops.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Differentiable tensor primitives. Shapes are checked eagerly; every op
// throws InvalidInput on a mismatch.

#ifndef CSFNET_BASE_OPS_H_
#define CSFNET_BASE_OPS_H_

#include <vector>

#include "base/autograd.h"

namespace csfnet {
namespace ops {

Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& a, double s);
Var AddScalar(const Var& a, double s);
Var AddN(const std::vector<Var>& xs);

Var Sum(const Var& a);
Var Mean(const Var& a);

// x has shape [outer, dim(axis), inner]; adds bias[i] along `axis`.
Var AddBias(const Var& x, const Var& bias, int axis);

// Elementwise max(x, 0) + slope * min(x, 0); slope holds one value.
Var PRelu(const Var& x, const Var& slope);
Var Sigmoid(const Var& x);
Var Tanh(const Var& x);
// log(x + offset); throws when an argument is not positive.
Var Log(const Var& x, double offset = 0.0);

// 2-D product with optional transposes (see Gemm).
Var MatMul(const Var& a, const Var& b, bool trans_a = false,
           bool trans_b = false);

Var Reshape(const Var& x, Shape shape);
Var Permute(const Var& x, const std::vector<int>& perm);
Var Concat(const std::vector<Var>& xs, int axis);
Var Slice(const Var& x, int axis, int64_t start, int64_t length);
// Inserts a new axis of size n at position `axis` by replication.
Var Expand(const Var& x, int axis, int64_t n);

// Softmax over the last dimension.
Var SoftmaxLastDim(const Var& x);

// Sum of |a - b| with b constant.
Var L1Distance(const Var& a, const Tensor& b);

}  // namespace ops
}  // namespace csfnet

#endif  // CSFNET_BASE_OPS_H_
