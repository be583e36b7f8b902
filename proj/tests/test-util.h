// tests/test-util.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_TESTS_TEST_UTIL_H_
#define CSFNET_TESTS_TEST_UTIL_H_

#include "base/autograd.h"
#include "base/ops.h"
#include "base/random.h"

namespace csfnet {
namespace testing {

inline Var RandomVar(Rng* rng, Shape shape, bool grad = true) {
  return Var(rng->NormalTensor(std::move(shape)), grad);
}

// Weighted sum with fixed random weights, so every output element matters.
inline Var Probe(const Var& y, uint64_t seed = 99) {
  Rng rng(seed);
  Var w(rng.NormalTensor(y.shape()));
  return ops::Sum(ops::Mul(y, w));
}

inline bool BitEqual(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (int64_t i = 0; i < a.numel(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace testing
}  // namespace csfnet

#endif  // CSFNET_TESTS_TEST_UTIL_H_
