// objectives/pit.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_OBJECTIVES_PIT_H_
#define CSFNET_OBJECTIVES_PIT_H_

#include <functional>
#include <vector>

#include "base/tensor.h"

namespace csfnet {

struct PitResult {
  double loss = 0;
  // permutation[i] is the reference assigned to estimate i.
  std::vector<int> permutation;
  // per_pair[i][j] = loss(estimate i, reference j)
  std::vector<std::vector<double>> per_pair;
};

using PairLoss = std::function<double(const Tensor& est, const Tensor& ref)>;

// Exhaustive search over all S! assignments of the pair-loss matrix. Ties
// resolve to the lexicographically first permutation.
PitResult PitFromMatrix(std::vector<std::vector<double>> per_pair);

// Evaluates loss_fn on all S x S pairs, then searches. S must be 2..4.
PitResult Pit(const std::vector<Tensor>& ests, const std::vector<Tensor>& refs,
              const PairLoss& loss_fn);

}  // namespace csfnet

#endif  // CSFNET_OBJECTIVES_PIT_H_
