// objectives/pit.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "objectives/pit.h"

#include <algorithm>
#include <limits>
#include <numeric>

#include "base/error.h"

namespace csfnet {

PitResult PitFromMatrix(std::vector<std::vector<double>> per_pair) {
  const size_t s = per_pair.size();
  CSF_CHECK_INPUT(s >= 1, "empty pair-loss matrix");
  for (const auto& row : per_pair)
    CSF_CHECK_INPUT(row.size() == s, "pair-loss matrix must be square");
  std::vector<int> perm(s);
  std::iota(perm.begin(), perm.end(), 0);
  PitResult r;
  r.loss = std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (size_t i = 0; i < s; ++i) total += per_pair[i][perm[i]];
    const double mean = total / static_cast<double>(s);
    if (mean < r.loss || r.permutation.empty()) {
      r.loss = mean;
      r.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  r.per_pair = std::move(per_pair);
  return r;
}

PitResult Pit(const std::vector<Tensor>& ests, const std::vector<Tensor>& refs,
              const PairLoss& loss_fn) {
  CSF_CHECK_INPUT(ests.size() == refs.size(), "PIT got ", ests.size(),
                  " estimates for ", refs.size(), " references");
  CSF_CHECK_INPUT(ests.size() >= 2 && ests.size() <= 4,
                  "PIT supports 2 to 4 speakers, got ", ests.size());
  const size_t s = ests.size();
  std::vector<std::vector<double>> m(s, std::vector<double>(s));
  for (size_t i = 0; i < s; ++i)
    for (size_t j = 0; j < s; ++j) {
      CSF_CHECK_INPUT(SameShape(ests[i], refs[j]), "PIT length mismatch");
      m[i][j] = loss_fn(ests[i], refs[j]);
    }
  return PitFromMatrix(std::move(m));
}

}  // namespace csfnet
