// base/gemm.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_BASE_GEMM_H_
#define CSFNET_BASE_GEMM_H_

#include <cstdint>

namespace csfnet {

// Arithmetic precision of matrix products. Tensors are always stored as
// float64; in kFloat32 mode operands are rounded to float32 for the product
// and the result widened back. Both modes are deterministic.
enum class Precision { kFloat64, kFloat32 };

Precision MatmulPrecision();
void SetMatmulPrecision(Precision p);

class PrecisionScope {
 public:
  explicit PrecisionScope(Precision p) : saved_(MatmulPrecision()) {
    SetMatmulPrecision(p);
  }
  ~PrecisionScope() { SetMatmulPrecision(saved_); }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  Precision saved_;
};

// Row-major C(m x n) = beta * C + op(A) * op(B), op(A) is m x k, op(B) is
// k x n. A is stored k x m when trans_a, B is stored n x k when trans_b.
template <typename S>
void GemmKernel(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
                const S* a, const S* b, S beta, S* c);

// Dispatches on MatmulPrecision().
void Gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          const double* a, const double* b, double beta, double* c);

}  // namespace csfnet

#endif  // CSFNET_BASE_GEMM_H_
