// base/gemm.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "base/gemm.h"

#include <vector>

#include <Eigen/Core>

namespace csfnet {

namespace {

thread_local Precision g_precision = Precision::kFloat64;

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

Precision MatmulPrecision() { return g_precision; }
void SetMatmulPrecision(Precision p) { g_precision = p; }

template <typename S>
void GemmKernel(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
                const S* a, const S* b, S beta, S* c) {
  if (m == 0 || n == 0) return;
  Eigen::Map<RowMat<S>> cm(c, m, n);
  if (k == 0) {
    if (beta == S(0)) cm.setZero(); else cm *= beta;
    return;
  }
  Eigen::Map<const RowMat<S>> am(a, trans_a ? k : m, trans_a ? m : k);
  Eigen::Map<const RowMat<S>> bm(b, trans_b ? n : k, trans_b ? k : n);
  if (beta == S(0)) {
    if (!trans_a && !trans_b) cm.noalias() = am * bm;
    else if (trans_a && !trans_b) cm.noalias() = am.transpose() * bm;
    else if (!trans_a && trans_b) cm.noalias() = am * bm.transpose();
    else cm.noalias() = am.transpose() * bm.transpose();
  } else {
    if (beta != S(1)) cm *= beta;
    if (!trans_a && !trans_b) cm.noalias() += am * bm;
    else if (trans_a && !trans_b) cm.noalias() += am.transpose() * bm;
    else if (!trans_a && trans_b) cm.noalias() += am * bm.transpose();
    else cm.noalias() += am.transpose() * bm.transpose();
  }
}

template void GemmKernel<double>(bool, bool, int64_t, int64_t, int64_t,
                                 const double*, const double*, double, double*);
template void GemmKernel<float>(bool, bool, int64_t, int64_t, int64_t,
                                const float*, const float*, float, float*);

void Gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          const double* a, const double* b, double beta, double* c) {
  if (g_precision == Precision::kFloat64) {
    GemmKernel<double>(trans_a, trans_b, m, n, k, a, b, beta, c);
    return;
  }
  thread_local std::vector<float> fa, fb, fc;
  fa.assign(a, a + m * k);
  fb.assign(b, b + k * n);
  fc.resize(m * n);
  GemmKernel<float>(trans_a, trans_b, m, n, k, fa.data(), fb.data(), 0.0f,
                    fc.data());
  const int64_t total = m * n;
  if (beta == 0.0) {
    for (int64_t i = 0; i < total; ++i) c[i] = fc[i];
  } else {
    for (int64_t i = 0; i < total; ++i) c[i] = beta * c[i] + fc[i];
  }
}

}  // namespace csfnet
