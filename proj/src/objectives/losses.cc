// objectives/losses.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "objectives/losses.h"

#include <cmath>
#include <numbers>

#include "base/error.h"
#include "base/ops.h"
#include "objectives/metrics.h"

namespace csfnet {

Var SiSdrVar(const Var& est, const Tensor& ref) {
  CSF_CHECK_INPUT(est.value().ndim() == 1 && SameShape(est.value(), ref),
                  "si-sdr expects equal 1-d signals, got ",
                  ShapeString(est.shape()), " and ", ShapeString(ref.shape()));
  const double value = SiSdr(est.value().values(), ref.values());
  return MakeResult(
      Tensor::Scalar(value), {est},
      [ref](Node& self) {
        Tensor* g = self.InputGrad(0);
        if (!g) return;
        const Tensor& e = self.inputs[0]->value;
        const int64_t n = e.numel();
        double q = 0, p = 0, r = 0;
        for (int64_t i = 0; i < n; ++i) {
          q += ref[i] * ref[i];
          p += ref[i] * e[i];
          r += e[i] * e[i];
        }
        if (r == 0.0) return;
        const double alpha = p / q;
        double resid = 0;
        for (int64_t i = 0; i < n; ++i) {
          const double d = e[i] - alpha * ref[i];
          resid += d * d;
        }
        const double num = alpha * alpha * q + kSdrEpsilon * kSdrEpsilon * r;
        const double den = resid + kSdrEpsilon * r;
        const double k = self.grad[0] * 10.0 / std::numbers::ln10;
        for (int64_t i = 0; i < n; ++i) {
          const double proj = 2.0 * alpha * ref[i];
          const double floor = 2.0 * kSdrEpsilon * e[i];
          const double dnum = proj + kSdrEpsilon * floor;
          const double dden = 2.0 * e[i] - proj + floor;
          (*g)[i] += k * (dnum / num - dden / den);
        }
      },
      "si_sdr");
}

Var MagnitudeLoss(const Var& est, const Tensor& ref, const StftConfig& cfg) {
  CSF_CHECK_INPUT(SameShape(est.value(), ref), "magnitude loss length mismatch");
  Tensor ref_mag;
  {
    NoGradGuard guard;
    ref_mag = ops::Magnitude(Var(StftSamples(ref, cfg))).value();
  }
  double norm = 0;
  for (double v : ref_mag.values()) norm += v;
  CSF_CHECK_INPUT(norm > 0.0, "reference signal is all zeros");
  Var mag = ops::Magnitude(ops::Stft(est, cfg));
  return ops::Scale(ops::L1Distance(mag, ref_mag), 1.0 / norm);
}

Var TotalLoss(const Var& est, const Tensor& ref, const StftConfig& cfg) {
  return ops::Sub(MagnitudeLoss(est, ref, cfg), SiSdrVar(est, ref));
}

double MagnitudeLossValue(const Tensor& est, const Tensor& ref,
                          const StftConfig& cfg) {
  NoGradGuard guard;
  return MagnitudeLoss(Var(est), ref, cfg).item();
}

double TotalLossValue(const Tensor& est, const Tensor& ref,
                      const StftConfig& cfg) {
  NoGradGuard guard;
  return TotalLoss(Var(est), ref, cfg).item();
}

}  // namespace csfnet
