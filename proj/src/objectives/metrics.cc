// objectives/metrics.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "objectives/metrics.h"

#include <cmath>

#include "base/error.h"

namespace csfnet {

namespace {

struct Projection {
  double ref_energy = 0;   // <s, s>
  double cross = 0;        // <s, e>
  double est_energy = 0;   // <e, e>
  double target = 0;       // |a s|^2
  double residual = 0;     // |e - a s|^2
};

Projection Project(std::span<const double> est, std::span<const double> ref) {
  CSF_CHECK_INPUT(est.size() == ref.size(), "estimate length ", est.size(),
                  " differs from reference length ", ref.size());
  Projection p;
  for (size_t i = 0; i < ref.size(); ++i) {
    p.ref_energy += ref[i] * ref[i];
    p.cross += ref[i] * est[i];
    p.est_energy += est[i] * est[i];
  }
  CSF_CHECK_INPUT(p.ref_energy > 0.0, "reference signal is all zeros");
  const double alpha = p.cross / p.ref_energy;
  p.target = alpha * alpha * p.ref_energy;
  for (size_t i = 0; i < ref.size(); ++i) {
    const double r = est[i] - alpha * ref[i];
    p.residual += r * r;
  }
  return p;
}

}  // namespace

double SiSdrFloor() {
  return 10.0 * std::log10(kSdrEpsilon * kSdrEpsilon / (1.0 + kSdrEpsilon));
}

double SiSdr(std::span<const double> est, std::span<const double> ref) {
  const Projection p = Project(est, ref);
  if (p.est_energy == 0.0) return SiSdrFloor();
  const double floor = kSdrEpsilon * p.est_energy;
  return 10.0 * std::log10((p.target + kSdrEpsilon * floor) /
                           (p.residual + floor));
}

double SiSdr(const Waveform& est, const Waveform& ref) {
  return SiSdr(est.samples, ref.samples);
}

double SiSdrUnscaledTarget(std::span<const double> est,
                           std::span<const double> ref) {
  const Projection p = Project(est, ref);
  if (p.est_energy == 0.0) return SiSdrFloor();
  const double floor = kSdrEpsilon * p.est_energy;
  return 10.0 * std::log10((p.ref_energy + kSdrEpsilon * floor) /
                           (p.residual + floor));
}

double Sdr(std::span<const double> est, std::span<const double> ref) {
  CSF_CHECK_INPUT(est.size() == ref.size(), "estimate length ", est.size(),
                  " differs from reference length ", ref.size());
  double s2 = 0, e2 = 0;
  for (size_t i = 0; i < ref.size(); ++i) {
    s2 += ref[i] * ref[i];
    e2 += (ref[i] - est[i]) * (ref[i] - est[i]);
  }
  CSF_CHECK_INPUT(s2 > 0.0, "reference signal is all zeros");
  return 10.0 * std::log10(s2 / (e2 + kSdrEpsilon * s2));
}

double Sdr(const Waveform& est, const Waveform& ref) {
  return Sdr(est.samples, ref.samples);
}

double SiSdri(const Waveform& est, const Waveform& ref, const Waveform& mix) {
  return SiSdr(est, ref) - SiSdr(mix, ref);
}

double Sdri(const Waveform& est, const Waveform& ref, const Waveform& mix) {
  return Sdr(est, ref) - Sdr(mix, ref);
}

}  // namespace csfnet
