// objectives/metrics.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_OBJECTIVES_METRICS_H_
#define CSFNET_OBJECTIVES_METRICS_H_

#include <span>

#include "dsp/wave.h"

namespace csfnet {

// Relative floor used in every ratio; a perfect estimate scores about 120 dB.
inline constexpr double kSdrEpsilon = 1e-12;

// Scale-invariant SDR in dB with the projected target in the numerator:
//   a = <s, e> / <s, s>,
//   10 log10((|a s|^2 + eps^2 R) / (|e - a s|^2 + eps R)),  R = |e|^2.
// The numerator floor only matters for estimates orthogonal to the target.
// Throws InvalidInput on a silent reference or a length mismatch; a silent
// estimate scores the same floor as an orthogonal one.
double SiSdr(std::span<const double> est, std::span<const double> ref);
double SiSdr(const Waveform& est, const Waveform& ref);

// Same ratio with the unscaled target |s|^2 in the numerator. Not scale
// invariant in the estimate; kept to compare against the standard form.
double SiSdrUnscaledTarget(std::span<const double> est,
                           std::span<const double> ref);

// Plain SDR without a distortion filter: 10 log10(|s|^2 / |s - e|^2).
double Sdr(std::span<const double> est, std::span<const double> ref);
double Sdr(const Waveform& est, const Waveform& ref);

double SiSdri(const Waveform& est, const Waveform& ref, const Waveform& mix);
double Sdri(const Waveform& est, const Waveform& ref, const Waveform& mix);

double SiSdrFloor();

}  // namespace csfnet

#endif  // CSFNET_OBJECTIVES_METRICS_H_
