// dsp/mix.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_DSP_MIX_H_
#define CSFNET_DSP_MIX_H_

#include <optional>
#include <vector>

#include "dsp/wave.h"

namespace csfnet {

struct MixResult {
  Waveform mixture;
  std::vector<Waveform> scaled_sources;  // separation targets
  std::optional<Waveform> scaled_noise;
  double peak_scale = 1.0;  // factor applied to keep |mixture| <= 1
};

// Source 0 is the power reference and is left at its own level; source i is
// scaled so that 10*log10(P_i / P_0) = gains_db[i] - gains_db[0]. Noise is
// scaled against the power of the clean sum. Powers are full-utterance
// means. If the mixture would clip, every output is scaled by one factor.
MixResult MixSources(const std::vector<Waveform>& sources,
                     const std::vector<double>& gains_db,
                     const Waveform* noise = nullptr,
                     std::optional<double> noise_snr_db = std::nullopt);

double PowerRatioDb(const Waveform& a, const Waveform& b);

}  // namespace csfnet

#endif  // CSFNET_DSP_MIX_H_
