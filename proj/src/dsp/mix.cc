// dsp/mix.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dsp/mix.h"

#include <cmath>

#include "base/error.h"

namespace csfnet {

namespace {

void ScaleInPlace(Waveform* w, double s) {
  for (double& v : w->samples) v *= s;
}

void CheckCompatible(const Waveform& ref, const Waveform& w, const char* what) {
  CSF_CHECK_INPUT(w.size() == ref.size(), what, " length ", w.size(),
                  " differs from reference length ", ref.size());
  CSF_CHECK_INPUT(w.sample_rate == ref.sample_rate, what, " rate ",
                  w.sample_rate, " differs from ", ref.sample_rate);
}

}  // namespace

double PowerRatioDb(const Waveform& a, const Waveform& b) {
  return 10.0 * std::log10(a.Power() / b.Power());
}

MixResult MixSources(const std::vector<Waveform>& sources,
                     const std::vector<double>& gains_db,
                     const Waveform* noise,
                     std::optional<double> noise_snr_db) {
  CSF_CHECK_INPUT(sources.size() >= 2 && sources.size() <= 4,
                  "mixing needs 2 to 4 sources, got ", sources.size());
  CSF_CHECK_INPUT(gains_db.size() == sources.size(), "got ", gains_db.size(),
                  " gains for ", sources.size(), " sources");
  CSF_CHECK_INPUT((noise == nullptr) == !noise_snr_db.has_value(),
                  "noise and noise SNR must be given together");
  const Waveform& ref = sources[0];
  CSF_CHECK_INPUT(ref.size() > 0, "empty source");
  for (size_t i = 0; i < sources.size(); ++i) {
    sources[i].Validate();
    CheckCompatible(ref, sources[i], "source");
    if (sources[i].Power() == 0.0)
      throw DegenerateSource(internal::Concat("source ", i, " is silent"));
  }

  MixResult r;
  const double p_ref = ref.Power();
  for (size_t i = 0; i < sources.size(); ++i) {
    Waveform s = sources[i];
    if (i > 0) {
      const double target = p_ref * std::pow(10.0, (gains_db[i] - gains_db[0]) / 10.0);
      ScaleInPlace(&s, std::sqrt(target / s.Power()));
    }
    r.scaled_sources.push_back(std::move(s));
  }

  auto sum_sources = [&r, &ref]() {
    Waveform m;
    m.sample_rate = ref.sample_rate;
    m.samples.assign(ref.samples.size(), 0.0);
    for (const auto& s : r.scaled_sources)
      for (size_t j = 0; j < m.samples.size(); ++j) m.samples[j] += s.samples[j];
    return m;
  };

  if (noise != nullptr) {
    noise->Validate();
    CheckCompatible(ref, *noise, "noise");
    if (noise->Power() == 0.0) throw DegenerateSource("noise is silent");
    const double p_clean = sum_sources().Power();
    Waveform n = *noise;
    const double target = p_clean / std::pow(10.0, *noise_snr_db / 10.0);
    ScaleInPlace(&n, std::sqrt(target / n.Power()));
    r.scaled_noise = std::move(n);
  }

  auto assemble = [&]() {
    Waveform m = sum_sources();
    if (r.scaled_noise)
      for (size_t j = 0; j < m.samples.size(); ++j)
        m.samples[j] += r.scaled_noise->samples[j];
    return m;
  };
  r.mixture = assemble();
  const double peak = r.mixture.Peak();
  if (peak > 1.0) {
    r.peak_scale = 1.0 / peak;
    for (auto& s : r.scaled_sources) ScaleInPlace(&s, r.peak_scale);
    if (r.scaled_noise) ScaleInPlace(&*r.scaled_noise, r.peak_scale);
    // Re-sum so the mixture stays the exact sum of the returned parts.
    r.mixture = assemble();
  }
  return r;
}

}  // namespace csfnet
