// dsp/stft.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_DSP_STFT_H_
#define CSFNET_DSP_STFT_H_

#include <vector>

#include "base/autograd.h"
#include "base/tensor.h"
#include "dsp/wave.h"

namespace csfnet {

// Square-root periodic Hann analysis/synthesis window. The FFT size equals
// the window length, so the bin count is window/2 + 1.
struct StftConfig {
  double window_ms = 32.0;
  double hop_ms = 8.0;
  int sample_rate = 16000;

  int64_t WindowSamples() const;
  int64_t HopSamples() const;
  int64_t FftBins() const { return WindowSamples() / 2 + 1; }
  // Centered framing: floor(len / hop) + 1.
  int64_t NumFrames(int64_t num_samples) const;
  // Throws ConfigError unless the window is even, at least 4 hops long, and
  // both lengths are whole sample counts.
  void Validate() const;

  static StftConfig FromSamples(int64_t window, int64_t hop, int sample_rate);
};

std::vector<double> SqrtHannWindow(int64_t length);

// Real/imaginary T-F representation, data shape [2, T, F].
struct ComplexSpectrogram {
  Tensor data;
  int64_t frames() const { return data.dim(1); }
  int64_t bins() const { return data.dim(2); }
};

ComplexSpectrogram Stft(const Waveform& w, const StftConfig& cfg);
Tensor StftSamples(const Tensor& samples, const StftConfig& cfg);

// Overlap-add synthesis normalized by the summed squared window, then the
// centering pad is removed. Output samples past the frames' reach are zero.
Waveform Istft(const ComplexSpectrogram& s, const StftConfig& cfg,
               int64_t out_len);
Tensor IstftSamples(const Tensor& spec, const StftConfig& cfg, int64_t out_len);

// Linear adjoints, used by the differentiable wrappers below.
Tensor StftAdjoint(const Tensor& grad_spec, int64_t num_samples,
                   const StftConfig& cfg);
Tensor IstftAdjoint(const Tensor& grad_wave, int64_t num_frames,
                    const StftConfig& cfg);

namespace ops {

// samples [L] -> [2, T, F]
Var Stft(const Var& samples, const StftConfig& cfg);
// spec [2, T, F] -> [out_len]
Var Istft(const Var& spec, const StftConfig& cfg, int64_t out_len);
// spec [2, T, F] -> |X| [T, F]; the subgradient at zero magnitude is zero.
Var Magnitude(const Var& spec);

}  // namespace ops

}  // namespace csfnet

#endif  // CSFNET_DSP_STFT_H_
