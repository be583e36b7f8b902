// dsp/wave.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_DSP_WAVE_H_
#define CSFNET_DSP_WAVE_H_

#include <string>
#include <vector>

#include "base/tensor.h"

namespace csfnet {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  double Power() const;  // mean square
  double Peak() const;
  Tensor AsTensor() const;
  static Waveform FromTensor(const Tensor& t, int sample_rate);
  // Throws InvalidInput on a non-positive rate or a non-finite sample.
  void Validate() const;
};

enum class WavFormat { kPcm16, kFloat32 };

// Mono RIFF/WAVE. Reading accepts 16-bit PCM and 32-bit IEEE float.
Waveform ReadWav(const std::string& path);
void WriteWav(const std::string& path, const Waveform& w,
              WavFormat format = WavFormat::kFloat32);

}  // namespace csfnet

#endif  // CSFNET_DSP_WAVE_H_
