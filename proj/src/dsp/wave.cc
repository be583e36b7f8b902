// dsp/wave.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dsp/wave.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "base/error.h"

namespace csfnet {

double Waveform::Power() const {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double v : samples) acc += v * v;
  return acc / static_cast<double>(samples.size());
}

double Waveform::Peak() const {
  double p = 0.0;
  for (double v : samples) p = std::max(p, std::abs(v));
  return p;
}

Tensor Waveform::AsTensor() const {
  return Tensor({size()}, samples);
}

Waveform Waveform::FromTensor(const Tensor& t, int sample_rate) {
  CSF_CHECK_INPUT(t.ndim() == 1, "waveform tensor must be 1-d, got ",
                  ShapeString(t.shape()));
  Waveform w;
  w.samples = t.storage();
  w.sample_rate = sample_rate;
  return w;
}

void Waveform::Validate() const {
  CSF_CHECK_INPUT(sample_rate > 0, "sample rate must be positive");
  for (double v : samples)
    CSF_CHECK_INPUT(std::isfinite(v), "waveform contains non-finite sample");
}

namespace {

uint32_t ReadU32(const char* p) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

uint16_t ReadU16(const char* p) {
  uint16_t v;
  std::memcpy(&v, p, 2);
  return v;
}

template <typename T>
void Put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

Waveform ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  CSF_CHECK_INPUT(in.good(), "cannot open wav file ", path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  CSF_CHECK_INPUT(bytes.size() >= 12 && bytes.compare(0, 4, "RIFF") == 0 &&
                      bytes.compare(8, 4, "WAVE") == 0,
                  path, ": not a RIFF/WAVE file");
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const char* data = nullptr;
  size_t data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    size_t len = ReadU32(bytes.data() + pos + 4);
    const char* body = bytes.data() + pos + 8;
    len = std::min(len, bytes.size() - pos - 8);
    if (id == "fmt ") {
      CSF_CHECK_INPUT(len >= 16, path, ": short fmt chunk");
      format = ReadU16(body);
      channels = ReadU16(body + 2);
      rate = ReadU32(body + 4);
      bits = ReadU16(body + 14);
      // WAVE_FORMAT_EXTENSIBLE carries the real tag in the sub-format GUID.
      if (format == 0xFFFE && len >= 26) format = ReadU16(body + 24);
    } else if (id == "data") {
      data = body;
      data_len = len;
    }
    pos += 8 + len + (len & 1);
  }
  CSF_CHECK_INPUT(rate > 0 && data != nullptr, path, ": missing fmt or data");
  CSF_CHECK_INPUT(channels == 1, path, ": expected mono, got ", channels,
                  " channels");
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (format == 1 && bits == 16) {
    const size_t n = data_len / 2;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      int16_t s;
      std::memcpy(&s, data + 2 * i, 2);
      w.samples[i] = s / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const size_t n = data_len / 4;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      float s;
      std::memcpy(&s, data + 4 * i, 4);
      w.samples[i] = s;
    }
  } else {
    throw InvalidInput(internal::Concat(path, ": unsupported wav encoding (tag ",
                                        format, ", ", bits, " bits)"));
  }
  w.Validate();
  return w;
}

void WriteWav(const std::string& path, const Waveform& w, WavFormat format) {
  w.Validate();
  std::ofstream out(path, std::ios::binary);
  CSF_CHECK_INPUT(out.good(), "cannot write wav file ", path);
  const bool pcm = format == WavFormat::kPcm16;
  const uint16_t bits = pcm ? 16 : 32;
  const uint32_t data_len =
      static_cast<uint32_t>(w.samples.size() * (bits / 8));
  out.write("RIFF", 4);
  Put<uint32_t>(out, 36 + data_len);
  out.write("WAVEfmt ", 8);
  Put<uint32_t>(out, 16);
  Put<uint16_t>(out, pcm ? 1 : 3);
  Put<uint16_t>(out, 1);
  Put<uint32_t>(out, w.sample_rate);
  Put<uint32_t>(out, w.sample_rate * (bits / 8));
  Put<uint16_t>(out, bits / 8);
  Put<uint16_t>(out, bits);
  out.write("data", 4);
  Put<uint32_t>(out, data_len);
  for (double v : w.samples) {
    if (pcm) {
      const double c = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
      Put<int16_t>(out, static_cast<int16_t>(c));
    } else {
      Put<float>(out, static_cast<float>(v));
    }
  }
  CSF_CHECK_INPUT(out.good(), "write failed for ", path);
}

}  // namespace csfnet
