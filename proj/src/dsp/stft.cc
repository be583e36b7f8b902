// dsp/stft.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dsp/stft.h"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>

#include "base/error.h"

namespace csfnet {

namespace {

int64_t MsToSamples(double ms, int sample_rate) {
  return std::llround(ms * sample_rate / 1000.0);
}

// FFTW plans are created once per size under a lock. Execution through the
// new-array interface is thread safe, so callers keep their own buffers.
struct FftPlans {
  fftw_plan forward;
  fftw_plan backward;
};

const FftPlans& PlansFor(int64_t n) {
  static std::mutex mu;
  static std::map<int64_t, FftPlans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> r(n);
  std::vector<std::complex<double>> c(n / 2 + 1);
  auto* cp = reinterpret_cast<fftw_complex*>(c.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  FftPlans p;
  p.forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), r.data(), cp, flags);
  p.backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), cp, r.data(), flags);
  return cache.emplace(n, p).first->second;
}

void Rfft(int64_t n, double* in, std::complex<double>* out) {
  fftw_execute_dft_r2c(PlansFor(n).forward, in,
                       reinterpret_cast<fftw_complex*>(out));
}

// Unnormalized; c2r destroys its input, so callers pass a scratch copy.
void Irfft(int64_t n, std::complex<double>* in, double* out) {
  fftw_execute_dft_c2r(PlansFor(n).backward,
                       reinterpret_cast<fftw_complex*>(in), out);
}

// Mirror index into [0, len) without repeating the edge sample.
int64_t ReflectIndex(int64_t i, int64_t len) {
  if (len == 1) return 0;
  const int64_t period = 2 * (len - 1);
  int64_t m = i % period;
  if (m < 0) m += period;
  return m < len ? m : period - m;
}

// Summed squared window over the padded timeline of T frames.
std::vector<double> WindowEnvelope(const std::vector<double>& win,
                                   int64_t frames, int64_t hop) {
  const int64_t n = static_cast<int64_t>(win.size());
  std::vector<double> env((frames - 1) * hop + n, 0.0);
  for (int64_t t = 0; t < frames; ++t)
    for (int64_t i = 0; i < n; ++i) env[t * hop + i] += win[i] * win[i];
  return env;
}

constexpr double kEnvelopeFloor = 1e-11;

void CheckSpecShape(const Tensor& spec, const StftConfig& cfg) {
  CSF_CHECK_INPUT(spec.ndim() == 3 && spec.dim(0) == 2,
                  "spectrogram must be [2, T, F], got ",
                  ShapeString(spec.shape()));
  CSF_CHECK_CONFIG(spec.dim(2) == cfg.FftBins(), "spectrogram has ",
                   spec.dim(2), " bins but the STFT config implies ",
                   cfg.FftBins());
  CSF_CHECK_INPUT(spec.dim(1) >= 1, "spectrogram has no frames");
}

}  // namespace

int64_t StftConfig::WindowSamples() const {
  return MsToSamples(window_ms, sample_rate);
}

int64_t StftConfig::HopSamples() const {
  return MsToSamples(hop_ms, sample_rate);
}

int64_t StftConfig::NumFrames(int64_t num_samples) const {
  return num_samples / HopSamples() + 1;
}

void StftConfig::Validate() const {
  CSF_CHECK_CONFIG(sample_rate > 0, "sample rate must be positive");
  const double w = window_ms * sample_rate / 1000.0;
  const double h = hop_ms * sample_rate / 1000.0;
  CSF_CHECK_CONFIG(std::abs(w - std::round(w)) < 1e-6 &&
                       std::abs(h - std::round(h)) < 1e-6,
                   "window/hop of ", window_ms, "/", hop_ms,
                   " ms are not whole sample counts at ", sample_rate, " Hz");
  const int64_t ws = WindowSamples(), hs = HopSamples();
  CSF_CHECK_CONFIG(hs >= 1, "hop must be at least one sample");
  CSF_CHECK_CONFIG(ws % 2 == 0, "window length ", ws, " must be even");
  CSF_CHECK_CONFIG(ws >= 4 * hs, "window length ", ws,
                   " must be at least 4x the hop ", hs);
}

StftConfig StftConfig::FromSamples(int64_t window, int64_t hop,
                                   int sample_rate) {
  StftConfig cfg;
  cfg.sample_rate = sample_rate;
  cfg.window_ms = window * 1000.0 / sample_rate;
  cfg.hop_ms = hop * 1000.0 / sample_rate;
  cfg.Validate();
  return cfg;
}

std::vector<double> SqrtHannWindow(int64_t length) {
  std::vector<double> w(length);
  for (int64_t i = 0; i < length; ++i)
    w[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / length));
  return w;
}

Tensor StftSamples(const Tensor& samples, const StftConfig& cfg) {
  cfg.Validate();
  CSF_CHECK_INPUT(samples.ndim() == 1, "stft expects a 1-d signal");
  const int64_t len = samples.numel();
  CSF_CHECK_INPUT(len > 0, "stft of an empty waveform");
  const int64_t n = cfg.WindowSamples(), hop = cfg.HopSamples();
  const int64_t bins = cfg.FftBins(), frames = cfg.NumFrames(len);
  const int64_t pad = n / 2;
  const auto win = SqrtHannWindow(n);
  const double* x = samples.data();

  Tensor out({2, frames, bins});
  double* re = out.data();
  double* im = re + frames * bins;
  std::vector<double> frame(n);
  std::vector<std::complex<double>> spec(bins);
  for (int64_t t = 0; t < frames; ++t) {
    for (int64_t i = 0; i < n; ++i)
      frame[i] = x[ReflectIndex(t * hop + i - pad, len)] * win[i];
    Rfft(n, frame.data(), spec.data());
    for (int64_t k = 0; k < bins; ++k) {
      re[t * bins + k] = spec[k].real();
      im[t * bins + k] = spec[k].imag();
    }
  }
  return out;
}

Tensor StftAdjoint(const Tensor& grad_spec, int64_t num_samples,
                   const StftConfig& cfg) {
  CheckSpecShape(grad_spec, cfg);
  const int64_t n = cfg.WindowSamples(), hop = cfg.HopSamples();
  const int64_t bins = cfg.FftBins(), frames = grad_spec.dim(1);
  CSF_CHECK_INPUT(frames == cfg.NumFrames(num_samples),
                  "frame count does not match signal length");
  const int64_t pad = n / 2;
  const auto win = SqrtHannWindow(n);
  const double* gre = grad_spec.data();
  const double* gim = gre + frames * bins;

  Tensor out({num_samples});
  double* gx = out.data();
  std::vector<std::complex<double>> z(bins);
  std::vector<double> frame(n);
  for (int64_t t = 0; t < frames; ++t) {
    // c2r doubles the interior bins implicitly; the real-part adjoint does not.
    for (int64_t k = 0; k < bins; ++k) {
      const double c = (k == 0 || k == bins - 1) ? 1.0 : 0.5;
      z[k] = {c * gre[t * bins + k], c * gim[t * bins + k]};
    }
    Irfft(n, z.data(), frame.data());
    for (int64_t i = 0; i < n; ++i)
      gx[ReflectIndex(t * hop + i - pad, num_samples)] += frame[i] * win[i];
  }
  return out;
}

Tensor IstftSamples(const Tensor& spec, const StftConfig& cfg,
                    int64_t out_len) {
  cfg.Validate();
  CheckSpecShape(spec, cfg);
  CSF_CHECK_INPUT(out_len >= 0, "negative output length");
  const int64_t n = cfg.WindowSamples(), hop = cfg.HopSamples();
  const int64_t bins = cfg.FftBins(), frames = spec.dim(1);
  const int64_t pad = n / 2;
  const auto win = SqrtHannWindow(n);
  const auto env = WindowEnvelope(win, frames, hop);
  const double* re = spec.data();
  const double* im = re + frames * bins;

  std::vector<double> buf(env.size(), 0.0);
  std::vector<std::complex<double>> z(bins);
  std::vector<double> frame(n);
  for (int64_t t = 0; t < frames; ++t) {
    for (int64_t k = 0; k < bins; ++k)
      z[k] = {re[t * bins + k], im[t * bins + k]};
    Irfft(n, z.data(), frame.data());
    for (int64_t i = 0; i < n; ++i)
      buf[t * hop + i] += frame[i] * win[i] / static_cast<double>(n);
  }
  Tensor out({out_len});
  const int64_t avail = static_cast<int64_t>(buf.size());
  for (int64_t i = 0; i < out_len && i + pad < avail; ++i) {
    const double e = env[i + pad];
    out[i] = e > kEnvelopeFloor ? buf[i + pad] / e : 0.0;
  }
  return out;
}

Tensor IstftAdjoint(const Tensor& grad_wave, int64_t num_frames,
                    const StftConfig& cfg) {
  CSF_CHECK_INPUT(grad_wave.ndim() == 1, "istft adjoint expects a 1-d grad");
  const int64_t n = cfg.WindowSamples(), hop = cfg.HopSamples();
  const int64_t bins = cfg.FftBins();
  const int64_t pad = n / 2;
  const auto win = SqrtHannWindow(n);
  const auto env = WindowEnvelope(win, num_frames, hop);
  const int64_t avail = static_cast<int64_t>(env.size());

  std::vector<double> gbuf(avail, 0.0);
  for (int64_t i = 0; i < grad_wave.numel() && i + pad < avail; ++i) {
    const double e = env[i + pad];
    if (e > kEnvelopeFloor) gbuf[i + pad] = grad_wave[i] / e;
  }
  Tensor out({2, num_frames, bins});
  double* gre = out.data();
  double* gim = gre + num_frames * bins;
  std::vector<double> frame(n);
  std::vector<std::complex<double>> z(bins);
  for (int64_t t = 0; t < num_frames; ++t) {
    for (int64_t i = 0; i < n; ++i) frame[i] = gbuf[t * hop + i] * win[i];
    Rfft(n, frame.data(), z.data());
    for (int64_t k = 0; k < bins; ++k) {
      const bool edge = k == 0 || k == bins - 1;
      const double c = (edge ? 1.0 : 2.0) / static_cast<double>(n);
      gre[t * bins + k] = c * z[k].real();
      gim[t * bins + k] = edge ? 0.0 : c * z[k].imag();
    }
  }
  return out;
}

ComplexSpectrogram Stft(const Waveform& w, const StftConfig& cfg) {
  CSF_CHECK_CONFIG(w.sample_rate == cfg.sample_rate, "waveform rate ",
                   w.sample_rate, " differs from STFT rate ", cfg.sample_rate);
  return {StftSamples(w.AsTensor(), cfg)};
}

Waveform Istft(const ComplexSpectrogram& s, const StftConfig& cfg,
               int64_t out_len) {
  return Waveform::FromTensor(IstftSamples(s.data, cfg, out_len),
                              cfg.sample_rate);
}

namespace ops {

Var Stft(const Var& samples, const StftConfig& cfg) {
  const int64_t len = samples.numel();
  return MakeResult(
      StftSamples(samples.value(), cfg), {samples},
      [cfg, len](Node& self) {
        if (Tensor* g = self.InputGrad(0))
          g->AddInPlace(StftAdjoint(self.grad, len, cfg));
      },
      "stft");
}

Var Istft(const Var& spec, const StftConfig& cfg, int64_t out_len) {
  const int64_t frames = spec.dim(1);
  return MakeResult(
      IstftSamples(spec.value(), cfg, out_len), {spec},
      [cfg, frames](Node& self) {
        if (Tensor* g = self.InputGrad(0))
          g->AddInPlace(IstftAdjoint(self.grad, frames, cfg));
      },
      "istft");
}

Var Magnitude(const Var& spec) {
  const Tensor& x = spec.value();
  CSF_CHECK_INPUT(x.ndim() == 3 && x.dim(0) == 2,
                  "magnitude expects [2, T, F], got ", ShapeString(x.shape()));
  const int64_t m = x.dim(1) * x.dim(2);
  Tensor out({x.dim(1), x.dim(2)});
  for (int64_t i = 0; i < m; ++i) out[i] = std::hypot(x[i], x[m + i]);
  return MakeResult(
      out, {spec},
      [m](Node& self) {
        Tensor* g = self.InputGrad(0);
        if (!g) return;
        const Tensor& x = self.inputs[0]->value;
        for (int64_t i = 0; i < m; ++i) {
          const double mag = self.value[i];
          if (mag == 0.0) continue;
          (*g)[i] += self.grad[i] * x[i] / mag;
          (*g)[m + i] += self.grad[i] * x[m + i] / mag;
        }
      },
      "magnitude");
}

}  // namespace ops

}  // namespace csfnet
