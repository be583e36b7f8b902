// tests/acceptance-test.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Acceptance criteria 1-11. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails. "--only 1,4,9" runs a subset; "--workdir"
// sets where the desk-scale runs write their data.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <glog/logging.h>

#include "base/gemm.h"
#include "base/runtime.h"
#include "dsp/mix.h"
#include "dsp/stft.h"
#include "encoder/audio-encoder.h"
#include "fusion/sp-fusion.h"
#include "grad-check.h"
#include "objectives/losses.h"
#include "objectives/metrics.h"
#include "objectives/pit.h"
#include "pipeline/checkpoint.h"
#include "pipeline/dataset.h"
#include "pipeline/evaluate.h"
#include "pipeline/model.h"
#include "pipeline/trainer.h"
#include "semantics/mouth-frames.h"
#include "semantics/semantic-encoders.h"
#include "separator/mst.h"
#include "separator/param-report.h"
#include "test-util.h"

#ifndef CSFNET_SOURCE_DIR
#define CSFNET_SOURCE_DIR "."
#endif

namespace csfnet {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

std::string Fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

// 1. STFT/iSTFT round trip.
Outcome StftRoundTrip() {
  StftConfig cfg;
  Rng rng(1);
  double worst = 0;
  bool bins_ok = cfg.FftBins() == 257;
  for (int i = 0; i < 100; ++i) {
    Tensor x = rng.NormalTensor({32000});
    Tensor spec = StftSamples(x, cfg);
    bins_ok &= spec.dim(2) == 257;
    Tensor y = IstftSamples(spec, cfg, 32000);
    double err = 0;
    for (int64_t k = 0; k < x.numel(); ++k) err = std::max(err, std::abs(x[k] - y[k]));
    worst = std::max(worst, err / x.MaxAbs());
  }
  return {bins_ok && worst < 1e-6,
          Fmt("F=%g, worst relative Linf error %.3g", cfg.FftBins(), worst)};
}

double DirectSiSdr(const std::vector<double>& e, const std::vector<double>& s) {
  const double es = std::inner_product(e.begin(), e.end(), s.begin(), 0.0);
  const double ss = std::inner_product(s.begin(), s.end(), s.begin(), 0.0);
  const double alpha = es / ss;
  double num = 0, den = 0;
  for (size_t i = 0; i < e.size(); ++i) {
    num += alpha * s[i] * alpha * s[i];
    den += (e[i] - alpha * s[i]) * (e[i] - alpha * s[i]);
  }
  return 10 * std::log10(num / den);
}

// 2. SI-SDR properties.
Outcome SiSdrProperties() {
  Rng rng(2);
  double worst_scale = 0, worst_oracle = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> e(4000), s(4000);
    for (auto& v : s) v = rng.Normal(0, 1);
    for (size_t k = 0; k < e.size(); ++k) e[k] = s[k] + rng.Normal(0, 0.5);
    const double base = SiSdr(e, s);
    worst_oracle = std::max(worst_oracle, std::abs(base - DirectSiSdr(e, s)));
    if (i < 100) {
      const double a = rng.Uniform(0.01, 100), b = rng.Uniform(0.01, 100);
      std::vector<double> ea = e, sb = s;
      for (auto& v : ea) v *= a;
      for (auto& v : sb) v *= b;
      worst_scale = std::max(worst_scale, std::abs(SiSdr(ea, s) - base));
      worst_scale = std::max(worst_scale, std::abs(SiSdr(e, sb) - base));
      worst_scale = std::max(worst_scale, std::abs(SiSdr(ea, sb) - base));
    }
  }
  // Reference plus equal-power orthogonal noise: 0 dB.
  std::vector<double> s(1000), n(1000), e(1000);
  for (int k = 0; k < 1000; ++k) {
    s[k] = std::sin(2 * M_PI * 5 * k / 1000.0);
    n[k] = std::cos(2 * M_PI * 5 * k / 1000.0);
    e[k] = s[k] + n[k];
  }
  const double ortho = SiSdr(e, s);
  const bool pass = worst_scale < 1e-9 && std::abs(ortho) < 1e-9 && worst_oracle < 1e-9;
  return {pass, Fmt("scale drift %.3g dB, ", worst_scale) +
                    Fmt("orthogonal case %.3g dB, ", ortho) +
                    Fmt("oracle gap %.3g dB over 1000 pairs", worst_oracle)};
}

// 3. PIT against exhaustive search.
Outcome PitOracle() {
  Rng rng(3);
  int mismatches = 0, total = 0;
  for (int s = 2; s <= 4; ++s) {
    for (int b = 0; b < 200; ++b, ++total) {
      std::vector<Tensor> ests, refs;
      for (int k = 0; k < s; ++k) {
        ests.push_back(rng.NormalTensor({256}));
        refs.push_back(rng.NormalTensor({256}));
      }
      PairLoss fn = [](const Tensor& e, const Tensor& r) {
        return -SiSdr(e.values(), r.values());
      };
      const PitResult got = Pit(ests, refs, fn);
      std::vector<int> perm(s), best;
      std::iota(perm.begin(), perm.end(), 0);
      double best_loss = std::numeric_limits<double>::infinity();
      do {
        double l = 0;
        for (int k = 0; k < s; ++k) l += fn(ests[k], refs[perm[k]]);
        l /= s;
        if (l < best_loss) {
          best_loss = l;
          best = perm;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
      if (got.permutation != best || got.loss != best_loss) ++mismatches;
    }
  }
  return {mismatches == 0,
          std::to_string(total - mismatches) + "/" + std::to_string(total) +
              " batches match exactly"};
}

// 4. Gradient checks.
Outcome GradientChecks() {
  using testing::CheckGradients;
  using testing::NamedVar;
  using testing::Probe;
  using testing::RandomVar;
  std::ostringstream os;
  bool pass = true;
  auto record = [&](const char* name, double worst) {
    pass &= worst < 1e-4;
    os << name << " " << Fmt("%.2g", worst) << " ";
  };
  auto params = [](Module* m, std::vector<NamedVar>* wrt) {
    for (auto& p : m->Parameters())
      if (p.trainable) wrt->push_back({p.name, p.var});
  };
  double w = 0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    AudioEncoder enc(8, &rng);
    Var x = RandomVar(&rng, {2, 7, 9});
    std::vector<NamedVar> wrt{{"input", x}};
    params(&enc, &wrt);
    w = std::max(w, CheckGradients([&] { return Probe(enc.Forward(x)); }, wrt)
                        .max_rel_error);
  }
  record("encoder", w);
  w = 0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(200 + seed);
    SpFusion fusion(8, 5, 2, &rng);
    Var y = RandomVar(&rng, {8, 6, 4});
    Var l1 = RandomVar(&rng, {3, 5}), l2 = RandomVar(&rng, {3, 5});
    std::vector<NamedVar> wrt{{"y", y}, {"l1", l1}, {"l2", l2}};
    params(&fusion, &wrt);
    w = std::max(w, CheckGradients([&] { return Probe(fusion.Forward(y, {l1, l2})); },
                                   wrt)
                        .max_rel_error);
  }
  record("fusion", w);
  w = 0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(300 + seed);
    MstConfig cfg;
    cfg.channels = 8;
    cfg.hidden = 4;
    cfg.blocks = 1;
    cfg.heads = 2;
    cfg.bins = 9;
    cfg.attn_qk_dim = 18;
    MstBlock block(cfg, &rng);
    Var x = RandomVar(&rng, {8, 6, 9});
    std::vector<NamedVar> wrt{{"x", x}};
    params(&block, &wrt);
    w = std::max(w, CheckGradients([&] { return Probe(block.Forward(x)); }, wrt, 12)
                        .max_rel_error);
  }
  record("mst_block", w);
  w = 0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(400 + seed);
    VsrEncoder vsr(6, &rng);
    vsr.set_training(seed % 2 == 0);
    Var frames = RandomVar(&rng, {4, 1, 16, 16});
    std::vector<NamedVar> wrt{{"frames", frames}};
    params(&vsr, &wrt);
    w = std::max(w, CheckGradients([&] { return Probe(vsr.Forward(frames)); }, wrt, 8)
                        .max_rel_error);
    auto cfg = StftConfig::FromSamples(16, 4, 400);
    AsrEncoder asr(5, cfg, &rng);
    Var x = RandomVar(&rng, {64});
    std::vector<NamedVar> wa{{"samples", x}};
    params(&asr, &wa);
    w = std::max(w, CheckGradients([&] { return Probe(asr.Forward(x, 4)); }, wa, 12)
                        .max_rel_error);
    AvFusion fuse(6, &rng);
    Var v = RandomVar(&rng, {5, 6}), a = RandomVar(&rng, {5, 6});
    std::vector<NamedVar> wf{{"v", v}, {"a", a}};
    params(&fuse, &wf);
    w = std::max(w, CheckGradients([&] { return Probe(fuse.Forward(v, a)); }, wf)
                        .max_rel_error);
  }
  record("semantic_encoders", w);
  w = 0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(500 + seed);
    auto cfg = StftConfig::FromSamples(16, 4, 16000);
    Tensor ref = rng.NormalTensor({48});
    Var est(rng.NormalTensor({48}), true);
    w = std::max(w, CheckGradients([&] { return TotalLoss(est, ref, cfg); },
                                   {{"est", est}}, 48)
                        .max_rel_error);
  }
  record("total_loss", w);
  return {pass, "worst relative error: " + os.str()};
}

ModelConfig TinyModel(int speakers) {
  ModelConfig m;
  m.channels = 8;
  m.semantic_dim = 8;
  m.vsr_width = 4;
  m.num_speakers = speakers;
  m.mst.hidden = 4;
  m.mst.blocks = 1;
  m.mst.heads = 2;
  m.mst.attn_qk_dim = 8;
  return m;
}

// 5. Full forward shapes and determinism.
Outcome ShapeDeterminism() {
  PrecisionScope precision(Precision::kFloat32);
  bool pass = true;
  std::ostringstream os;
  for (int s = 2; s <= 4; ++s) {
    Rng rng(50 + s);
    Waveform mix;
    mix.samples.resize(32000);
    for (auto& v : mix.samples) v = rng.Normal(0, 0.1);
    std::vector<MouthFrames> mouths;
    for (int k = 0; k < s; ++k) {
      std::vector<double> env(50);
      for (auto& e : env) e = rng.Uniform(0, 1);
      mouths.push_back(RenderMouth(env));
    }
    std::vector<std::vector<Waveform>> runs;
    for (int rep = 0; rep < 2; ++rep) {
      CsfNet net(TinyModel(s), 17);
      net.InitFine();
      Rng perturb(3);
      for (auto& p : net.av().Parameters())
        p.var.mutable_value() = perturb.NormalTensor(p.var.shape(), 0.1);
      runs.push_back(net.Separate(mix, mouths));
    }
    bool ok = static_cast<int>(runs[0].size()) == s;
    for (size_t k = 0; ok && k < runs[0].size(); ++k)
      ok = runs[0][k].size() == mix.size() && runs[0][k].samples == runs[1][k].samples;
    pass &= ok;
    os << "S=" << s << (ok ? " ok " : " mismatch ");
  }
  return {pass, os.str() + "(coarse + fine path, 32000 samples)"};
}

// 6. Unfold against the scalar loop.
Outcome UnfoldOracle() {
  Rng rng(6);
  int cases = 0, bad = 0;
  for (int64_t len = 1; len <= 12; ++len)
    for (int64_t win = 1; win <= 5; ++win)
      for (int64_t stride = 1; stride <= 3; ++stride)
        for (ops::Axis axis : {ops::Axis::kTime, ops::Axis::kFrequency}) {
          ++cases;
          const bool time = axis == ops::Axis::kTime;
          const int64_t c = 2, other = 3;
          Tensor x = rng.NormalTensor(time ? Shape{c, len, other} : Shape{c, other, len});
          Tensor got = ops::UnfoldAxis(Var(x), axis, win, stride).value();
          int64_t padded = std::max(len, win);
          while ((padded - win) % stride != 0) ++padded;
          const int64_t windows = (padded - win) / stride + 1;
          bool ok = got.dim(0) == other && got.dim(1) == windows && got.dim(2) == c * win;
          for (int64_t b = 0; ok && b < other; ++b)
            for (int64_t l = 0; l < windows; ++l)
              for (int64_t ch = 0; ch < c; ++ch)
                for (int64_t i = 0; i < win; ++i) {
                  const int64_t pos = l * stride + i;
                  const double want =
                      pos >= len ? 0.0 : (time ? x.at({ch, pos, b}) : x.at({ch, b, pos}));
                  ok &= got.at({b, l, ch * win + i}) == want;
                }
          // The (1, 1) branch is the identity layout.
          if (win == 1 && stride == 1) ok &= got.dim(1) == len;
          bad += !ok;
        }
  return {bad == 0, std::to_string(cases - bad) + "/" + std::to_string(cases) +
                        " (len, I, J, axis) cases agree"};
}

// 7. Occlusion protocol.
Outcome OcclusionProtocol() {
  std::vector<double> env(50);
  for (int t = 0; t < 50; ++t) env[t] = 0.5 + 0.4 * std::sin(t * 0.3);
  const MouthFrames m = RenderMouth(env);
  bool runs_ok = true;
  for (int64_t n : DefaultOcclusionSweep()) {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const MouthFrames o = Occlude(m, n, seed);
      int64_t zeros = 0, first = -1, last = -1;
      for (int64_t t = 0; t < 50; ++t) {
        const uint8_t* f = o.frame(t);
        if (std::all_of(f, f + 88 * 88, [](uint8_t p) { return p == 0; })) {
          ++zeros;
          if (first < 0) first = t;
          last = t;
        }
      }
      runs_ok &= zeros == n && (n == 0 || last - first + 1 == n);
    }
  }
  const int64_t n = 10, bins = 50 - n + 1, draws = 10000;
  std::vector<double> counts(bins, 0);
  std::vector<double> a(draws), b(draws);
  for (int64_t i = 0; i < draws; ++i) {
    counts[OcclusionStart(50, n, i)] += 1;
    a[i] = OcclusionStart(50, n, OcclusionSeed(7, i, 0));
    b[i] = OcclusionStart(50, n, OcclusionSeed(7, i, 1));
  }
  const double expected = static_cast<double>(draws) / bins;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(bins - 1);
  const double p = boost::math::cdf(boost::math::complement(dist, chi2));
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / draws;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / draws;
  double sab = 0, saa = 0, sbb = 0;
  for (int64_t i = 0; i < draws; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  const double r = sab / std::sqrt(saa * sbb);
  return {runs_ok && p > 0.01 && std::abs(r) < 0.05,
          std::string(runs_ok ? "run lengths exact, " : "run lengths WRONG, ") +
              Fmt("chi-square p = %.3g, ", p) + Fmt("start correlation r = %.3g", r)};
}

// 8. Mixture SNR fidelity.
Outcome MixtureFidelity() {
  Rng rng(8);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const bool noisy = i % 2 == 1;
    const int s = noisy ? 2 : 2 + (i / 2) % 3;
    std::vector<Waveform> sources(s);
    for (auto& w : sources) {
      w.samples.resize(32000);
      const double scale = rng.Uniform(0.05, 2.0);
      for (auto& v : w.samples) v = scale * rng.Normal(0, 1);
    }
    const auto gains = DrawGains(s, {-5, 5}, &rng);
    Waveform noise;
    std::optional<double> snr;
    if (noisy) {
      noise.samples.resize(32000);
      for (auto& v : noise.samples) v = rng.Normal(0, 1);
      snr = rng.Uniform(-5, 20);
    }
    const MixResult r = MixSources(sources, gains, noisy ? &noise : nullptr, snr);
    for (int k = 1; k < s; ++k)
      worst = std::max(worst, std::abs(PowerRatioDb(r.scaled_sources[k],
                                                    r.scaled_sources[0]) -
                                       (gains[k] - gains[0])));
    if (noisy) {
      Waveform clean = r.scaled_sources[0];
      for (int k = 1; k < s; ++k)
        for (size_t j = 0; j < clean.samples.size(); ++j)
          clean.samples[j] += r.scaled_sources[k].samples[j];
      worst = std::max(worst, std::abs(PowerRatioDb(clean, *r.scaled_noise) - *snr));
    }
  }
  return {worst < 1e-6, Fmt("worst offset error %.3g dB over 1000 mixtures", worst)};
}

struct DeskRun {
  bool done = false;
  fs::path dir;
  Config cfg;
  TrainResult coarse;
  double seconds = 0;
};

Config DeskConfig(Stage stage) {
  return LoadConfig(std::string(CSFNET_SOURCE_DIR) + "/configs/desk.json", stage, {});
}

constexpr int kDeskEpochs = 30;

void RunDeskCoarse(DeskRun* run) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::remove_all(run->dir);
  const std::string manifest = WriteSyntheticCorpus((run->dir / "corpus").string(), 8, 1);
  MixOptions opts;
  opts.seed = 1;
  BuildMixDataset(ReadManifest(manifest), (run->dir / "data").string(), opts);
  run->cfg = DeskConfig(Stage::kCoarse);
  TrainOptions to;
  to.epochs = kDeskEpochs;
  to.out_dir = (run->dir / "coarse").string();
  to.log_path = (run->dir / "coarse.jsonl").string();
  run->coarse = RunCoarseStage(run->cfg, LoadMixDataset((run->dir / "data").string()), to);
  run->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run->done = true;
}

// 9. Desk-scale coarse overfit.
Outcome DeskCoarse(DeskRun* run) {
  RunDeskCoarse(run);
  const double sisdri = run->coarse.final_train_sisdri;
  return {sisdri > 10.0 && run->seconds < 20 * 60,
          Fmt("training-set SI-SDRi %.2f dB after 30 epochs, ", sisdri) +
              Fmt("%.0f s wall time", run->seconds)};
}

// 10. Coarse-to-fine non-regression and wiring.
Outcome DeskFine(DeskRun* run) {
  if (!run->done) RunDeskCoarse(run);
  const Checkpoint coarse = LoadCheckpoint(run->coarse.last_path);
  const MixDataset data = LoadMixDataset((run->dir / "data").string());

  // Wiring at initialization: fine == coarse exactly; a non-zero semantic
  // increment is the only thing that separates them.
  bool wiring = true;
  {
    PrecisionScope precision(Precision::kFloat32);
    auto net = RestoreModel(coarse);
    const Utterance& u = data.utterances[0];
    const auto coarse_out = net->Separate(u.mixture, u.mouths);
    net->InitFine();
    const auto fine_out = net->Separate(u.mixture, u.mouths);
    for (size_t k = 0; k < coarse_out.size(); ++k)
      wiring &= coarse_out[k].samples == fine_out[k].samples;
    Rng perturb(1);
    for (auto& p : net->av().Parameters())
      p.var.mutable_value() = perturb.NormalTensor(p.var.shape(), 0.05);
    wiring &= net->Separate(u.mixture, u.mouths)[0].samples != coarse_out[0].samples;
    net->av().ZeroOutputLayer();
    const auto zeroed = net->Separate(u.mixture, u.mouths);
    for (size_t k = 0; k < coarse_out.size(); ++k)
      wiring &= coarse_out[k].samples == zeroed[k].samples;
  }

  Config cfg = DeskConfig(Stage::kFine);
  TrainOptions to;
  to.epochs = kDeskEpochs;
  to.out_dir = (run->dir / "fine").string();
  to.log_path = (run->dir / "fine.jsonl").string();
  const TrainResult fine = RunFineStage(cfg, coarse, data, to);
  const Checkpoint fine_ckpt = LoadCheckpoint(fine.last_path);
  const bool provenance = fine_ckpt.parent_id == coarse.id;
  const double c = run->coarse.final_train_sisdri, f = fine.final_train_sisdri;
  return {wiring && provenance && f >= c - 0.1,
          Fmt("SI-SDRi coarse %.2f dB, fine %.2f dB; ", c, f) +
              (wiring ? "init wiring exact" : "init wiring BROKEN") +
              (provenance ? ", parent id recorded" : ", parent id MISSING")};
}

// 11. Parameter count.
Outcome ParameterCount(const fs::path& workdir) {
  ModelConfig m;
  m.Finalize();
  CsfNet net(m, 0);
  const auto records = ParameterRecords(&net.coarse(), "separation.");
  const int64_t total = TotalParameters(records);
  fs::create_directories(workdir);
  const fs::path report = workdir / "param-report.txt";
  std::ofstream(report) << FormatParameterReport(records);
  const double target = 10.9e6;
  return {std::abs(total - target) <= 0.25 * target,
          "total " + std::to_string(total) + " vs 10.9M +-25% (" +
              std::to_string(records.size()) + " tensors listed in " +
              report.string() + ")"};
}

}  // namespace
}  // namespace csfnet

int main(int argc, char* argv[]) {
  using namespace csfnet;
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;
  FLAGS_minloglevel = 1;
  ConfigureAllocator();

  std::set<int> only;
  fs::path workdir = fs::temp_directory_path() / "csfnet-acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else if (a == "--workdir" && i + 1 < argc) {
      workdir = argv[++i];
    } else if (a == "--verbose") {
      FLAGS_minloglevel = 0;
    } else {
      std::fprintf(stderr, "usage: %s [--only 1,2,...] [--workdir DIR] [--verbose]\n",
                   argv[0]);
      return 2;
    }
  }

  DeskRun desk;
  desk.dir = workdir / "desk";
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "stft round trip", 10, StftRoundTrip},
      {2, "si-sdr properties", 5, SiSdrProperties},
      {3, "pit oracle", 30, PitOracle},
      {4, "gradient checks", 120, GradientChecks},
      {5, "shape and determinism", 60, ShapeDeterminism},
      {6, "unfold oracle", 5, UnfoldOracle},
      {7, "occlusion protocol", 30, OcclusionProtocol},
      {8, "mixture snr fidelity", 30, MixtureFidelity},
      {9, "desk coarse overfit", 20 * 60, [&] { return DeskCoarse(&desk); }},
      {10, "coarse-to-fine non-regression", 25 * 60, [&] { return DeskFine(&desk); }},
      {11, "parameter count", 60, [&] { return ParameterCount(workdir); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %2d %-30s %s  %s; %.1f s (limit %.0f s)%s\n", c.id, c.name,
                pass ? "PASS" : "FAIL", o.detail.c_str(), secs, c.limit_seconds,
                in_time ? "" : " OVER TIME");
    std::fflush(stdout);
  }
  std::printf("%s: %d failed\n", failed ? "FAIL" : "PASS", failed);
  return failed ? 1 : 0;
}
