// tests/pipeline-test.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "base/error.h"
#include "base/gemm.h"
#include "dsp/mix.h"
#include "grad-check.h"
#include "objectives/losses.h"
#include "objectives/metrics.h"
#include "pipeline/checkpoint.h"
#include "pipeline/config.h"
#include "pipeline/dataset.h"
#include "pipeline/evaluate.h"
#include "pipeline/model.h"
#include "pipeline/optim.h"
#include "pipeline/trainer.h"
#include "test-util.h"

namespace csfnet {
namespace {

namespace fs = std::filesystem;

ModelConfig TinyModel(int speakers) {
  ModelConfig m;
  m.channels = 8;
  m.semantic_dim = 8;
  m.num_speakers = speakers;
  m.mst.hidden = 4;
  m.mst.blocks = 1;
  m.mst.heads = 2;
  m.mst.attn_qk_dim = 8;
  m.Finalize();
  return m;
}

fs::path TempDir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("csfnet-pipeline-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string FileBytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Waveform RandomWave(Rng* rng, int64_t n) {
  Waveform w;
  w.samples.resize(n);
  for (double& v : w.samples) v = 0.2 * rng->Normal(0, 1);
  return w;
}

MouthFrames RandomMouth(Rng* rng, int64_t frames) {
  MouthFrames m = MouthFrames::Zeros(frames);
  for (auto& p : m.pixels) p = static_cast<uint8_t>(rng->UniformInt(0, 255));
  return m;
}

TEST(ConfigTest, StageDefaults) {
  const TrainConfig c = TrainConfig::Defaults(Stage::kCoarse);
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_DOUBLE_EQ(c.learning_rate, 1e-3);
  EXPECT_EQ(c.lr_patience, 3);
  EXPECT_DOUBLE_EQ(c.lr_factor, 0.5);
  EXPECT_EQ(c.max_epochs, 200);
  EXPECT_DOUBLE_EQ(c.grad_clip, 5.0);
  const Config f = LoadConfig("", Stage::kFine, {});
  EXPECT_EQ(f.train.batch_size, 8);
  EXPECT_DOUBLE_EQ(f.train.learning_rate, 1e-4);
  EXPECT_EQ(f.model.stft.FftBins(), 257);
  EXPECT_EQ(f.model.channels, 192);
  EXPECT_EQ(f.model.mst.hidden, 96);
  EXPECT_EQ(f.model.mst.blocks, 6);
  EXPECT_EQ(f.model.mst.heads, 4);
}

TEST(ConfigTest, JsonRoundTripAndOverrides) {
  Config c = LoadConfig("", Stage::kCoarse,
                        {"model.channels=16", "model.mst.hidden=8",
                         "train.batch_size=1", "coarse.learning_rate=0.002",
                         "fine.learning_rate=0.0003"});
  EXPECT_EQ(c.model.channels, 16);
  EXPECT_EQ(c.model.mst.channels, 16);
  EXPECT_EQ(c.model.mst.hidden, 8);
  EXPECT_EQ(c.train.batch_size, 1);
  EXPECT_DOUBLE_EQ(c.train.learning_rate, 0.002);
  const Config back = ConfigFromJson(ToJson(c), Stage::kCoarse);
  EXPECT_EQ(ToJson(back).dump(), ToJson(c).dump());
  EXPECT_EQ(ModelFingerprint(back.model), ModelFingerprint(c.model));
  Config d = c;
  d.model.mst.blocks = 2;
  EXPECT_NE(ModelFingerprint(d.model), ModelFingerprint(c.model));

  EXPECT_THROW(LoadConfig("", Stage::kCoarse, {"model.chanels=16"}), ConfigError);
  EXPECT_THROW(LoadConfig("", Stage::kCoarse, {"train.batch_size=0"}), ConfigError);
  EXPECT_THROW(LoadConfig("", Stage::kCoarse, {"model.mst.hidden=7"}), ConfigError);
  EXPECT_THROW(LoadConfig("", Stage::kCoarse, {"noequals"}), ConfigError);
  EXPECT_THROW(LoadConfig("/nonexistent.json", Stage::kCoarse, {}), ConfigError);
}

TEST(OptimTest, SchedulerHalvesAfterThreeStagnantEpochs) {
  PlateauScheduler s(0.5, 3);
  double lr = 1e-3;
  const std::vector<double> losses{1.0, 0.9, 0.95, 0.9, 0.91, 0.8, 0.85, 0.85, 0.85};
  std::vector<double> trace;
  for (double l : losses) {
    lr = s.Step(l, lr);
    trace.push_back(lr);
  }
  const std::vector<double> expected{1e-3, 1e-3, 1e-3, 1e-3, 5e-4,
                                     5e-4, 5e-4, 5e-4, 2.5e-4};
  ASSERT_EQ(trace.size(), expected.size());
  for (size_t i = 0; i < trace.size(); ++i) EXPECT_EQ(trace[i], expected[i]) << i;
}

TEST(OptimTest, ClipAndAdamStep) {
  Var w = Var::Parameter(Tensor({3}, {1.0, -2.0, 0.5}));
  std::vector<ParamEntry> params{{"w", w, true}};
  w.mutable_grad() = Tensor({3}, {30.0, 40.0, 0.0});
  EXPECT_DOUBLE_EQ(ClipGradNorm(params, 5.0), 50.0);
  EXPECT_NEAR(GlobalGradNorm(params), 5.0, 1e-12);
  EXPECT_LE(GlobalGradNorm(params), 5.0 + 1e-6);

  Adam adam(params, 0.1);
  adam.Step();
  // First Adam step moves each coordinate by lr * sign(g) (up to eps).
  EXPECT_NEAR(w.value()[0], 0.9, 1e-6);
  EXPECT_NEAR(w.value()[1], -2.1, 1e-6);
  EXPECT_DOUBLE_EQ(w.value()[2], 0.5);
  auto state = adam.State();
  Adam other(params, 0.1);
  other.LoadState(state);
  EXPECT_TRUE(testing::BitEqual(other.State()["m.w"], state["m.w"]));
}

TEST(DatasetTest, GainDrawStatistics) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i)
    for (double g : DrawGains(3, {0.0, 0.0}, &rng)) EXPECT_EQ(g, 0.0);
  double sum = 0, lo = 1e9, hi = -1e9;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto g = DrawGains(2, {-5.0, 5.0}, &rng);
    EXPECT_EQ(g[0], 0.0);
    sum += g[1];
    lo = std::min(lo, g[1]);
    hi = std::max(hi, g[1]);
  }
  EXPECT_NEAR(sum / n, 0.0, 0.1);
  EXPECT_GE(lo, -5.0);
  EXPECT_LE(hi, 5.0);
}

TEST(DatasetTest, ManifestRoundTripAndValidation) {
  const fs::path dir = TempDir("manifest");
  WriteWav((dir / "a.wav").string(), Waveform{std::vector<double>(32000, 0.1)});
  WriteMroi((dir / "a.mroi").string(), MouthFrames::Zeros(50));
  MixManifestEntry e;
  e.utterance_id = "x";
  e.sources = {"a.wav", "a.wav"};
  e.mouths = {"a.mroi", "a.mroi"};
  e.gains_db = std::vector<double>{0.0, 2.5};
  WriteManifest((dir / "m.jsonl").string(), {e});
  auto back = ReadManifest((dir / "m.jsonl").string());
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].utterance_id, "x");
  EXPECT_EQ(back[0].sources[0], (dir / "a.wav").string());
  EXPECT_EQ((*back[0].gains_db)[1], 2.5);
  EXPECT_NO_THROW(back[0].Validate());
  MixManifestEntry bad = back[0];
  bad.sources.push_back(bad.sources[0]);
  EXPECT_THROW(bad.Validate(), InvalidInput);
  bad = back[0];
  bad.sources = {bad.sources[0]};
  bad.mouths = {bad.mouths[0]};
  EXPECT_THROW(bad.Validate(), InvalidInput);
  bad = back[0];
  bad.sources[1] = (dir / "missing.wav").string();
  EXPECT_THROW(bad.Validate(), InvalidInput);
}

TEST(DatasetTest, BuildIsDeterministicAndRecordsFailures) {
  const fs::path dir = TempDir("build");
  const std::string manifest = WriteSyntheticCorpus((dir / "corpus").string(), 2, 3);
  auto entries = ReadManifest(manifest);
  ASSERT_EQ(entries.size(), 2u);
  MixOptions opts;
  opts.seed = 11;
  BuildReport r1 = BuildMixDataset(entries, (dir / "a").string(), opts);
  BuildReport r2 = BuildMixDataset(entries, (dir / "b").string(), opts);
  EXPECT_EQ(r1.written, 2);
  EXPECT_TRUE(r1.failures.empty());
  for (const char* f : {"mix/utt0.wav", "mix/utt1.wav", "targets/utt0_s0.wav",
                        "targets/utt1_s1.wav", "metadata.jsonl"})
    EXPECT_EQ(FileBytes(dir / "a" / f), FileBytes(dir / "b" / f)) << f;

  MixDataset ds = LoadMixDataset((dir / "a").string());
  ASSERT_EQ(ds.utterances.size(), 2u);
  for (const auto& u : ds.utterances) {
    EXPECT_EQ(u.mixture.size(), 32000);
    EXPECT_EQ(u.mouths[0].frames, 50);
    EXPECT_GE(u.gains_db[1], -5.0);
    EXPECT_LE(u.gains_db[1], 5.0);
    const double measured = PowerRatioDb(u.targets[1], u.targets[0]);
    EXPECT_NEAR(measured, u.gains_db[1] - u.gains_db[0], 1e-6);
  }

  entries.push_back(entries[0]);
  entries.back().utterance_id = "broken";
  entries.back().sources[1] = (dir / "nope.wav").string();
  BuildReport r3 = BuildMixDataset(entries, (dir / "c").string(), opts);
  EXPECT_EQ(r3.written, 2);
  ASSERT_EQ(r3.failures.size(), 1u);
  EXPECT_EQ(r3.failures[0].first, "broken");
  // Entry seeds are positional, so the good entries are unchanged.
  EXPECT_EQ(FileBytes(dir / "a/mix/utt1.wav"), FileBytes(dir / "c/mix/utt1.wav"));
  EXPECT_EQ(LoadMixDataset((dir / "c").string()).utterances.size(), 2u);

  BuildReport r4 = BuildMixDataset({entries.back()}, (dir / "d").string(), opts);
  EXPECT_EQ(r4.written, 0);
  EXPECT_THROW(LoadMixDataset((dir / "d").string()), InvalidInput);
}

TEST(DatasetTest, SyntheticSpeakersOccupyDisjointBands) {
  const fs::path dir = TempDir("synth");
  const std::string manifest = WriteSyntheticCorpus(dir.string(), 8, 1);
  auto entries = ReadManifest(manifest);
  ASSERT_EQ(entries.size(), 8u);
  for (const auto& e : entries) {
    for (size_t k = 0; k < 2; ++k) {
      const Waveform w = ReadWav(e.sources[k]);
      ASSERT_EQ(w.size(), 32000);
      // Energy split at 1.25 kHz decides the band.
      const Tensor spec = StftSamples(w.AsTensor(), StftConfig{});
      const int64_t t = spec.dim(1), f = spec.dim(2);
      const int64_t split = 1250 * 512 / 16000;
      double low = 0, high = 0;
      for (int64_t i = 0; i < t; ++i)
        for (int64_t j = 0; j < f; ++j) {
          const double re = spec[i * f + j], im = spec[t * f + i * f + j];
          (j < split ? low : high) += re * re + im * im;
        }
      const bool tone = e.sources[k].find("tone") != std::string::npos;
      EXPECT_GT(tone ? low / high : high / low, 100.0) << e.sources[k];
      const MouthFrames m = ReadMroi(e.mouths[k]);
      EXPECT_EQ(m.frames, 50);
      EXPECT_NO_THROW(m.Validate());
    }
  }
  // Wider envelope value, more dark mouth-cavity pixels.
  auto dark = [](const MouthFrames& m) {
    int n = 0;
    for (auto p : m.pixels) n += p < 60;
    return n;
  };
  EXPECT_LT(dark(RenderMouth({0.1})), dark(RenderMouth({0.9})));
}

TEST(DatasetTest, SplitIsSeedStable) {
  std::vector<size_t> t1, v1, t2, v2;
  SplitTrainVal(8, 0.1, 4, &t1, &v1);
  SplitTrainVal(8, 0.1, 4, &t2, &v2);
  EXPECT_EQ(v1.size(), 1u);
  EXPECT_EQ(t1.size(), 7u);
  EXPECT_EQ(t1, t2);
  EXPECT_EQ(v1, v2);
  SplitTrainVal(20, 0.1, 4, &t1, &v1);
  EXPECT_EQ(v1.size(), 2u);
  SplitTrainVal(8, 0.0, 4, &t1, &v1);
  EXPECT_TRUE(v1.empty());
}

TEST(ModelTest, SeparationNetGradients) {
  ModelConfig m;
  m.stft = StftConfig::FromSamples(16, 4, 16000);
  m.channels = 8;
  m.semantic_dim = 6;
  m.num_speakers = 2;
  m.mst.hidden = 4;
  m.mst.blocks = 1;
  m.mst.heads = 2;
  m.mst.attn_qk_dim = 8;
  m.Finalize();
  ASSERT_EQ(m.stft.FftBins(), 9);
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    SeparationNet net(m, &rng);
    Var mix = testing::RandomVar(&rng, {20});
    ASSERT_EQ(m.stft.NumFrames(20), 6);
    std::vector<Var> streams{testing::RandomVar(&rng, {4, 6}),
                             testing::RandomVar(&rng, {4, 6})};
    const Tensor r0 = rng.NormalTensor({20}), r1 = rng.NormalTensor({20});
    auto loss = [&]() {
      auto est = net.Forward(mix, streams);
      return ops::Add(TotalLoss(est[0], r0, m.stft), TotalLoss(est[1], r1, m.stft));
    };
    std::vector<testing::NamedVar> wrt{{"mixture", mix},
                                       {"stream0", streams[0]},
                                       {"stream1", streams[1]}};
    for (auto& p : net.Parameters())
      if (p.trainable && (p.name.find("weight") != std::string::npos))
        wrt.push_back({p.name, p.var});
    auto report = testing::CheckGradients(loss, wrt, 6, seed);
    EXPECT_LT(report.max_rel_error, 1e-4) << "seed " << seed << " " << report.worst;
  }
}

class FullModelTest : public ::testing::TestWithParam<int> {};

TEST_P(FullModelTest, LengthsAndDeterminism) {
  const int s = GetParam();
  PrecisionScope precision(Precision::kFloat32);
  Rng rng(40 + s);
  const Waveform mix = RandomWave(&rng, 6400);
  std::vector<MouthFrames> mouths;
  for (int k = 0; k < s; ++k) mouths.push_back(RandomMouth(&rng, 10));
  std::vector<std::vector<Waveform>> runs;
  for (int rep = 0; rep < 2; ++rep) {
    CsfNet net(TinyModel(s), 9);
    net.InitFine();
    Rng perturb(3);
    for (auto& p : net.av().Parameters())
      p.var.mutable_value() = perturb.NormalTensor(p.var.shape(), 0.1);
    runs.push_back(net.Separate(mix, mouths));
  }
  ASSERT_EQ(runs[0].size(), static_cast<size_t>(s));
  for (int k = 0; k < s; ++k) {
    EXPECT_EQ(runs[0][k].size(), mix.size());
    EXPECT_TRUE(runs[0][k].Peak() > 0);
    EXPECT_EQ(runs[0][k].samples, runs[1][k].samples) << "speaker " << k;
  }
}

INSTANTIATE_TEST_SUITE_P(Speakers, FullModelTest, ::testing::Values(2, 3, 4));

TEST(ModelTest, FineEqualsCoarseAtInitialization) {
  PrecisionScope precision(Precision::kFloat32);
  Rng rng(8);
  const Waveform mix = RandomWave(&rng, 6400);
  std::vector<MouthFrames> mouths{RandomMouth(&rng, 10), RandomMouth(&rng, 10)};
  CsfNet net(TinyModel(2), 4);
  // Make the fusion increment matter once it is switched back on.
  net.InitFine();
  const auto coarse_only = [&]() {
    NoGradGuard g;
    auto video = net.VideoStreams(mouths);
    return net.CoarseForward(Var(mix.AsTensor()), video);
  }();
  const auto fine = net.Separate(mix, mouths);
  for (int k = 0; k < 2; ++k)
    EXPECT_TRUE(testing::BitEqual(fine[k].AsTensor(), coarse_only[k].value()));

  // A non-zero semantic increment changes the fine pass only.
  Rng perturb(1);
  for (auto& p : net.av().Parameters())
    p.var.mutable_value() = perturb.NormalTensor(p.var.shape(), 0.1);
  const auto changed = net.Separate(mix, mouths);
  EXPECT_FALSE(testing::BitEqual(changed[0].AsTensor(), coarse_only[0].value()));
  net.av().ZeroOutputLayer();
  const auto restored = net.Separate(mix, mouths);
  for (int k = 0; k < 2; ++k)
    EXPECT_TRUE(testing::BitEqual(restored[k].AsTensor(), coarse_only[k].value()));
}

TEST(ModelTest, AudioOnlyIgnoresMouths) {
  PrecisionScope precision(Precision::kFloat32);
  ModelConfig m = TinyModel(2);
  m.audio_only = true;
  CsfNet net(m, 2);
  Rng rng(2);
  const Waveform mix = RandomWave(&rng, 6400);
  auto a = net.Separate(mix, {RandomMouth(&rng, 10), RandomMouth(&rng, 10)});
  auto b = net.Separate(mix, {MouthFrames::Zeros(10), MouthFrames::Zeros(10)});
  EXPECT_EQ(a[0].samples, b[0].samples);
  for (auto& p : net.Parameters())
    EXPECT_EQ(p.name.rfind("coarse.", 0), 0u) << p.name;
}

TEST(ModelTest, OcclusionMatchesManualZeroing) {
  PrecisionScope precision(Precision::kFloat32);
  Rng rng(12);
  const Waveform mix = RandomWave(&rng, 6400);
  std::vector<MouthFrames> mouths{RandomMouth(&rng, 10), RandomMouth(&rng, 10)};
  CsfNet net(TinyModel(2), 5);
  OcclusionSpec spec{10, {0}, 77};
  auto occluded = net.Separate(mix, ApplyOcclusion(mouths, spec, 0));
  auto manual_mouths = mouths;
  manual_mouths[0] = MouthFrames::Zeros(10);
  auto manual = net.Separate(mix, manual_mouths);
  for (int k = 0; k < 2; ++k) EXPECT_EQ(occluded[k].samples, manual[k].samples);
  // Partial occlusion zeroes exactly the seeded run.
  OcclusionSpec part{4, {1}, 77};
  auto m2 = ApplyOcclusion(mouths, part, 3);
  const int64_t start = OcclusionStart(10, 4, OcclusionSeed(77, 3, 1));
  for (int64_t t = 0; t < 10; ++t) {
    const bool zero = t >= start && t < start + 4;
    const uint8_t* f = m2[1].frame(t);
    EXPECT_EQ(std::all_of(f, f + 88 * 88, [](uint8_t p) { return p == 0; }), zero);
  }
  EXPECT_EQ(m2[0].pixels, mouths[0].pixels);
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  PrecisionScope precision(Precision::kFloat32);
  const fs::path dir = TempDir("ckpt");
  Rng rng(21);
  const Waveform mix = RandomWave(&rng, 6400);
  std::vector<MouthFrames> mouths{RandomMouth(&rng, 10), RandomMouth(&rng, 10)};
  for (Stage stage : {Stage::kCoarse, Stage::kFine}) {
    CsfNet net(TinyModel(2), 6);
    if (stage == Stage::kFine) {
      net.InitFine();
      Rng perturb(2);
      for (auto& p : net.av().Parameters())
        p.var.mutable_value() = perturb.NormalTensor(p.var.shape(), 0.1);
    }
    const auto before = net.Separate(mix, mouths);
    Checkpoint c = SnapshotModel(&net, stage);
    c.epoch = 3;
    c.best_val_loss = -4.5;
    c.parent_id = stage == Stage::kFine ? "0123456789abcdef" : "";
    c.optimizer = {{"lr", 0.25}};
    c.optimizer_state["m.x"] = rng.NormalTensor({2, 3});
    const std::string path = (dir / (StageName(stage) + ".ckpt")).string();
    const std::string id = SaveCheckpoint(path, &c);
    Checkpoint back = LoadCheckpoint(path);
    EXPECT_EQ(back.id, id);
    EXPECT_EQ(back.stage, stage);
    EXPECT_EQ(back.epoch, 3);
    EXPECT_EQ(back.best_val_loss, -4.5);
    EXPECT_EQ(back.parent_id, c.parent_id);
    EXPECT_EQ(back.fingerprint, ModelFingerprint(net.config()));
    EXPECT_EQ(back.optimizer["lr"], 0.25);
    EXPECT_TRUE(testing::BitEqual(back.optimizer_state["m.x"], c.optimizer_state["m.x"]));
    auto restored = RestoreModel(back);
    EXPECT_EQ(restored->has_fine(), stage == Stage::kFine);
    const auto after = restored->Separate(mix, mouths);
    for (int k = 0; k < 2; ++k) EXPECT_EQ(before[k].samples, after[k].samples);
  }
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  EXPECT_THROW(LoadCheckpoint((dir / "junk.ckpt").string()), InvalidInput);
}

TEST(EvaluateTest, AggregationAndCaps) {
  const fs::path dir = TempDir("eval");
  const std::string manifest = WriteSyntheticCorpus((dir / "corpus").string(), 3, 5);
  MixOptions opts;
  opts.seed = 2;
  BuildMixDataset(ReadManifest(manifest), (dir / "data").string(), opts);
  MixDataset ds = LoadMixDataset((dir / "data").string());
  // Estimates equal to the targets (swapped, to exercise the alignment).
  fs::create_directories(dir / "est");
  for (const auto& u : ds.utterances) {
    WriteWav((dir / "est" / (u.id + "_s0.wav")).string(), u.targets[1]);
    WriteWav((dir / "est" / (u.id + "_s1.wav")).string(), u.targets[0]);
  }
  EvalReport r = EvaluateEstimateDir(ds, (dir / "est").string());
  ASSERT_EQ(r.rows.size(), 3u);
  double mean = 0;
  for (size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    const Utterance& u = ds.utterances[i];
    EXPECT_EQ(row.permutation, (std::vector<int>{1, 0}));
    for (int k = 0; k < 2; ++k)
      EXPECT_NEAR(row.sisdri[k], 120.0 - SiSdr(u.mixture, u.targets[k]), 1e-6);
    mean += row.mean_sisdri / 3;
  }
  EXPECT_NEAR(r.mean_sisdri, mean, 1e-12);
  EXPECT_NE(FormatRows(r).find("utt utt0 sisdri"), std::string::npos);
  EXPECT_EQ(SummaryJson(r)["utterances"], 3);
}

TEST(EvaluateTest, SweepZeroRowMatchesPlainEvaluation) {
  PrecisionScope precision(Precision::kFloat32);
  const fs::path dir = TempDir("sweep");
  const std::string manifest = WriteSyntheticCorpus((dir / "corpus").string(), 1, 5);
  BuildMixDataset(ReadManifest(manifest), (dir / "data").string(), MixOptions{});
  MixDataset ds = LoadMixDataset((dir / "data").string());
  CsfNet net(TinyModel(2), 1);
  const EvalReport plain = EvaluateModel(&net, ds);
  auto rows = OcclusionSweep(&net, ds, {0, 50}, {0, 1}, 9);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].report.mean_sisdri, plain.mean_sisdri);
  EXPECT_EQ(rows[0].report.mean_sdri, plain.mean_sdri);
  EXPECT_NE(FormatSweep(rows).find("n_missing"), std::string::npos);
}

TEST(TrainerTest, TinyRunsLogsAndProvenance) {
  const fs::path dir = TempDir("train");
  const std::string manifest = WriteSyntheticCorpus((dir / "corpus").string(), 3, 7);
  MixOptions opts;
  opts.seed = 1;
  BuildMixDataset(ReadManifest(manifest), (dir / "data").string(), opts);
  Config cfg;
  cfg.model = TinyModel(2);
  cfg.train = TrainConfig::Defaults(Stage::kCoarse);
  cfg.train.batch_size = 1;
  cfg.train.val_fraction = 0.3;
  cfg.train.grad_clip = 0.01;  // small enough that clipping is active
  cfg.train.dynamic_mixing = true;
  TrainOptions to;
  to.epochs = 2;
  to.out_dir = (dir / "run").string();
  to.log_path = (dir / "run/coarse.jsonl").string();
  TrainResult a = RunCoarseStage(cfg, LoadMixDataset((dir / "data").string()), to);
  ASSERT_EQ(a.epochs.size(), 2u);
  EXPECT_EQ(a.val_indices.size(), 1u);
  EXPECT_EQ(a.steps.size(), 4u);
  for (const auto& s : a.steps) {
    EXPECT_GT(s.grad_norm, cfg.train.grad_clip);
    EXPECT_LE(s.clipped_norm, cfg.train.grad_clip + 1e-6);
    EXPECT_TRUE(std::isfinite(s.loss));
  }
  EXPECT_TRUE(fs::exists(a.best_path));
  EXPECT_TRUE(fs::exists(a.last_path));
  int step_lines = 0;
  {
    std::ifstream in(to.log_path);
    std::string line;
    while (std::getline(in, line)) {
      const Json j = Json::parse(line);
      if (j["type"] == "step") {
        ++step_lines;
        EXPECT_LE(j["clipped_norm"].get<double>(), cfg.train.grad_clip + 1e-6);
      }
    }
  }
  EXPECT_EQ(step_lines, 4);

  // Same seed, same curve.
  TrainOptions again = to;
  again.out_dir = (dir / "run2").string();
  again.log_path.clear();
  TrainResult b = RunCoarseStage(cfg, LoadMixDataset((dir / "data").string()), again);
  for (size_t i = 0; i < a.steps.size(); ++i) EXPECT_EQ(a.steps[i].loss, b.steps[i].loss);

  const Checkpoint coarse = LoadCheckpoint(a.last_path);
  EXPECT_EQ(coarse.stage, Stage::kCoarse);
  Config fine_cfg = cfg;
  fine_cfg.train = TrainConfig::Defaults(Stage::kFine);
  EXPECT_EQ(fine_cfg.train.batch_size, 8);
  EXPECT_EQ(fine_cfg.train.learning_rate, 1e-4);
  fine_cfg.train.batch_size = 2;
  TrainOptions fo;
  fo.epochs = 1;
  fo.out_dir = (dir / "fine").string();
  TrainResult f = RunFineStage(fine_cfg, coarse, LoadMixDataset((dir / "data").string()), fo);
  const Checkpoint fine = LoadCheckpoint(f.last_path);
  EXPECT_EQ(fine.stage, Stage::kFine);
  EXPECT_EQ(fine.parent_id, coarse.id);
  EXPECT_EQ(fine.train.batch_size, 2);
  // Frozen parts are untouched by the fine stage.
  for (const auto& [name, t] : coarse.tensors) {
    if (name.rfind("vsr.", 0) == 0 || name.rfind("coarse.", 0) == 0) {
      EXPECT_TRUE(testing::BitEqual(t, fine.tensors.at(name))) << name;
    }
  }

  Config mismatch = fine_cfg;
  mismatch.model.mst.hidden = 6;
  mismatch.model.Finalize();
  EXPECT_THROW(RunFineStage(mismatch, coarse, LoadMixDataset((dir / "data").string()), fo),
               ConfigError);
}

}  // namespace
}  // namespace csfnet
