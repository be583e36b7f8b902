// tools/csfnet.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <glog/logging.h>

#include "base/error.h"
#include "base/gemm.h"
#include "base/runtime.h"
#include "pipeline/checkpoint.h"
#include "pipeline/config.h"
#include "pipeline/dataset.h"
#include "pipeline/evaluate.h"
#include "pipeline/model.h"
#include "pipeline/trainer.h"
#include "separator/param-report.h"

namespace fs = std::filesystem;
using namespace csfnet;

namespace {

struct ConfigFlags {
  std::string file;
  std::vector<std::string> overrides;

  void Attach(CLI::App* app) {
    app->add_option("--config", file, "JSON config file");
    app->add_option("--set", overrides, "override, e.g. model.channels=16")
        ->take_all();
  }
};

Precision PrecisionFor(const TrainConfig& t) {
  return t.float32_compute ? Precision::kFloat32 : Precision::kFloat64;
}

// "spk<k>:<n>" or "<k>:<n>".
std::pair<int, int64_t> ParseOcclusion(const std::string& s) {
  const size_t colon = s.find(':');
  CSF_CHECK_INPUT(colon != std::string::npos,
                  "occlusion must look like spk0:50, got '", s, "'");
  std::string who = s.substr(0, colon);
  if (who.rfind("spk", 0) == 0) who = who.substr(3);
  try {
    return {std::stoi(who), std::stoll(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw InvalidInput("bad occlusion spec '" + s + "'");
  }
}

std::vector<int> ParseSpeakers(const std::string& s, int count) {
  std::vector<int> out;
  if (s == "both" || s == "all") {
    for (int k = 0; k < count; ++k) out.push_back(k);
    return out;
  }
  size_t start = 0;
  while (start <= s.size()) {
    const size_t comma = s.find(',', start);
    out.push_back(std::stoi(s.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void PrintResult(const TrainResult& r) {
  std::cout << "train_sisdri " << r.final_train_sisdri << "\n"
            << "last " << r.last_path << " id " << r.last.id << "\n"
            << "best " << r.best_path << "\n";
}

int Synth(const std::string& out, int n, uint64_t seed) {
  std::cout << WriteSyntheticCorpus(out, n, seed) << "\n";
  return 0;
}

int Mix(const std::string& manifest, const std::string& out,
        std::vector<double> snr, std::vector<double> noise_snr, uint64_t seed) {
  MixOptions opts;
  opts.snr_range = {snr.at(0), snr.at(1)};
  opts.noise_snr_range = {noise_snr.at(0), noise_snr.at(1)};
  opts.seed = seed;
  const auto entries = ReadManifest(manifest);
  const BuildReport r = BuildMixDataset(entries, out, opts);
  for (const auto& [id, err] : r.failures)
    std::cerr << "skipped " << id << ": " << err << "\n";
  std::cout << "written " << r.written << " failed " << r.failures.size() << "\n";
  return r.written == 0 && !entries.empty() ? 1 : 0;
}

int TrainCoarse(const std::string& data, const std::string& out,
                const ConfigFlags& cf, int epochs, std::string log) {
  const Config cfg = LoadConfig(cf.file, Stage::kCoarse, cf.overrides);
  TrainOptions opts;
  opts.out_dir = out;
  opts.epochs = epochs;
  opts.log_path = log.empty() ? (fs::path(out) / "coarse.jsonl").string() : log;
  PrintResult(RunCoarseStage(cfg, LoadMixDataset(data), opts));
  return 0;
}

int TrainFine(const std::string& data, const std::string& coarse_path,
              const std::string& out, const ConfigFlags& cf, int epochs,
              std::string log) {
  const Checkpoint coarse = LoadCheckpoint(coarse_path);
  // The model section defaults to the coarse checkpoint's; a file or
  // override that changes it trips the fingerprint check.
  Json j = Json::object();
  if (!cf.file.empty()) {
    std::ifstream in(cf.file);
    CSF_CHECK_CONFIG(in.good(), "cannot open config file ", cf.file);
    j = Json::parse(in);
  }
  if (!j.contains("model")) j["model"] = ToJson(coarse.model);
  for (const auto& o : cf.overrides) ApplyOverride(&j, o);
  const Config cfg = ConfigFromJson(j, Stage::kFine);
  TrainOptions opts;
  opts.out_dir = out;
  opts.epochs = epochs;
  opts.log_path = log.empty() ? (fs::path(out) / "fine.jsonl").string() : log;
  PrintResult(RunFineStage(cfg, coarse, LoadMixDataset(data), opts));
  return 0;
}

int Separate(const std::string& ckpt_path, const std::string& mixture,
             const std::vector<std::string>& mouth_paths,
             const std::vector<std::string>& occlusions, uint64_t seed,
             const std::string& out) {
  const int s = static_cast<int>(mouth_paths.size());
  CSF_CHECK_INPUT(s >= 2 && s <= 4, "need 2 to 4 mouth streams, got ", s);
  const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  CSF_CHECK_INPUT(s == ckpt.model.num_speakers, "checkpoint separates ",
                  ckpt.model.num_speakers, " speakers, got ", s, " mouth streams");
  auto net = RestoreModel(ckpt);
  PrecisionScope precision(PrecisionFor(ckpt.train));
  const Waveform mix = ReadWav(mixture);
  std::vector<MouthFrames> mouths;
  for (const auto& p : mouth_paths) mouths.push_back(LoadMouthFrames(p));
  for (const auto& o : occlusions) {
    const auto [k, n] = ParseOcclusion(o);
    CSF_CHECK_INPUT(k >= 0 && k < s, "occluded speaker ", k, " out of range");
    mouths[k] = Occlude(mouths[k], n, OcclusionSeed(seed, 0, k));
  }
  const auto ests = net->Separate(mix, mouths);
  fs::create_directories(out);
  const std::string stem = fs::path(mixture).stem().string();
  for (int k = 0; k < s; ++k) {
    const std::string path = (fs::path(out) / (stem + "_s" + std::to_string(k) + ".wav")).string();
    WriteWav(path, ests[k]);
    std::cout << path << "\n";
  }
  return 0;
}

int Evaluate(const std::string& ckpt_path, const std::string& data,
             const std::string& est_dir, const std::string& write_dir,
             bool sweep, const std::string& sweep_speakers, uint64_t seed,
             const std::string& json_out) {
  const MixDataset ds = LoadMixDataset(data);
  EvalReport report;
  Json summary;
  if (!est_dir.empty()) {
    report = EvaluateEstimateDir(ds, est_dir);
    summary = SummaryJson(report);
  } else {
    CSF_CHECK_INPUT(!ckpt_path.empty(), "evaluate needs --ckpt or --est-dir");
    const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
    auto net = RestoreModel(ckpt);
    PrecisionScope precision(PrecisionFor(ckpt.train));
    report = EvaluateModel(net.get(), ds);
    summary = SummaryJson(report);
    summary["stage"] = StageName(ckpt.stage);
    if (!write_dir.empty()) {
      fs::create_directories(write_dir);
      for (const auto& u : ds.utterances) {
        const auto ests = net->Separate(u.mixture, u.mouths);
        for (size_t k = 0; k < ests.size(); ++k)
          WriteWav((fs::path(write_dir) / (u.id + "_s" + std::to_string(k) + ".wav")).string(),
                   ests[k]);
      }
    }
    if (sweep) {
      const auto rows = OcclusionSweep(
          net.get(), ds, DefaultOcclusionSweep(),
          ParseSpeakers(sweep_speakers, ckpt.model.num_speakers), seed);
      std::cout << FormatSweep(rows);
      Json table = Json::array();
      for (const auto& r : rows)
        table.push_back({{"n_missing", r.n_missing},
                         {"mean_sisdri", r.report.mean_sisdri},
                         {"mean_sdri", r.report.mean_sdri}});
      summary["occlusion_sweep"] = table;
    }
  }
  std::cout << FormatRows(report) << summary.dump() << "\n";
  if (!json_out.empty()) std::ofstream(json_out) << summary.dump(2) << "\n";
  return 0;
}

int OccludeCmd(const std::string& in, int64_t n, uint64_t seed,
               const std::string& out) {
  const MouthFrames m = LoadMouthFrames(in);
  const MouthFrames o = Occlude(m, n, seed);
  if (fs::path(out).extension() == ".mroi")
    WriteMroi(out, o);
  else
    WritePgmDirectory(out, o);
  std::cout << "start " << OcclusionStart(m.frames, n, seed) << " n " << n << "\n";
  return 0;
}

int Params(const ConfigFlags& cf) {
  const Config cfg = LoadConfig(cf.file, Stage::kCoarse, cf.overrides);
  CsfNet net(cfg.model, 0);
  const auto sep = ParameterRecords(&net.coarse(), "separation.");
  std::cout << FormatParameterReport(sep);
  std::vector<ParamRecord> semantic;
  for (Module* m : {static_cast<Module*>(&net.vsr()),
                    static_cast<Module*>(&net.asr()),
                    static_cast<Module*>(&net.av())}) {
    const std::string prefix = m == &net.vsr() ? "vsr." : m == &net.asr() ? "asr." : "av.";
    const auto r = ParameterRecords(m, prefix);
    semantic.insert(semantic.end(), r.begin(), r.end());
  }
  std::cout << "semantic_total " << TotalParameters(semantic) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char* argv[]) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;
  ConfigureAllocator();

  CLI::App app{"CSFNet coarse-to-fine audio-visual speech separation"};
  app.require_subcommand(1);

  uint64_t seed = 0;
  std::string out, data, ckpt, log, manifest;
  int epochs = 0, utterances = 8;
  ConfigFlags cf;

  auto* synth = app.add_subcommand("synth", "write the synthetic tone/chirp corpus");
  synth->add_option("--out", out, "output folder")->required();
  synth->add_option("--utterances", utterances, "number of mixtures");
  synth->add_option("--seed", seed, "seed");

  std::vector<double> snr{-5, 5}, noise_snr{-5, 20};
  auto* mix = app.add_subcommand("mix", "materialize mixtures from a manifest");
  mix->add_option("--manifest", manifest, "JSONL manifest")->required();
  mix->add_option("--out", out, "dataset folder")->required();
  mix->add_option("--snr-range", snr, "speaker gain range (dB)")->expected(2);
  mix->add_option("--noise-snr-range", noise_snr, "noise SNR range (dB)")->expected(2);
  mix->add_option("--seed", seed, "seed");

  auto* coarse = app.add_subcommand("train-coarse", "train the coarse stage");
  coarse->add_option("--data", data, "dataset folder")->required();
  coarse->add_option("--out", out, "run folder")->required();
  coarse->add_option("--epochs", epochs, "epoch budget (default: max_epochs)");
  coarse->add_option("--log", log, "JSONL training log");
  cf.Attach(coarse);

  std::string coarse_ckpt;
  auto* fine = app.add_subcommand("train-fine", "train the fine stage");
  fine->add_option("--data", data, "dataset folder")->required();
  fine->add_option("--coarse", coarse_ckpt, "coarse checkpoint")->required();
  fine->add_option("--out", out, "run folder")->required();
  fine->add_option("--epochs", epochs, "epoch budget (default: max_epochs)");
  fine->add_option("--log", log, "JSONL training log");
  cf.Attach(fine);

  std::string mixture;
  std::vector<std::string> mouths, occlusions;
  auto* sep = app.add_subcommand("separate", "separate one mixture");
  sep->add_option("--ckpt", ckpt, "checkpoint")->required();
  sep->add_option("--mixture", mixture, "mixture WAV")->required();
  sep->add_option("--mouths", mouths, "one mouth stream per speaker")->required();
  sep->add_option("--occlude", occlusions, "e.g. spk0:50");
  sep->add_option("--seed", seed, "occlusion seed");
  sep->add_option("--out", out, "output folder")->required();

  std::string est_dir, write_dir, sweep_speakers = "0", json_out;
  bool sweep = false;
  auto* eval = app.add_subcommand("evaluate", "SI-SDRi / SDRi report");
  eval->add_option("--ckpt", ckpt, "checkpoint");
  eval->add_option("--data", data, "dataset folder")->required();
  eval->add_option("--est-dir", est_dir, "score existing <id>_s<k>.wav files");
  eval->add_option("--write-est", write_dir, "also write the estimates here");
  eval->add_flag("--sweep", sweep, "occlusion sweep over 0..50 missing frames");
  eval->add_option("--sweep-speakers", sweep_speakers, "e.g. 0, 1 or both");
  eval->add_option("--seed", seed, "occlusion seed");
  eval->add_option("--json", json_out, "write the summary here");

  std::string in;
  int64_t n_missing = 0;
  auto* occ = app.add_subcommand("occlude", "zero a run of mouth frames");
  occ->add_option("--in", in, "mouth stream (.mroi or PGM folder)")->required();
  occ->add_option("--n", n_missing, "frames to remove")->required();
  occ->add_option("--seed", seed, "seed");
  occ->add_option("--out", out, "output (.mroi file or PGM folder)")->required();

  auto* params = app.add_subcommand("params", "per-layer parameter report");
  cf.Attach(params);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*synth) return Synth(out, utterances, seed);
    if (*mix) return Mix(manifest, out, snr, noise_snr, seed);
    if (*coarse) return TrainCoarse(data, out, cf, epochs, log);
    if (*fine) return TrainFine(data, coarse_ckpt, out, cf, epochs, log);
    if (*sep) return Separate(ckpt, mixture, mouths, occlusions, seed, out);
    if (*eval)
      return Evaluate(ckpt, data, est_dir, write_dir, sweep, sweep_speakers, seed,
                      json_out);
    if (*occ) return OccludeCmd(in, n_missing, seed, out);
    if (*params) return Params(cf);
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
