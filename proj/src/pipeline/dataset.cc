// pipeline/dataset.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pipeline/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "base/error.h"
#include "dsp/mix.h"

namespace csfnet {

namespace fs = std::filesystem;

namespace {

std::string Resolve(const std::string& path, const std::string& base) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return fs::absolute(fs::path(base) / path).lexically_normal().string();
}

int64_t ClipSamples(double seconds, int sample_rate) {
  return static_cast<int64_t>(std::llround(seconds * sample_rate));
}

Waveform LoadClip(const std::string& path, double seconds) {
  Waveform w = ReadWav(path);
  const int64_t n = ClipSamples(seconds, w.sample_rate);
  CSF_CHECK_INPUT(w.size() >= n, path, " has ", w.size(),
                  " samples, clip needs ", n);
  w.samples.resize(n);
  return w;
}

MouthFrames LoadMouthClip(const std::string& path, double seconds) {
  MouthFrames m = LoadMouthFrames(path);
  const int64_t n = VideoFramesFor(seconds);
  CSF_CHECK_INPUT(m.frames >= n, path, " has ", m.frames,
                  " frames, clip needs ", n);
  m.frames = n;
  m.pixels.resize(n * m.height * m.width);
  return m;
}

void WriteLines(const std::string& path, const std::vector<Json>& lines) {
  std::ofstream out(path);
  CSF_CHECK_INPUT(out.good(), "cannot write ", path);
  for (const Json& j : lines) out << j.dump() << '\n';
}

std::vector<Json> ReadLines(const std::string& path) {
  std::ifstream in(path);
  CSF_CHECK_INPUT(in.good(), "cannot open ", path);
  std::vector<Json> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw InvalidInput(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

void MixManifestEntry::Validate() const {
  CSF_CHECK_INPUT(!utterance_id.empty(), "manifest entry without utterance_id");
  CSF_CHECK_INPUT(sources.size() >= 2 && sources.size() <= 4, utterance_id,
                  ": 2 to 4 speakers required, got ", sources.size());
  CSF_CHECK_INPUT(mouths.size() == sources.size(), utterance_id, ": ",
                  mouths.size(), " mouth streams for ", sources.size(),
                  " sources");
  if (gains_db)
    CSF_CHECK_INPUT(gains_db->size() == sources.size(), utterance_id,
                    ": gains_db has the wrong length");
  CSF_CHECK_INPUT(duration > 0, utterance_id, ": duration must be positive");
  std::vector<std::string> files = sources;
  files.insert(files.end(), mouths.begin(), mouths.end());
  if (noise) files.push_back(*noise);
  for (const auto& f : files)
    CSF_CHECK_INPUT(fs::exists(f), utterance_id, ": missing file ", f);
}

Json ToJson(const MixManifestEntry& e) {
  Json j = {{"utterance_id", e.utterance_id},
            {"sources", e.sources},
            {"mouths", e.mouths},
            {"duration", e.duration}};
  if (e.gains_db) j["gains_db"] = *e.gains_db;
  if (e.noise) j["noise"] = *e.noise;
  if (e.noise_snr_db) j["noise_snr_db"] = *e.noise_snr_db;
  return j;
}

MixManifestEntry ManifestEntryFromJson(const Json& j, const std::string& base_dir) {
  MixManifestEntry e;
  try {
    e.utterance_id = j.at("utterance_id").get<std::string>();
    for (const auto& s : j.at("sources")) e.sources.push_back(Resolve(s, base_dir));
    for (const auto& m : j.at("mouths")) e.mouths.push_back(Resolve(m, base_dir));
    if (j.contains("gains_db")) e.gains_db = j["gains_db"].get<std::vector<double>>();
    if (j.contains("noise")) e.noise = Resolve(j["noise"], base_dir);
    if (j.contains("noise_snr_db")) e.noise_snr_db = j["noise_snr_db"].get<double>();
    if (j.contains("duration")) e.duration = j["duration"].get<double>();
  } catch (const Json::exception& ex) {
    throw InvalidInput(std::string("bad manifest record: ") + ex.what());
  }
  return e;
}

std::vector<MixManifestEntry> ReadManifest(const std::string& path) {
  const std::string base = fs::path(path).parent_path().string();
  std::vector<MixManifestEntry> out;
  for (const Json& j : ReadLines(path)) out.push_back(ManifestEntryFromJson(j, base));
  return out;
}

void WriteManifest(const std::string& path,
                   const std::vector<MixManifestEntry>& entries) {
  std::vector<Json> lines;
  for (const auto& e : entries) lines.push_back(ToJson(e));
  WriteLines(path, lines);
}

std::vector<double> DrawGains(int speakers, DbRange range, Rng* rng) {
  CSF_CHECK_INPUT(range.first <= range.second, "empty SNR range [",
                  range.first, ", ", range.second, "]");
  std::vector<double> g(speakers, 0.0);
  for (int i = 1; i < speakers; ++i) g[i] = rng->Uniform(range.first, range.second);
  return g;
}

BuildReport BuildMixDataset(const std::vector<MixManifestEntry>& manifest,
                            const std::string& out_dir, const MixOptions& opts) {
  fs::create_directories(fs::path(out_dir) / "mix");
  fs::create_directories(fs::path(out_dir) / "targets");
  BuildReport report;
  std::vector<Json> lines;
  for (size_t k = 0; k < manifest.size(); ++k) {
    const MixManifestEntry& e = manifest[k];
    // Per-entry stream: one bad entry does not shift the others' draws.
    Rng rng(MixSeed(opts.seed, k));
    try {
      e.Validate();
      std::vector<Waveform> sources;
      for (const auto& s : e.sources) sources.push_back(LoadClip(s, e.duration));
      for (const auto& m : e.mouths) LoadMouthClip(m, e.duration);
      std::vector<double> gains =
          e.gains_db ? *e.gains_db : DrawGains(e.num_speakers(), opts.snr_range, &rng);
      std::optional<Waveform> noise;
      std::optional<double> noise_snr;
      if (e.noise) {
        noise = LoadClip(*e.noise, e.duration);
        noise_snr = e.noise_snr_db ? *e.noise_snr_db
                                   : rng.Uniform(opts.noise_snr_range.first,
                                                 opts.noise_snr_range.second);
      }
      MixResult r = MixSources(sources, gains, noise ? &*noise : nullptr, noise_snr);
      Json rec = {{"utterance_id", e.utterance_id},
                  {"mixture", "mix/" + e.utterance_id + ".wav"},
                  {"sources", e.sources},
                  {"mouths", e.mouths},
                  {"gains_db", gains},
                  {"peak_scale", r.peak_scale},
                  {"duration", e.duration}};
      WriteWav((fs::path(out_dir) / "mix" / (e.utterance_id + ".wav")).string(),
               r.mixture);
      Json targets = Json::array();
      for (size_t i = 0; i < r.scaled_sources.size(); ++i) {
        const std::string rel =
            "targets/" + e.utterance_id + "_s" + std::to_string(i) + ".wav";
        WriteWav((fs::path(out_dir) / rel).string(), r.scaled_sources[i]);
        targets.push_back(rel);
      }
      rec["targets"] = targets;
      if (noise) {
        rec["noise"] = *e.noise;
        rec["noise_snr_db"] = *noise_snr;
      }
      lines.push_back(rec);
      ++report.written;
    } catch (const std::exception& ex) {
      lines.push_back({{"utterance_id", e.utterance_id}, {"error", ex.what()}});
      report.failures.emplace_back(e.utterance_id, ex.what());
    }
  }
  WriteLines((fs::path(out_dir) / "metadata.jsonl").string(), lines);
  Json summary = {{"snr_range", {opts.snr_range.first, opts.snr_range.second}},
                  {"noise_snr_range",
                   {opts.noise_snr_range.first, opts.noise_snr_range.second}},
                  {"seed", opts.seed},
                  {"written", report.written},
                  {"failed", report.failures.size()}};
  std::ofstream out(fs::path(out_dir) / "dataset.json");
  out << summary.dump(2) << '\n';
  return report;
}

MixDataset LoadMixDataset(const std::string& dir) {
  MixDataset ds;
  const fs::path root(dir);
  {
    std::ifstream in(root / "dataset.json");
    CSF_CHECK_INPUT(in.good(), "no dataset.json in ", dir);
    const Json s = Json::parse(in);
    ds.options.snr_range = {s.at("snr_range")[0], s.at("snr_range")[1]};
    ds.options.noise_snr_range = {s.at("noise_snr_range")[0],
                                  s.at("noise_snr_range")[1]};
    ds.options.seed = s.at("seed").get<uint64_t>();
  }
  for (const Json& j : ReadLines((root / "metadata.jsonl").string())) {
    if (j.contains("error")) continue;
    Utterance u;
    u.id = j.at("utterance_id").get<std::string>();
    const double duration = j.value("duration", kClipSeconds);
    u.mixture = ReadWav((root / j.at("mixture").get<std::string>()).string());
    for (const auto& t : j.at("targets"))
      u.targets.push_back(ReadWav((root / t.get<std::string>()).string()));
    for (const auto& m : j.at("mouths")) u.mouths.push_back(LoadMouthClip(m, duration));
    for (const auto& s : j.at("sources")) u.sources.push_back(LoadClip(s, duration));
    if (j.contains("noise")) {
      u.noise = LoadClip(j["noise"], duration);
      u.noise_snr_db = j["noise_snr_db"].get<double>();
    }
    u.gains_db = j.at("gains_db").get<std::vector<double>>();
    ds.utterances.push_back(std::move(u));
  }
  CSF_CHECK_INPUT(!ds.utterances.empty(), "dataset ", dir, " has no usable entries");
  return ds;
}

void Remix(Utterance* u, const MixOptions& opts, Rng* rng) {
  u->gains_db = DrawGains(u->num_speakers(), opts.snr_range, rng);
  if (u->noise)
    u->noise_snr_db = rng->Uniform(opts.noise_snr_range.first,
                                   opts.noise_snr_range.second);
  MixResult r = MixSources(u->sources, u->gains_db, u->noise ? &*u->noise : nullptr,
                           u->noise_snr_db);
  u->mixture = std::move(r.mixture);
  u->targets = std::move(r.scaled_sources);
}

void SplitTrainVal(size_t n, double fraction, uint64_t seed,
                   std::vector<size_t>* train, std::vector<size_t>* val) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  size_t n_val = 0;
  if (fraction > 0 && n >= 2)
    n_val = std::max<size_t>(1, static_cast<size_t>(std::llround(fraction * n)));
  val->assign(idx.begin(), idx.begin() + n_val);
  train->assign(idx.begin() + n_val, idx.end());
  std::sort(val->begin(), val->end());
  std::sort(train->begin(), train->end());
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Slow syllable-like amplitude contour in [0.15, 1].
double Envelope(double t, double rate, double phase) {
  return 0.15 + 0.85 * 0.5 * (1.0 - std::cos(kTwoPi * rate * t + phase));
}

double Triangle(double x) {
  const double f = x - std::floor(x);
  return f < 0.5 ? 2 * f : 2 - 2 * f;
}

}  // namespace

MouthFrames RenderMouth(const std::vector<double>& envelope) {
  MouthFrames m;
  m.frames = static_cast<int64_t>(envelope.size());
  m.pixels.assign(m.frames * kMouthSize * kMouthSize, 0);
  const double cx = 43.5, cy = 50.0;
  for (int64_t t = 0; t < m.frames; ++t) {
    const double open = std::clamp(envelope[t], 0.0, 1.0);
    const double a = 20.0 + 6.0 * open, b = 2.0 + 16.0 * open;
    const double la = a + 5.0, lb = b + 6.0;
    uint8_t* f = m.frame(t);
    for (int64_t y = 0; y < kMouthSize; ++y) {
      for (int64_t x = 0; x < kMouthSize; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double inner = (dx * dx) / (a * a) + (dy * dy) / (b * b);
        const double outer = (dx * dx) / (la * la) + (dy * dy) / (lb * lb);
        double v = 120.0 + 8.0 * std::sin(0.3 * x) * std::cos(0.2 * y);
        if (outer < 1.0) v = 175.0;
        if (inner < 1.0) v = 25.0;
        f[y * kMouthSize + x] = static_cast<uint8_t>(std::lround(v));
      }
    }
  }
  return m;
}

std::string WriteSyntheticCorpus(const std::string& dir, int utterances,
                                 uint64_t seed) {
  CSF_CHECK_INPUT(utterances > 0, "need at least one utterance");
  const fs::path root(dir);
  fs::create_directories(root / "sources");
  fs::create_directories(root / "mouths");
  constexpr int kRate = 16000;
  const int64_t n = ClipSamples(kClipSeconds, kRate);
  const int64_t frames = VideoFramesFor(kClipSeconds);
  std::vector<MixManifestEntry> entries;
  for (int k = 0; k < utterances; ++k) {
    Rng rng(MixSeed(seed, static_cast<uint64_t>(k)));
    const std::string id = "utt" + std::to_string(k);
    struct Voice {
      std::string name;
      Waveform wave;
      std::vector<double> env;
    };
    std::vector<Voice> voices(2);

    // Tone speaker: fundamental and second harmonic, both below 1 kHz.
    const double f0 = rng.Uniform(150.0, 450.0);
    const double tone_rate = rng.Uniform(2.5, 4.5), tone_phase = rng.Uniform(0, kTwoPi);
    // Chirp speaker: triangular sweep across 1.5 to 3.5 kHz.
    const double sweep_rate = rng.Uniform(0.5, 1.5), sweep_phase = rng.Uniform(0, 1);
    const double chirp_rate = rng.Uniform(2.5, 4.5), chirp_phase = rng.Uniform(0, kTwoPi);
    voices[0].name = id + "_tone";
    voices[1].name = id + "_chirp";
    double chirp_arg = 0;
    for (auto& v : voices) {
      v.wave.sample_rate = kRate;
      v.wave.samples.resize(n);
    }
    for (int64_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / kRate;
      const double et = Envelope(t, tone_rate, tone_phase);
      voices[0].wave.samples[i] =
          0.3 * et * (std::sin(kTwoPi * f0 * t) + 0.5 * std::sin(2 * kTwoPi * f0 * t));
      const double fc = 1500.0 + 2000.0 * Triangle(sweep_rate * t + sweep_phase);
      chirp_arg += kTwoPi * fc / kRate;
      voices[1].wave.samples[i] =
          0.3 * Envelope(t, chirp_rate, chirp_phase) * std::sin(chirp_arg);
    }
    for (int64_t f = 0; f < frames; ++f) {
      const double t = (f + 0.5) / kVideoFps;
      voices[0].env.push_back(Envelope(t, tone_rate, tone_phase));
      voices[1].env.push_back(Envelope(t, chirp_rate, chirp_phase));
    }
    // Alternate the speaker order so the permutation search has work to do.
    if (k % 2 == 1) std::swap(voices[0], voices[1]);
    MixManifestEntry e;
    e.utterance_id = id;
    for (const auto& v : voices) {
      const std::string wav = "sources/" + v.name + ".wav";
      const std::string mroi = "mouths/" + v.name + ".mroi";
      WriteWav((root / wav).string(), v.wave);
      WriteMroi((root / mroi).string(), RenderMouth(v.env));
      e.sources.push_back(wav);
      e.mouths.push_back(mroi);
    }
    entries.push_back(std::move(e));
  }
  const std::string manifest = (root / "manifest.jsonl").string();
  WriteManifest(manifest, entries);
  return manifest;
}

}  // namespace csfnet
