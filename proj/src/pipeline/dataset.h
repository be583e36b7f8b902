// pipeline/dataset.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_PIPELINE_DATASET_H_
#define CSFNET_PIPELINE_DATASET_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "base/random.h"
#include "dsp/wave.h"
#include "pipeline/config.h"
#include "semantics/mouth-frames.h"

namespace csfnet {

inline constexpr double kClipSeconds = 2.0;

struct MixManifestEntry {
  std::string utterance_id;
  std::vector<std::string> sources;
  std::vector<std::string> mouths;
  // Fixed gain offsets; drawn from the SNR range when absent.
  std::optional<std::vector<double>> gains_db;
  std::optional<std::string> noise;
  std::optional<double> noise_snr_db;
  double duration = kClipSeconds;

  int num_speakers() const { return static_cast<int>(sources.size()); }
  // Throws InvalidInput on a bad speaker count or a missing file.
  void Validate() const;
};

Json ToJson(const MixManifestEntry& e);
MixManifestEntry ManifestEntryFromJson(const Json& j, const std::string& base_dir);

// Line-delimited JSON; relative paths resolve against the manifest's folder.
std::vector<MixManifestEntry> ReadManifest(const std::string& path);
void WriteManifest(const std::string& path,
                   const std::vector<MixManifestEntry>& entries);

using DbRange = std::pair<double, double>;

struct MixOptions {
  DbRange snr_range{-5.0, 5.0};
  DbRange noise_snr_range{-5.0, 20.0};
  uint64_t seed = 0;
};

// gains[0] = 0 and the others uniform in `range`.
std::vector<double> DrawGains(int speakers, DbRange range, Rng* rng);

struct BuildReport {
  int written = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // id, error
};

// Writes <out>/mix/<id>.wav, <out>/targets/<id>_s<k>.wav, one metadata line
// per entry in <out>/metadata.jsonl and a summary in <out>/dataset.json.
// Bad entries produce an error record and are skipped.
BuildReport BuildMixDataset(const std::vector<MixManifestEntry>& manifest,
                            const std::string& out_dir, const MixOptions& opts);

struct Utterance {
  std::string id;
  Waveform mixture;
  std::vector<Waveform> targets;
  std::vector<MouthFrames> mouths;
  // Unscaled inputs kept for dynamic mixing.
  std::vector<Waveform> sources;
  std::optional<Waveform> noise;
  std::vector<double> gains_db;
  std::optional<double> noise_snr_db;

  int num_speakers() const { return static_cast<int>(targets.size()); }
};

struct MixDataset {
  std::vector<Utterance> utterances;
  MixOptions options;
};

MixDataset LoadMixDataset(const std::string& dir);

// Regenerates mixture and targets from the stored sources with fresh gains.
void Remix(Utterance* u, const MixOptions& opts, Rng* rng);

// Deterministic split: roughly `fraction` of the entries (at least one when
// there are two or more) go to validation.
void SplitTrainVal(size_t n, double fraction, uint64_t seed,
                   std::vector<size_t>* train, std::vector<size_t>* val);

// Synthetic corpus of tone (below 1 kHz) and chirp (1.5 to 3.5 kHz)
// "speakers" with mouth streams whose opening follows each source's
// envelope. Writes sources, mouths and <dir>/manifest.jsonl; returns the
// manifest path.
std::string WriteSyntheticCorpus(const std::string& dir, int utterances,
                                 uint64_t seed);

// Mouth stream whose opening tracks `envelope` (values in [0, 1] per frame).
MouthFrames RenderMouth(const std::vector<double>& envelope);

}  // namespace csfnet

#endif  // CSFNET_PIPELINE_DATASET_H_
