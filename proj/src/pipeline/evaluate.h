// pipeline/evaluate.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_PIPELINE_EVALUATE_H_
#define CSFNET_PIPELINE_EVALUATE_H_

#include <string>
#include <vector>

#include "pipeline/dataset.h"
#include "pipeline/model.h"

namespace csfnet {

struct UtteranceMetrics {
  std::string id;
  // permutation[i] = reference matched to estimate i.
  std::vector<int> permutation;
  // Per reference speaker.
  std::vector<double> sisdri, sdri;
  double mean_sisdri = 0, mean_sdri = 0;
};

// Aligns estimates to references by maximum total SI-SDR, then scores each
// pair against the mixture baseline.
UtteranceMetrics ScoreEstimates(const std::vector<Waveform>& ests,
                                const std::vector<Waveform>& refs,
                                const Waveform& mixture);

struct EvalReport {
  std::vector<UtteranceMetrics> rows;
  double mean_sisdri = 0, mean_sdri = 0;
};

EvalReport Summarize(std::vector<UtteranceMetrics> rows);

struct OcclusionSpec {
  int64_t n_missing = 0;
  // Speakers whose mouth stream loses frames; empty means none.
  std::vector<int> speakers;
  uint64_t seed = 0;
};

// Seed used to occlude speaker `speaker` of utterance number `index`.
uint64_t OcclusionSeed(uint64_t seed, size_t index, int speaker);

std::vector<MouthFrames> ApplyOcclusion(const std::vector<MouthFrames>& mouths,
                                        const OcclusionSpec& spec, size_t index);

// Runs the model (coarse, or coarse + fine when present) on every
// utterance; `indices` empty means all.
EvalReport EvaluateModel(CsfNet* net, const MixDataset& data,
                         const OcclusionSpec& occlusion = {},
                         const std::vector<size_t>& indices = {});

// Scores <est_dir>/<id>_s<k>.wav files against the dataset targets.
EvalReport EvaluateEstimateDir(const MixDataset& data, const std::string& est_dir);

inline const std::vector<int64_t>& DefaultOcclusionSweep() {
  static const std::vector<int64_t> kSweep{0, 5, 10, 20, 30, 40, 50};
  return kSweep;
}

struct SweepRow {
  int64_t n_missing;
  EvalReport report;
};

std::vector<SweepRow> OcclusionSweep(CsfNet* net, const MixDataset& data,
                                     const std::vector<int64_t>& ns,
                                     const std::vector<int>& speakers,
                                     uint64_t seed);

// "utt <id> sisdri <x> sdri <y>" lines.
std::string FormatRows(const EvalReport& r);
Json SummaryJson(const EvalReport& r);
std::string FormatSweep(const std::vector<SweepRow>& rows);

}  // namespace csfnet

#endif  // CSFNET_PIPELINE_EVALUATE_H_
