// pipeline/evaluate.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pipeline/evaluate.h"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "base/error.h"
#include "objectives/metrics.h"
#include "objectives/pit.h"

namespace csfnet {

UtteranceMetrics ScoreEstimates(const std::vector<Waveform>& ests,
                                const std::vector<Waveform>& refs,
                                const Waveform& mixture) {
  CSF_CHECK_INPUT(ests.size() == refs.size(), "got ", ests.size(),
                  " estimates for ", refs.size(), " references");
  const size_t s = refs.size();
  std::vector<std::vector<double>> m(s, std::vector<double>(s));
  for (size_t i = 0; i < s; ++i)
    for (size_t j = 0; j < s; ++j) m[i][j] = -SiSdr(ests[i], refs[j]);
  const PitResult pit = PitFromMatrix(m);
  UtteranceMetrics u;
  u.permutation = pit.permutation;
  u.sisdri.assign(s, 0);
  u.sdri.assign(s, 0);
  for (size_t i = 0; i < s; ++i) {
    const int j = pit.permutation[i];
    u.sisdri[j] = SiSdri(ests[i], refs[j], mixture);
    u.sdri[j] = Sdri(ests[i], refs[j], mixture);
  }
  for (size_t j = 0; j < s; ++j) {
    u.mean_sisdri += u.sisdri[j] / s;
    u.mean_sdri += u.sdri[j] / s;
  }
  return u;
}

EvalReport Summarize(std::vector<UtteranceMetrics> rows) {
  EvalReport r;
  r.rows = std::move(rows);
  if (r.rows.empty()) return r;
  for (const auto& u : r.rows) {
    r.mean_sisdri += u.mean_sisdri;
    r.mean_sdri += u.mean_sdri;
  }
  r.mean_sisdri /= r.rows.size();
  r.mean_sdri /= r.rows.size();
  return r;
}

uint64_t OcclusionSeed(uint64_t seed, size_t index, int speaker) {
  return MixSeed(MixSeed(seed, index), static_cast<uint64_t>(speaker));
}

std::vector<MouthFrames> ApplyOcclusion(const std::vector<MouthFrames>& mouths,
                                        const OcclusionSpec& spec, size_t index) {
  std::vector<MouthFrames> out = mouths;
  for (int k : spec.speakers) {
    CSF_CHECK_INPUT(k >= 0 && k < static_cast<int>(mouths.size()),
                    "occluded speaker ", k, " out of range");
    out[k] = Occlude(mouths[k], spec.n_missing, OcclusionSeed(spec.seed, index, k));
  }
  return out;
}

EvalReport EvaluateModel(CsfNet* net, const MixDataset& data,
                         const OcclusionSpec& occlusion,
                         const std::vector<size_t>& indices) {
  std::vector<size_t> order = indices;
  if (order.empty())
    for (size_t i = 0; i < data.utterances.size(); ++i) order.push_back(i);
  std::vector<UtteranceMetrics> rows;
  for (size_t i : order) {
    const Utterance& u = data.utterances.at(i);
    auto ests = net->Separate(u.mixture, ApplyOcclusion(u.mouths, occlusion, i));
    UtteranceMetrics m = ScoreEstimates(ests, u.targets, u.mixture);
    m.id = u.id;
    rows.push_back(std::move(m));
  }
  return Summarize(std::move(rows));
}

EvalReport EvaluateEstimateDir(const MixDataset& data, const std::string& est_dir) {
  std::vector<UtteranceMetrics> rows;
  for (const Utterance& u : data.utterances) {
    std::vector<Waveform> ests;
    for (int k = 0; k < u.num_speakers(); ++k)
      ests.push_back(ReadWav((std::filesystem::path(est_dir) /
                              (u.id + "_s" + std::to_string(k) + ".wav"))
                                 .string()));
    UtteranceMetrics m = ScoreEstimates(ests, u.targets, u.mixture);
    m.id = u.id;
    rows.push_back(std::move(m));
  }
  return Summarize(std::move(rows));
}

std::vector<SweepRow> OcclusionSweep(CsfNet* net, const MixDataset& data,
                                     const std::vector<int64_t>& ns,
                                     const std::vector<int>& speakers,
                                     uint64_t seed) {
  std::vector<SweepRow> out;
  for (int64_t n : ns) {
    OcclusionSpec spec{n, speakers, seed};
    out.push_back({n, EvaluateModel(net, data, spec)});
  }
  return out;
}

std::string FormatRows(const EvalReport& r) {
  std::ostringstream os;
  char buf[64];
  for (const auto& u : r.rows) {
    os << "utt " << u.id;
    std::snprintf(buf, sizeof(buf), " sisdri %.4f sdri %.4f", u.mean_sisdri,
                  u.mean_sdri);
    os << buf << '\n';
  }
  return os.str();
}

Json SummaryJson(const EvalReport& r) {
  return {{"utterances", r.rows.size()},
          {"mean_sisdri", r.mean_sisdri},
          {"mean_sdri", r.mean_sdri}};
}

std::string FormatSweep(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "n_missing sisdri sdri\n";
  char buf[96];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%lld %.4f %.4f\n",
                  static_cast<long long>(row.n_missing), row.report.mean_sisdri,
                  row.report.mean_sdri);
    os << buf;
  }
  return os.str();
}

}  // namespace csfnet
