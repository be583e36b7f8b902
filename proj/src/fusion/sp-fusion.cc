// fusion/sp-fusion.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "fusion/sp-fusion.h"

#include <cmath>

#include "base/error.h"
#include "encoder/audio-encoder.h"

namespace csfnet {

ChannelMlp::ChannelMlp(int64_t in, int64_t hidden, int64_t out, Rng* rng)
    : fc1_(in, hidden, rng), fc2_(hidden, out, rng) {}

Var ChannelMlp::Forward(const Var& x) const {
  return fc2_.Forward(act_.Forward(fc1_.Forward(x)));
}

void ChannelMlp::Collect(const std::string& prefix,
                         std::vector<ParamEntry>* out) {
  fc1_.Collect(prefix + "fc1.", out);
  act_.Collect(prefix + "act.", out);
  fc2_.Collect(prefix + "fc2.", out);
}

Tensor InterpolationMatrix(int64_t t1, int64_t t) {
  Tensor m({t, t1});
  for (int64_t i = 0; i < t; ++i) {
    const double pos =
        t == 1 ? 0.0 : static_cast<double>(i) * (t1 - 1) / (t - 1);
    int64_t lo = static_cast<int64_t>(std::floor(pos));
    if (lo >= t1 - 1) lo = t1 - 1;
    const double frac = pos - lo;
    m.at({i, lo}) += 1.0 - frac;
    if (frac > 0.0) m.at({i, lo + 1}) += frac;
  }
  return m;
}

SpFusion::SpFusion(int64_t channels, int64_t semantic_dim, int num_speakers,
                   Rng* rng)
    : channels_(channels), num_speakers_(num_speakers) {
  CSF_CHECK_CONFIG(num_speakers >= 1 && num_speakers <= 4,
                   "fusion supports 1 to 4 speakers, got ", num_speakers);
  CSF_CHECK_CONFIG(channels > 0 && semantic_dim > 0, "bad fusion widths");
  proj_ = Linear(semantic_dim, channels, rng);
  pair_ = ChannelMlp(2 * channels, channels, channels, rng);
  joint_ = ChannelMlp(2 * channels, channels, channels, rng);
  reduce_ = PointwiseConv((num_speakers + 2) * channels, channels, rng);
  norm_ = GroupNormLayer(NormGroups(channels), channels);
}

Var SpFusion::AlignSemantics(const Var& stream, int64_t frames,
                             int64_t bins) const {
  CSF_CHECK_INPUT(stream.value().ndim() == 2 && stream.dim(1) == proj_.weight.dim(1),
                  "semantic stream must be [T1, ", proj_.weight.dim(1),
                  "], got ", ShapeString(stream.shape()));
  const int64_t t1 = stream.dim(0);
  CSF_CHECK_INPUT(t1 >= 2, "semantic stream needs at least 2 frames, got ", t1);
  Var p = proj_.Forward(stream);                                 // [T1, C]
  Var up = ops::MatMul(Var(InterpolationMatrix(t1, frames)), p);  // [T, C]
  Var ct = ops::Permute(up, {1, 0});                             // [C, T]
  return ops::Expand(ct, 2, bins);
}

Var SpFusion::PreReduction(const Var& y, const std::vector<Var>& aligned) const {
  CSF_CHECK_INPUT(!aligned.empty(), "fusion needs at least one speaker");
  CSF_CHECK_INPUT(static_cast<int>(aligned.size()) == num_speakers_,
                  "fusion built for ", num_speakers_, " speakers, got ",
                  aligned.size());
  CSF_CHECK_INPUT(y.value().ndim() == 3 && y.dim(0) == channels_,
                  "fusion expects [", channels_, ", T, F], got ",
                  ShapeString(y.shape()));
  for (const Var& l : aligned)
    CSF_CHECK_INPUT(l.shape() == y.shape(), "aligned stream shape ",
                    ShapeString(l.shape()), " differs from feature map ",
                    ShapeString(y.shape()));
  std::vector<Var> parts{y};
  for (const Var& l : aligned)
    parts.push_back(pair_.Forward(ops::Concat({y, l}, 0)));
  Var total = aligned.size() == 1 ? aligned[0] : ops::AddN(aligned);
  parts.push_back(joint_.Forward(ops::Concat({y, total}, 0)));
  return ops::Concat(parts, 0);
}

Var SpFusion::Fuse(const Var& y, const std::vector<Var>& aligned) const {
  return act_.Forward(norm_.Forward(reduce_.Forward(PreReduction(y, aligned))));
}

Var SpFusion::Forward(const Var& y, const std::vector<Var>& streams) const {
  std::vector<Var> aligned;
  for (const Var& s : streams)
    aligned.push_back(AlignSemantics(s, y.dim(1), y.dim(2)));
  return Fuse(y, aligned);
}

void SpFusion::Collect(const std::string& prefix, std::vector<ParamEntry>* out) {
  proj_.Collect(prefix + "proj.", out);
  pair_.Collect(prefix + "pair.", out);
  joint_.Collect(prefix + "joint.", out);
  reduce_.Collect(prefix + "reduce.", out);
  norm_.Collect(prefix + "norm.", out);
  act_.Collect(prefix + "act.", out);
}

}  // namespace csfnet
