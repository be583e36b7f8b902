// pipeline/model.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pipeline/model.h"

#include <map>

#include "base/error.h"
#include "dsp/stft.h"

namespace csfnet {

SeparationNet::SeparationNet(const ModelConfig& cfg, Rng* rng)
    : cfg_(cfg),
      encoder_(cfg.channels, rng),
      fusion_(cfg.channels, cfg.semantic_dim, cfg.num_speakers, rng),
      separator_(cfg.Separator(), rng),
      decoder_(cfg.channels, cfg.num_speakers, rng) {}

std::vector<Var> SeparationNet::Forward(const Var& mixture,
                                        const std::vector<Var>& streams) const {
  CSF_CHECK_INPUT(mixture.value().ndim() == 1, "mixture must be 1-D, got ",
                  ShapeString(mixture.shape()));
  const int64_t len = mixture.dim(0);
  Var y = encoder_.Forward(ops::Stft(mixture, cfg_.stft));
  if (!cfg_.audio_only) y = fusion_.Forward(y, streams);
  std::vector<Var> out;
  for (const Var& spec : decoder_.Forward(separator_.Forward(y)))
    out.push_back(ops::Istft(spec, cfg_.stft, len));
  return out;
}

void SeparationNet::Collect(const std::string& prefix,
                            std::vector<ParamEntry>* out) {
  encoder_.Collect(prefix + "encoder.", out);
  if (!cfg_.audio_only) fusion_.Collect(prefix + "fusion.", out);
  separator_.Collect(prefix + "separator.", out);
  decoder_.Collect(prefix + "decoder.", out);
}

namespace {

ModelConfig Finalized(ModelConfig cfg) {
  cfg.Finalize();
  return cfg;
}

}  // namespace

CsfNet::CsfNet(const ModelConfig& cfg, uint64_t seed) : cfg_(Finalized(cfg)) {
  // Each component draws from its own stream so that adding one does not
  // shift the initialization of the others.
  Rng vsr_rng(MixSeed(seed, 1)), asr_rng(MixSeed(seed, 2)),
      av_rng(MixSeed(seed, 3)), sep_rng(MixSeed(seed, 4));
  vsr_ = VsrEncoder(cfg_.semantic_dim, &vsr_rng, cfg_.vsr_width);
  asr_ = AsrEncoder(cfg_.semantic_dim, cfg_.stft, &asr_rng);
  av_ = AvFusion(cfg_.semantic_dim, &av_rng);
  coarse_ = SeparationNet(cfg_, &sep_rng);
}

std::vector<Var> CsfNet::VideoStreams(const std::vector<MouthFrames>& mouths) {
  CSF_CHECK_INPUT(static_cast<int>(mouths.size()) == cfg_.num_speakers,
                  "model separates ", cfg_.num_speakers, " speakers, got ",
                  mouths.size(), " mouth streams");
  std::vector<Var> out;
  if (cfg_.audio_only) return out;
  for (const MouthFrames& m : mouths) out.push_back(vsr_.Encode(m).features);
  return out;
}

std::vector<Var> CsfNet::CoarseForward(const Var& mixture,
                                       const std::vector<Var>& video) const {
  return coarse_.Forward(mixture, video);
}

std::vector<Var> CsfNet::FineStreams(const std::vector<Var>& coarse,
                                     const std::vector<Var>& video) const {
  std::vector<Var> out;
  if (cfg_.audio_only) return out;
  CSF_CHECK_INPUT(coarse.size() == video.size(), "got ", coarse.size(),
                  " coarse estimates for ", video.size(), " video streams");
  for (size_t i = 0; i < coarse.size(); ++i)
    out.push_back(av_.Forward(video[i], asr_.Forward(coarse[i], video[i].dim(0))));
  return out;
}

std::vector<Var> CsfNet::FineForward(const Var& mixture,
                                     const std::vector<Var>& fine_streams) const {
  CSF_CHECK_INPUT(fine_ != nullptr, "model has no fine stage");
  return fine_->Forward(mixture, fine_streams);
}

std::vector<Waveform> CsfNet::Separate(const Waveform& mixture,
                                       const std::vector<MouthFrames>& mouths) {
  NoGradGuard no_grad;
  mixture.Validate();
  const bool vsr_training = vsr_.training();
  vsr_.set_training(false);
  std::vector<Var> video = VideoStreams(mouths);
  vsr_.set_training(vsr_training);
  Var mix(mixture.AsTensor());
  std::vector<Var> est = CoarseForward(mix, video);
  if (fine_) est = FineForward(mix, FineStreams(est, video));
  std::vector<Waveform> out;
  for (const Var& e : est)
    out.push_back(Waveform::FromTensor(e.value(), mixture.sample_rate));
  return out;
}

void CsfNet::InitFine() {
  Rng unused(0);
  fine_ = std::make_unique<SeparationNet>(cfg_, &unused);
  CopyParameters(&coarse_, fine_.get());
  av_.ZeroOutputLayer();
}

void CsfNet::Collect(const std::string& prefix, std::vector<ParamEntry>* out) {
  if (!cfg_.audio_only) {
    vsr_.Collect(prefix + "vsr.", out);
    asr_.Collect(prefix + "asr.", out);
    av_.Collect(prefix + "av.", out);
  }
  coarse_.Collect(prefix + "coarse.", out);
  if (fine_) fine_->Collect(prefix + "fine.", out);
}

void CopyParameters(Module* from, Module* to) {
  std::map<std::string, Var> src;
  for (auto& p : from->Parameters()) src.emplace(p.name, p.var);
  auto dst = to->Parameters();
  CSF_CHECK_INPUT(dst.size() == src.size(), "parameter count mismatch: ",
                  src.size(), " vs ", dst.size());
  for (auto& p : dst) {
    auto it = src.find(p.name);
    CSF_CHECK_INPUT(it != src.end(), "no source tensor for ", p.name);
    CSF_CHECK_INPUT(it->second.shape() == p.var.shape(), "shape mismatch for ",
                    p.name);
    p.var.mutable_value() = it->second.value();
  }
}

}  // namespace csfnet
