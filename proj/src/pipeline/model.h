// pipeline/model.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_PIPELINE_MODEL_H_
#define CSFNET_PIPELINE_MODEL_H_

#include <memory>
#include <string>
#include <vector>

#include "base/layers.h"
#include "encoder/audio-encoder.h"
#include "fusion/sp-fusion.h"
#include "pipeline/config.h"
#include "semantics/mouth-frames.h"
#include "semantics/semantic-encoders.h"
#include "separator/mst.h"

namespace csfnet {

// Mixture waveform plus semantic streams in, one waveform per speaker out.
class SeparationNet : public Module {
 public:
  SeparationNet() = default;
  SeparationNet(const ModelConfig& cfg, Rng* rng);

  // mixture [L]; streams are [T1, Cv] each (ignored in audio-only mode).
  std::vector<Var> Forward(const Var& mixture,
                           const std::vector<Var>& streams) const;
  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

  AudioEncoder& encoder() { return encoder_; }

 private:
  ModelConfig cfg_;
  AudioEncoder encoder_;
  SpFusion fusion_;
  MstSeparator separator_;
  Decoder decoder_;
};

class CsfNet : public Module {
 public:
  CsfNet(const ModelConfig& cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  int num_speakers() const { return cfg_.num_speakers; }

  // One [T1, Cv] stream per speaker from the visual encoder.
  std::vector<Var> VideoStreams(const std::vector<MouthFrames>& mouths);
  std::vector<Var> CoarseForward(const Var& mixture,
                                 const std::vector<Var>& video) const;
  // av_fuse(video_i, asr(coarse_i)); coarse[i] belongs to mouth stream i.
  std::vector<Var> FineStreams(const std::vector<Var>& coarse,
                               const std::vector<Var>& video) const;
  std::vector<Var> FineForward(const Var& mixture,
                               const std::vector<Var>& fine_streams) const;

  // Full inference path: coarse pass, then the recursive pass when a fine
  // network is present. Positional coarse-to-stream assignment.
  std::vector<Waveform> Separate(const Waveform& mixture,
                                 const std::vector<MouthFrames>& mouths);

  // Creates the fine network as a copy of the coarse one and zeroes the
  // audio-visual fusion increment, so fine == coarse at this point.
  void InitFine();
  bool has_fine() const { return fine_ != nullptr; }

  VsrEncoder& vsr() { return vsr_; }
  AsrEncoder& asr() { return asr_; }
  AvFusion& av() { return av_; }
  SeparationNet& coarse() { return coarse_; }
  SeparationNet& fine() { return *fine_; }

  void Collect(const std::string& prefix, std::vector<ParamEntry>* out) override;

 private:
  ModelConfig cfg_;
  VsrEncoder vsr_;
  AsrEncoder asr_;
  AvFusion av_;
  SeparationNet coarse_;
  std::unique_ptr<SeparationNet> fine_;
};

// Copies tensor values between modules with identical parameter names.
void CopyParameters(Module* from, Module* to);

}  // namespace csfnet

#endif  // CSFNET_PIPELINE_MODEL_H_
