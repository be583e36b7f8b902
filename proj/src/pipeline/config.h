// pipeline/config.h

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CSFNET_PIPELINE_CONFIG_H_
#define CSFNET_PIPELINE_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsp/stft.h"
#include "separator/mst.h"

namespace csfnet {

using Json = nlohmann::json;

enum class Stage { kCoarse, kFine };
std::string StageName(Stage s);
Stage ParseStage(const std::string& s);

struct ModelConfig {
  StftConfig stft;
  int64_t channels = 192;
  int64_t semantic_dim = 64;
  // First residual-block width of the lip encoder (then 2x and 4x).
  int64_t vsr_width = 16;
  int num_speakers = 2;
  // Zero semantic streams and bypass fusion (the audio-only ablation).
  bool audio_only = false;
  MstConfig mst;  // channels and bins are filled from the fields above

  // Copies channels/bins into mst and validates everything.
  void Finalize();
  MstConfig Separator() const;
};

struct TrainConfig {
  Stage stage = Stage::kCoarse;
  int batch_size = 16;
  double learning_rate = 1e-3;
  int lr_patience = 3;
  double lr_factor = 0.5;
  int max_epochs = 200;
  double grad_clip = 5.0;
  bool dynamic_mixing = false;
  // With dynamic mixing, also redraw which sources are mixed together.
  bool repair_speakers = false;
  double val_fraction = 0.1;
  uint64_t seed = 1;
  // Fine stage: also update the audio encoder.
  bool finetune_audio_encoder = true;
  // Run GEMMs and convolutions in float32 (gradient checks stay float64).
  bool float32_compute = true;
  // Evaluate training-set SI-SDRi after every epoch (costs a forward pass).
  bool track_train_sisdri = false;

  static TrainConfig Defaults(Stage s);
  void Validate() const;
};

struct Config {
  ModelConfig model;
  TrainConfig train;
};

Json ToJson(const StftConfig& c);
Json ToJson(const ModelConfig& c);
Json ToJson(const TrainConfig& c);
Json ToJson(const Config& c);

// Missing keys keep their defaults. Throws ConfigError on unknown keys or
// wrong types.
void FromJson(const Json& j, StftConfig* c);
void FromJson(const Json& j, ModelConfig* c);
void FromJson(const Json& j, TrainConfig* c);
Config ConfigFromJson(const Json& j, Stage stage);

// "a.b.c=value"; value is parsed as JSON, falling back to a plain string.
void ApplyOverride(Json* j, const std::string& assignment);

// Reads a JSON config file (empty path means defaults), applies overrides.
Config LoadConfig(const std::string& path, Stage stage,
                  const std::vector<std::string>& overrides);

// Stable hash of everything that shapes the model's parameters.
std::string ModelFingerprint(const ModelConfig& c);

uint64_t Fnv1a(const std::string& bytes);
std::string HexId(uint64_t v);

}  // namespace csfnet

#endif  // CSFNET_PIPELINE_CONFIG_H_
