// pipeline/config.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pipeline/config.h"

#include <cstdio>
#include <fstream>
#include <set>

#include "base/error.h"

namespace csfnet {

std::string StageName(Stage s) { return s == Stage::kCoarse ? "coarse" : "fine"; }

Stage ParseStage(const std::string& s) {
  if (s == "coarse") return Stage::kCoarse;
  if (s == "fine") return Stage::kFine;
  throw ConfigError("unknown stage '" + s + "'");
}

void ModelConfig::Finalize() {
  stft.Validate();
  CSF_CHECK_CONFIG(semantic_dim > 0, "semantic_dim must be positive");
  CSF_CHECK_CONFIG(vsr_width > 0, "vsr_width must be positive");
  CSF_CHECK_CONFIG(num_speakers >= 2 && num_speakers <= 4,
                   "num_speakers must be 2..4, got ", num_speakers);
  mst.channels = channels;
  mst.bins = stft.FftBins();
  mst.Validate();
}

MstConfig ModelConfig::Separator() const {
  MstConfig m = mst;
  m.channels = channels;
  m.bins = stft.FftBins();
  return m;
}

TrainConfig TrainConfig::Defaults(Stage s) {
  TrainConfig t;
  t.stage = s;
  if (s == Stage::kFine) {
    t.batch_size = 8;
    t.learning_rate = 1e-4;
  }
  return t;
}

void TrainConfig::Validate() const {
  CSF_CHECK_CONFIG(batch_size > 0, "batch_size must be positive");
  CSF_CHECK_CONFIG(learning_rate > 0, "learning_rate must be positive");
  CSF_CHECK_CONFIG(lr_patience > 0, "lr_patience must be positive");
  CSF_CHECK_CONFIG(lr_factor > 0 && lr_factor < 1, "lr_factor must be in (0, 1)");
  CSF_CHECK_CONFIG(max_epochs > 0, "max_epochs must be positive");
  CSF_CHECK_CONFIG(grad_clip > 0, "grad_clip must be positive");
  CSF_CHECK_CONFIG(val_fraction >= 0 && val_fraction < 1,
                   "val_fraction must be in [0, 1)");
}

Json ToJson(const StftConfig& c) {
  return {{"window_ms", c.window_ms}, {"hop_ms", c.hop_ms},
          {"sample_rate", c.sample_rate}};
}

Json ToJson(const ModelConfig& c) {
  Json branches = Json::array();
  for (const auto& b : c.mst.branches) branches.push_back({b.window, b.stride});
  return {{"stft", ToJson(c.stft)},
          {"channels", c.channels},
          {"semantic_dim", c.semantic_dim},
          {"vsr_width", c.vsr_width},
          {"num_speakers", c.num_speakers},
          {"audio_only", c.audio_only},
          {"mst",
           {{"hidden", c.mst.hidden},
            {"blocks", c.mst.blocks},
            {"heads", c.mst.heads},
            {"attn_qk_dim", c.mst.attn_qk_dim},
            {"branches", branches}}}};
}

Json ToJson(const TrainConfig& c) {
  return {{"stage", StageName(c.stage)},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"lr_patience", c.lr_patience},
          {"lr_factor", c.lr_factor},
          {"max_epochs", c.max_epochs},
          {"grad_clip", c.grad_clip},
          {"dynamic_mixing", c.dynamic_mixing},
          {"repair_speakers", c.repair_speakers},
          {"val_fraction", c.val_fraction},
          {"seed", c.seed},
          {"finetune_audio_encoder", c.finetune_audio_encoder},
          {"float32_compute", c.float32_compute},
          {"track_train_sisdri", c.track_train_sisdri}};
}

Json ToJson(const Config& c) {
  return {{"model", ToJson(c.model)}, {"train", ToJson(c.train)}};
}

namespace {

void CheckKeys(const Json& j, const std::set<std::string>& allowed,
               const char* where) {
  CSF_CHECK_CONFIG(j.is_object(), where, " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    CSF_CHECK_CONFIG(allowed.count(it.key()), "unknown key '", it.key(),
                     "' in ", where);
}

template <typename T>
void Read(const Json& j, const char* key, T* out) {
  if (!j.contains(key)) return;
  try {
    *out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void FromJson(const Json& j, StftConfig* c) {
  CheckKeys(j, {"window_ms", "hop_ms", "sample_rate"}, "stft");
  Read(j, "window_ms", &c->window_ms);
  Read(j, "hop_ms", &c->hop_ms);
  Read(j, "sample_rate", &c->sample_rate);
}

void FromJson(const Json& j, ModelConfig* c) {
  CheckKeys(j, {"stft", "channels", "semantic_dim", "vsr_width", "num_speakers",
                "audio_only", "mst"},
            "model");
  if (j.contains("stft")) FromJson(j["stft"], &c->stft);
  Read(j, "channels", &c->channels);
  Read(j, "semantic_dim", &c->semantic_dim);
  Read(j, "vsr_width", &c->vsr_width);
  Read(j, "num_speakers", &c->num_speakers);
  Read(j, "audio_only", &c->audio_only);
  if (j.contains("mst")) {
    const Json& m = j["mst"];
    CheckKeys(m, {"hidden", "blocks", "heads", "attn_qk_dim", "branches"}, "mst");
    Read(m, "hidden", &c->mst.hidden);
    Read(m, "blocks", &c->mst.blocks);
    Read(m, "heads", &c->mst.heads);
    Read(m, "attn_qk_dim", &c->mst.attn_qk_dim);
    if (m.contains("branches")) {
      std::vector<std::vector<int64_t>> raw;
      Read(m, "branches", &raw);
      c->mst.branches.clear();
      for (const auto& b : raw) {
        CSF_CHECK_CONFIG(b.size() == 2, "each branch is [window, stride]");
        c->mst.branches.push_back({b[0], b[1]});
      }
    }
  }
}

void FromJson(const Json& j, TrainConfig* c) {
  CheckKeys(j, {"stage", "batch_size", "learning_rate", "lr_patience",
                "lr_factor", "max_epochs", "grad_clip", "dynamic_mixing",
                "repair_speakers", "val_fraction", "seed",
                "finetune_audio_encoder", "float32_compute",
                "track_train_sisdri"},
            "train");
  if (j.contains("stage")) c->stage = ParseStage(j["stage"].get<std::string>());
  Read(j, "batch_size", &c->batch_size);
  Read(j, "learning_rate", &c->learning_rate);
  Read(j, "lr_patience", &c->lr_patience);
  Read(j, "lr_factor", &c->lr_factor);
  Read(j, "max_epochs", &c->max_epochs);
  Read(j, "grad_clip", &c->grad_clip);
  Read(j, "dynamic_mixing", &c->dynamic_mixing);
  Read(j, "repair_speakers", &c->repair_speakers);
  Read(j, "val_fraction", &c->val_fraction);
  Read(j, "seed", &c->seed);
  Read(j, "finetune_audio_encoder", &c->finetune_audio_encoder);
  Read(j, "float32_compute", &c->float32_compute);
  Read(j, "track_train_sisdri", &c->track_train_sisdri);
}

Config ConfigFromJson(const Json& j, Stage stage) {
  Config c;
  c.train = TrainConfig::Defaults(stage);
  if (j.is_null()) {
    c.model.Finalize();
    return c;
  }
  CheckKeys(j, {"model", "train", "coarse", "fine"}, "config");
  if (j.contains("model")) FromJson(j["model"], &c.model);
  if (j.contains("train")) FromJson(j["train"], &c.train);
  // Stage-specific sections override the shared train section.
  const char* key = stage == Stage::kCoarse ? "coarse" : "fine";
  if (j.contains(key)) FromJson(j[key], &c.train);
  c.train.stage = stage;
  c.model.Finalize();
  c.train.Validate();
  return c;
}

void ApplyOverride(Json* j, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  CSF_CHECK_CONFIG(eq != std::string::npos && eq > 0,
                   "override must look like key.path=value, got '",
                   assignment, "'");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = j;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    CSF_CHECK_CONFIG(!key.empty(), "empty key in override '", path, "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

Config LoadConfig(const std::string& path, Stage stage,
                  const std::vector<std::string>& overrides) {
  Json j = Json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    CSF_CHECK_CONFIG(in.good(), "cannot open config file ", path);
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  for (const auto& o : overrides) ApplyOverride(&j, o);
  return ConfigFromJson(j, stage);
}

uint64_t Fnv1a(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HexId(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string ModelFingerprint(const ModelConfig& c) {
  return HexId(Fnv1a(ToJson(c).dump()));
}

}  // namespace csfnet
