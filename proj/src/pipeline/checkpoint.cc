// pipeline/checkpoint.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pipeline/checkpoint.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "base/error.h"

namespace csfnet {

namespace {

constexpr char kMagic[8] = {'C', 'S', 'F', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

Json TableFor(const std::map<std::string, Tensor>& tensors, int64_t* offset) {
  Json table = Json::array();
  for (const auto& [name, t] : tensors) {
    table.push_back({{"name", name}, {"shape", t.shape()}, {"offset", *offset}});
    *offset += t.numel();
  }
  return table;
}

// JSON has no infinity; encode non-finite as null.
Json FiniteOrNull(double v) { return std::isfinite(v) ? Json(v) : Json(); }

void ReadTable(const Json& table, const std::vector<double>& blob,
               std::map<std::string, Tensor>* out) {
  for (const Json& e : table) {
    Shape shape = e.at("shape").get<Shape>();
    const int64_t off = e.at("offset").get<int64_t>();
    const int64_t n = NumElements(shape);
    CSF_CHECK_INPUT(off >= 0 && off + n <= static_cast<int64_t>(blob.size()),
                    "checkpoint tensor ", e.at("name").get<std::string>(),
                    " out of range");
    (*out)[e.at("name").get<std::string>()] =
        Tensor(shape, std::vector<double>(blob.begin() + off, blob.begin() + off + n));
  }
}

}  // namespace

Checkpoint SnapshotModel(CsfNet* net, Stage stage) {
  Checkpoint c;
  c.stage = stage;
  c.model = net->config();
  c.fingerprint = ModelFingerprint(c.model);
  for (auto& p : net->Parameters()) c.tensors[p.name] = p.var.value();
  return c;
}

std::unique_ptr<CsfNet> RestoreModel(const Checkpoint& ckpt) {
  auto net = std::make_unique<CsfNet>(ckpt.model, 0);
  if (ckpt.stage == Stage::kFine) net->InitFine();
  auto params = net->Parameters();
  CSF_CHECK_INPUT(params.size() == ckpt.tensors.size(), "checkpoint has ",
                  ckpt.tensors.size(), " tensors, model expects ", params.size());
  for (auto& p : params) {
    auto it = ckpt.tensors.find(p.name);
    CSF_CHECK_INPUT(it != ckpt.tensors.end(), "checkpoint lacks tensor ", p.name);
    CSF_CHECK_INPUT(it->second.shape() == p.var.shape(), "shape mismatch for ",
                    p.name, ": ", ShapeString(it->second.shape()), " vs ",
                    ShapeString(p.var.shape()));
    p.var.mutable_value() = it->second;
  }
  return net;
}

std::string SaveCheckpoint(const std::string& path, Checkpoint* ckpt) {
  int64_t offset = 0;
  Json meta = {{"stage", StageName(ckpt->stage)},
               {"epoch", ckpt->epoch},
               {"best_val_loss", FiniteOrNull(ckpt->best_val_loss)},
               {"fingerprint", ckpt->fingerprint},
               {"parent_id", ckpt->parent_id},
               {"model", ToJson(ckpt->model)},
               {"train", ToJson(ckpt->train)},
               {"optimizer", ckpt->optimizer}};
  meta["tensors"] = TableFor(ckpt->tensors, &offset);
  meta["optimizer_tensors"] = TableFor(ckpt->optimizer_state, &offset);
  const std::string text = meta.dump();

  std::ostringstream buf;
  buf.write(kMagic, sizeof(kMagic));
  const uint32_t version = kVersion;
  const uint64_t len = text.size();
  buf.write(reinterpret_cast<const char*>(&version), sizeof(version));
  buf.write(reinterpret_cast<const char*>(&len), sizeof(len));
  buf.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* group : {&ckpt->tensors, &ckpt->optimizer_state})
    for (const auto& [name, t] : *group)
      buf.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
  const std::string bytes = buf.str();
  std::ofstream out(path, std::ios::binary);
  CSF_CHECK_INPUT(out.good(), "cannot write checkpoint ", path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  CSF_CHECK_INPUT(out.good(), "failed writing checkpoint ", path);
  ckpt->id = HexId(Fnv1a(bytes));
  return ckpt->id;
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  CSF_CHECK_INPUT(in.good(), "cannot open checkpoint ", path);
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  const size_t header = sizeof(kMagic) + sizeof(uint32_t) + sizeof(uint64_t);
  CSF_CHECK_INPUT(bytes.size() >= header &&
                      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0,
                  path, " is not a CSFNet checkpoint");
  uint32_t version;
  uint64_t len;
  std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
  std::memcpy(&len, bytes.data() + sizeof(kMagic) + sizeof(version), sizeof(len));
  CSF_CHECK_INPUT(version == kVersion, "unsupported checkpoint version ", version);
  CSF_CHECK_INPUT(header + len <= bytes.size(), "truncated checkpoint ", path);
  const Json meta = Json::parse(bytes.substr(header, len));
  const size_t blob_bytes = bytes.size() - header - len;
  CSF_CHECK_INPUT(blob_bytes % sizeof(double) == 0, "corrupt checkpoint ", path);
  std::vector<double> blob(blob_bytes / sizeof(double));
  std::memcpy(blob.data(), bytes.data() + header + len, blob_bytes);

  Checkpoint c;
  c.stage = ParseStage(meta.at("stage").get<std::string>());
  c.epoch = meta.at("epoch").get<int>();
  if (!meta.at("best_val_loss").is_null())
    c.best_val_loss = meta.at("best_val_loss").get<double>();
  c.fingerprint = meta.at("fingerprint").get<std::string>();
  c.parent_id = meta.at("parent_id").get<std::string>();
  FromJson(meta.at("model"), &c.model);
  c.model.Finalize();
  c.train = TrainConfig::Defaults(c.stage);
  FromJson(meta.at("train"), &c.train);
  c.optimizer = meta.at("optimizer");
  ReadTable(meta.at("tensors"), blob, &c.tensors);
  ReadTable(meta.at("optimizer_tensors"), blob, &c.optimizer_state);
  CSF_CHECK_INPUT(c.fingerprint == ModelFingerprint(c.model),
                  "checkpoint fingerprint does not match its model config");
  c.id = HexId(Fnv1a(bytes));
  return c;
}

}  // namespace csfnet
