// pipeline/trainer.cc

// Copyright 2026 CSFNet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "pipeline/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include <glog/logging.h>

#include "base/error.h"
#include "base/gemm.h"
#include "objectives/losses.h"
#include "objectives/pit.h"
#include "pipeline/evaluate.h"
#include "pipeline/optim.h"

namespace csfnet {

namespace {

namespace fs = std::filesystem;

class JsonLog {
 public:
  explicit JsonLog(const std::string& path) {
    if (path.empty()) return;
    if (fs::path(path).has_parent_path())
      fs::create_directories(fs::path(path).parent_path());
    out_.open(path);
    CSF_CHECK_INPUT(out_.good(), "cannot write log ", path);
  }
  void Write(const Json& j) {
    if (out_.is_open()) out_ << j.dump() << '\n' << std::flush;
  }

 private:
  std::ofstream out_;
};

Json FiniteOrNull(double v) { return std::isfinite(v) ? Json(v) : Json(); }

class StageRunner {
 public:
  StageRunner(const Config& cfg, std::unique_ptr<CsfNet> net, MixDataset data,
              const TrainOptions& opts, std::string parent_id)
      : cfg_(cfg),
        net_(std::move(net)),
        data_(std::move(data)),
        opts_(opts),
        parent_id_(std::move(parent_id)),
        log_(opts.log_path) {}

  TrainResult Run();

 private:
  bool fine() const { return cfg_.train.stage == Stage::kFine; }
  std::vector<ParamEntry> SelectTrainable();
  void PrepareEpoch(int epoch);
  void RefreshFineCache(size_t i);
  std::vector<Var> Estimates(size_t i, bool training);
  // PIT total loss of utterance i; the Var carries gradients when enabled.
  Var UtteranceLoss(size_t i, bool training);
  double MeanLoss(const std::vector<size_t>& indices);
  double TrainSiSdri(const std::vector<size_t>& indices);
  void SaveTo(const std::string& path, int epoch, double best_val,
              const Adam& adam, const PlateauScheduler& sched,
              Checkpoint* out);

  Config cfg_;
  std::unique_ptr<CsfNet> net_;
  MixDataset data_;
  TrainOptions opts_;
  std::string parent_id_;
  JsonLog log_;
  std::vector<size_t> train_, val_;
  // Fine stage: frozen visual streams and coarse estimates, the latter
  // ordered by mouth stream via the coarse permutation.
  std::vector<std::vector<Var>> video_cache_, coarse_cache_;
};

std::vector<ParamEntry> StageRunner::SelectTrainable() {
  net_->SetRequiresGrad(false);
  std::vector<ParamEntry> out;
  for (auto& p : net_->Parameters()) {
    if (!p.trainable) continue;
    bool use;
    if (!fine()) {
      use = p.name.rfind("vsr.", 0) == 0 || p.name.rfind("coarse.", 0) == 0;
    } else {
      use = p.name.rfind("fine.", 0) == 0 || p.name.rfind("asr.", 0) == 0 ||
            p.name.rfind("av.", 0) == 0;
      if (!cfg_.train.finetune_audio_encoder &&
          p.name.rfind("fine.encoder.", 0) == 0)
        use = false;
    }
    if (!use) continue;
    p.var.set_requires_grad(true);
    out.push_back(p);
  }
  return out;
}

void StageRunner::PrepareEpoch(int epoch) {
  if (cfg_.train.dynamic_mixing) {
    Rng rng(MixSeed(cfg_.train.seed, 1000003ULL + epoch));
    if (cfg_.train.repair_speakers) {
      // Pool (source, mouth) pairs of the training split and redraw which
      // ones are mixed together.
      std::vector<std::pair<Waveform, MouthFrames>> pool;
      for (size_t i : train_)
        for (int k = 0; k < data_.utterances[i].num_speakers(); ++k)
          pool.emplace_back(data_.utterances[i].sources[k],
                            data_.utterances[i].mouths[k]);
      std::shuffle(pool.begin(), pool.end(), rng.engine());
      size_t next = 0;
      for (size_t i : train_) {
        Utterance& u = data_.utterances[i];
        for (int k = 0; k < u.num_speakers(); ++k, ++next) {
          u.sources[k] = pool[next].first;
          u.mouths[k] = pool[next].second;
        }
      }
    }
    for (size_t i : train_) Remix(&data_.utterances[i], data_.options, &rng);
  }
  if (fine() && (epoch == 1 || cfg_.train.dynamic_mixing))
    for (size_t i = 0; i < data_.utterances.size(); ++i) RefreshFineCache(i);
}

void StageRunner::RefreshFineCache(size_t i) {
  if (video_cache_.size() != data_.utterances.size()) {
    video_cache_.assign(data_.utterances.size(), {});
    coarse_cache_.assign(data_.utterances.size(), {});
  }
  NoGradGuard no_grad;
  const Utterance& u = data_.utterances[i];
  net_->vsr().set_training(false);
  video_cache_[i] = net_->VideoStreams(u.mouths);
  std::vector<Var> est = net_->CoarseForward(Var(u.mixture.AsTensor()), video_cache_[i]);
  const int s = u.num_speakers();
  std::vector<std::vector<double>> m(s, std::vector<double>(s));
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b)
      m[a][b] = TotalLossValue(est[a].value(), u.targets[b].AsTensor(),
                               cfg_.model.stft);
  const PitResult pit = PitFromMatrix(m);
  coarse_cache_[i].assign(s, Var());
  for (int a = 0; a < s; ++a) coarse_cache_[i][pit.permutation[a]] = est[a];
}

std::vector<Var> StageRunner::Estimates(size_t i, bool training) {
  const Utterance& u = data_.utterances[i];
  Var mix(u.mixture.AsTensor());
  if (!fine()) {
    net_->vsr().set_training(training);
    return net_->CoarseForward(mix, net_->VideoStreams(u.mouths));
  }
  return net_->FineForward(mix, net_->FineStreams(coarse_cache_[i], video_cache_[i]));
}

Var StageRunner::UtteranceLoss(size_t i, bool training) {
  const Utterance& u = data_.utterances[i];
  std::vector<Var> est = Estimates(i, training);
  const int s = u.num_speakers();
  std::vector<Tensor> refs;
  for (const auto& t : u.targets) refs.push_back(t.AsTensor());
  std::vector<std::vector<double>> m(s, std::vector<double>(s));
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b)
      m[a][b] = TotalLossValue(est[a].value(), refs[b], cfg_.model.stft);
  const PitResult pit = PitFromMatrix(m);
  std::vector<Var> terms;
  for (int a = 0; a < s; ++a)
    terms.push_back(TotalLoss(est[a], refs[pit.permutation[a]], cfg_.model.stft));
  return ops::Scale(ops::AddN(terms), 1.0 / s);
}

double StageRunner::MeanLoss(const std::vector<size_t>& indices) {
  NoGradGuard no_grad;
  double total = 0;
  for (size_t i : indices) total += UtteranceLoss(i, false).item();
  return total / indices.size();
}

double StageRunner::TrainSiSdri(const std::vector<size_t>& indices) {
  NoGradGuard no_grad;
  std::vector<UtteranceMetrics> rows;
  for (size_t i : indices) {
    const Utterance& u = data_.utterances[i];
    std::vector<Waveform> ests;
    for (const Var& e : Estimates(i, false))
      ests.push_back(Waveform::FromTensor(e.value(), u.mixture.sample_rate));
    rows.push_back(ScoreEstimates(ests, u.targets, u.mixture));
  }
  return Summarize(std::move(rows)).mean_sisdri;
}

void StageRunner::SaveTo(const std::string& path, int epoch, double best_val,
                         const Adam& adam, const PlateauScheduler& sched,
                         Checkpoint* out) {
  Checkpoint c = SnapshotModel(net_.get(), cfg_.train.stage);
  c.epoch = epoch;
  c.best_val_loss = best_val;
  c.parent_id = parent_id_;
  c.train = cfg_.train;
  c.optimizer = {{"lr", adam.lr()},
                 {"steps", adam.steps()},
                 {"scheduler_best", FiniteOrNull(sched.best())},
                 {"scheduler_bad_epochs", sched.bad_epochs()}};
  c.optimizer_state = adam.State();
  SaveCheckpoint(path, &c);
  if (out) *out = std::move(c);
}

TrainResult StageRunner::Run() {
  const TrainConfig& tc = cfg_.train;
  PrecisionScope precision(tc.float32_compute ? Precision::kFloat32
                                              : Precision::kFloat64);
  for (const auto& u : data_.utterances)
    CSF_CHECK_INPUT(u.num_speakers() == cfg_.model.num_speakers, u.id, " has ",
                    u.num_speakers(), " speakers, model expects ",
                    cfg_.model.num_speakers);
  TrainResult result;
  SplitTrainVal(data_.utterances.size(), tc.val_fraction, tc.seed, &train_, &val_);
  result.train_indices = train_;
  result.val_indices = val_;
  // Without a held-out split the scheduler watches the training loss.
  const bool has_val = !val_.empty();

  std::vector<ParamEntry> params = SelectTrainable();
  Adam adam(params, tc.learning_rate);
  PlateauScheduler sched(tc.lr_factor, tc.lr_patience);
  if (!opts_.out_dir.empty()) fs::create_directories(opts_.out_dir);
  const std::string stage = StageName(tc.stage);
  auto path_for = [&](const char* tag) {
    return opts_.out_dir.empty()
               ? std::string()
               : (fs::path(opts_.out_dir) / (stage + "-" + tag + ".ckpt")).string();
  };
  result.best_path = path_for("best");
  result.last_path = path_for("last");
  log_.Write({{"type", "start"},
              {"stage", stage},
              {"config", ToJson(cfg_)},
              {"train_indices", train_},
              {"val_indices", val_},
              {"parent_id", parent_id_}});

  const int epochs = opts_.epochs > 0 ? opts_.epochs : tc.max_epochs;
  double best_val = std::numeric_limits<double>::infinity();
  int64_t step = 0;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    PrepareEpoch(epoch);
    std::vector<size_t> order = train_;
    Rng shuffle_rng(MixSeed(tc.seed, 2000003ULL + epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    double epoch_loss = 0;
    for (size_t start = 0; start < order.size(); start += tc.batch_size) {
      const size_t end = std::min(order.size(), start + tc.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      adam.ZeroGrad();
      double batch_loss = 0;
      for (size_t b = start; b < end; ++b) {
        Var loss = UtteranceLoss(order[b], true);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          log_.Write({{"type", "diverged"},
                      {"epoch", epoch},
                      {"step", step},
                      {"utterance", data_.utterances[order[b]].id},
                      {"loss", FiniteOrNull(value)}});
          throw TrainingDiverged(internal::Concat(
              stage, " training diverged at epoch ", epoch, " step ", step,
              " on ", data_.utterances[order[b]].id));
        }
        Backward(ops::Scale(loss, weight));
        batch_loss += value * weight;
      }
      StepRecord rec;
      rec.epoch = epoch;
      rec.step = step++;
      rec.loss = batch_loss;
      rec.grad_norm = ClipGradNorm(params, tc.grad_clip);
      rec.clipped_norm = GlobalGradNorm(params);
      rec.lr = adam.lr();
      adam.Step();
      result.steps.push_back(rec);
      log_.Write({{"type", "step"},
                  {"epoch", rec.epoch},
                  {"step", rec.step},
                  {"loss", rec.loss},
                  {"grad_norm", rec.grad_norm},
                  {"clipped_norm", rec.clipped_norm},
                  {"lr", rec.lr}});
      epoch_loss += batch_loss * (end - start);
    }
    adam.ZeroGrad();

    EpochRecord er;
    er.epoch = epoch;
    er.train_loss = epoch_loss / order.size();
    er.val_loss = has_val ? MeanLoss(val_) : er.train_loss;
    if (tc.track_train_sisdri) er.train_sisdri = TrainSiSdri(train_);
    if (er.val_loss < best_val) {
      best_val = er.val_loss;
      if (!result.best_path.empty())
        SaveTo(result.best_path, epoch, best_val, adam, sched, nullptr);
    }
    adam.set_lr(sched.Step(er.val_loss, adam.lr()));
    er.lr = adam.lr();
    er.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                     .count();
    result.epochs.push_back(er);
    log_.Write({{"type", "epoch"},
                {"epoch", er.epoch},
                {"train_loss", er.train_loss},
                {"val_loss", er.val_loss},
                {"lr", er.lr},
                {"train_sisdri", FiniteOrNull(er.train_sisdri)},
                {"seconds", er.seconds}});
    LOG(INFO) << stage << " epoch " << epoch << " train " << er.train_loss
              << " val " << er.val_loss << " lr " << er.lr << " ("
              << er.seconds << " s)";
    if (opts_.on_epoch) opts_.on_epoch(er);
  }
  result.final_train_sisdri = TrainSiSdri(train_);
  log_.Write({{"type", "done"}, {"train_sisdri", result.final_train_sisdri}});
  if (result.last_path.empty()) {
    Checkpoint c = SnapshotModel(net_.get(), tc.stage);
    c.epoch = epochs;
    c.best_val_loss = best_val;
    c.parent_id = parent_id_;
    c.train = tc;
    result.last = std::move(c);
  } else {
    SaveTo(result.last_path, epochs, best_val, adam, sched, &result.last);
  }
  return result;
}

}  // namespace

TrainResult RunCoarseStage(const Config& cfg, MixDataset data,
                           const TrainOptions& opts) {
  CSF_CHECK_CONFIG(cfg.train.stage == Stage::kCoarse, "coarse run with a ",
                   StageName(cfg.train.stage), " config");
  auto net = std::make_unique<CsfNet>(cfg.model, cfg.train.seed);
  StageRunner runner(cfg, std::move(net), std::move(data), opts, "");
  return runner.Run();
}

TrainResult RunFineStage(const Config& cfg, const Checkpoint& coarse,
                         MixDataset data, const TrainOptions& opts) {
  CSF_CHECK_CONFIG(cfg.train.stage == Stage::kFine, "fine run with a ",
                   StageName(cfg.train.stage), " config");
  CSF_CHECK_CONFIG(coarse.stage == Stage::kCoarse,
                   "fine stage must start from a coarse checkpoint");
  const std::string fp = ModelFingerprint(cfg.model);
  CSF_CHECK_CONFIG(fp == coarse.fingerprint, "model config fingerprint ", fp,
                   " does not match coarse checkpoint ", coarse.fingerprint,
                   "; refusing to start");
  auto net = RestoreModel(coarse);
  net->InitFine();
  StageRunner runner(cfg, std::move(net), std::move(data), opts, coarse.id);
  return runner.Run();
}

}  // namespace csfnet
