/* Copyright 2026 The ettk authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "ettk/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ettk/threads.hpp"

namespace ettk {
namespace {

// Independent deterministic draw streams.
constexpr std::uint64_t kInitStream = 0x494e4954;
constexpr std::uint64_t kShuffleStream = 0x53484746;
constexpr std::uint64_t kAugmentStream = 0x4155474d;
constexpr std::uint64_t kDropoutStream = 0x44524f50;

/// Restores checked mode when the training hot path exits.
class CheckedModeGuard {
 public:
  CheckedModeGuard() : saved_(checked_mode()) { set_checked_mode(false); }
  ~CheckedModeGuard() { set_checked_mode(saved_); }

 private:
  bool saved_;
};

/// Per-shard gradient buffers, reduced into the parameters' grad slots in
/// shard order. Deterministic for a fixed thread count; exact for one.
class GradAccumulator {
 public:
  GradAccumulator(std::vector<Tensor<float>*> params, int shards)
      : params_(std::move(params)), buffers_(static_cast<std::size_t>(shards)) {
    for (auto& shard : buffers_) {
      shard.reserve(params_.size());
      for (Tensor<float>* p : params_) {
        shard.emplace_back(Eigen::ArrayXf::Zero(p->size()));
      }
    }
  }

  void zero() {
    for (auto& shard : buffers_) {
      for (auto& buf : shard) buf.setZero();
    }
  }

  void add(int shard, std::size_t param, const Eigen::ArrayXf& grad) {
    buffers_[static_cast<std::size_t>(shard)][param] += grad;
  }

  void reduce_into_params(float scale) {
    for (std::size_t p = 0; p < params_.size(); ++p) {
      auto& g = params_[p]->grad();
      g.setZero();
      for (const auto& shard : buffers_) g += shard[p];
      g *= scale;
    }
  }

 private:
  std::vector<Tensor<float>*> params_;
  std::vector<std::vector<Eigen::ArrayXf>> buffers_;
};

void push_cell_vars(std::vector<Var>& out, const GruCellVars& c) {
  out.insert(out.end(), {c.w_update, c.w_reset, c.w_cand, c.u_update, c.u_reset, c.u_cand,
                         c.b_update, c.b_reset, c.b_cand});
}

// Flattened var lists; the order must match the nets' params() registries.
std::vector<Var> flatten(const SerBaselineVars& v) {
  std::vector<Var> out;
  push_cell_vars(out, v.layer1.fwd);
  push_cell_vars(out, v.layer1.bwd);
  push_cell_vars(out, v.layer2.fwd);
  push_cell_vars(out, v.layer2.bwd);
  out.push_back(v.head.weight);
  out.push_back(v.head.bias);
  return out;
}

std::vector<Var> flatten(const TransferVars& v, TransferVariant variant) {
  std::vector<Var> out;
  if (variant == TransferVariant::kFtRnn) {
    push_cell_vars(out, v.rnn.fwd);
    push_cell_vars(out, v.rnn.bwd);
  }
  if (variant == TransferVariant::kProgressive) {
    push_cell_vars(out, v.emo1.fwd);
    push_cell_vars(out, v.emo1.bwd);
    push_cell_vars(out, v.emo2.fwd);
    push_cell_vars(out, v.emo2.bwd);
  }
  out.push_back(v.head.weight);
  out.push_back(v.head.bias);
  return out;
}

std::vector<Var> flatten_asr(const AsrNetVars& v) {
  std::vector<Var> out;
  for (const auto& [kernels, bias] : v.conv) {
    out.push_back(kernels);
    out.push_back(bias);
  }
  for (const auto& layer : v.layers) {
    push_cell_vars(out, layer.fwd);
    push_cell_vars(out, layer.bwd);
  }
  out.push_back(v.out_weight);
  out.push_back(v.out_bias);
  return out;
}

AudioClip maybe_augment(const AudioClip& clip, const TrainConfig& cfg, Index epoch, Index item,
                        Index corpus_size) {
  if (!cfg.augment) return clip;
  Rng rng = Rng::derive(cfg.seed, kAugmentStream,
                        static_cast<std::uint64_t>(epoch * corpus_size + item));
  const double tempo = rng.uniform(cfg.tempo_lo, cfg.tempo_hi);
  const double gain = rng.uniform(cfg.gain_lo, cfg.gain_hi);
  return augment(clip, tempo, gain);
}

void require_finite_loss(double loss, const char* phase, Index epoch, double lr) {
  if (!std::isfinite(loss)) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "training diverged: non-finite %s loss at epoch %lld (lr=%.3e)", phase,
                  static_cast<long long>(epoch), lr);
    throw DomainError(buf);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (ser_lr <= 0.0 || asr_lr <= 0.0) throw ContractError("TrainConfig: learning rates must be positive");
  if (asr_lr_decay <= 1.0) throw ContractError("TrainConfig: asr_lr_decay must exceed 1");
  if (clip_norm <= 0.0) throw ContractError("TrainConfig: clip_norm must be positive");
  if (batch_size < 1) throw ContractError("TrainConfig: batch_size must be at least 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ContractError("TrainConfig: dropout outside [0, 1)");
  if (patience < 1) throw ContractError("TrainConfig: patience must be at least 1");
  if (anneal_factor <= 0.0 || anneal_factor >= 1.0) {
    throw ContractError("TrainConfig: anneal_factor outside (0, 1)");
  }
  if (lr_floor <= 0.0 || lr_floor > ser_lr) throw ContractError("TrainConfig: lr_floor outside (0, ser_lr]");
  if (tempo_lo < kTempoMin || tempo_hi > kTempoMax || tempo_lo > tempo_hi) {
    throw ContractError("TrainConfig: tempo range outside [0.85, 1.15]");
  }
  if (gain_lo < kGainMinDb || gain_hi > kGainMaxDb || gain_lo > gain_hi) {
    throw ContractError("TrainConfig: gain range outside [-3, +6] dB");
  }
  if (max_epochs < 1) throw ContractError("TrainConfig: max_epochs must be at least 1");
  if (threads < 0) throw ContractError("TrainConfig: threads must be non-negative");
}

std::string history_csv(const TrainHistory& history, bool include_cer) {
  std::string out = include_cer ? "epoch,train_loss,val_loss,lr,val_cer\n"
                                : "epoch,train_loss,val_loss,lr\n";
  char buf[160];
  for (const EpochStats& e : history.epochs) {
    if (include_cer) {
      std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f,%.10g,%.6f\n",
                    static_cast<long long>(e.epoch), e.train_loss, e.val_loss, e.lr, e.val_cer);
    } else {
      std::snprintf(buf, sizeof(buf), "%lld,%.6f,%.6f,%.10g\n", static_cast<long long>(e.epoch),
                    e.train_loss, e.val_loss, e.lr);
    }
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// SER training
// ---------------------------------------------------------------------------

SerTrainResult train_ser(const SerModelChoice& choice, const AsrNet<float>* asr,
                         const SerDataset& train, const SerDataset& val,
                         const TrainConfig& config) {
  config.validate();
  if (train.size() == 0 || val.size() == 0) throw ContractError("train_ser: empty dataset");
  const bool is_baseline = choice.kind == "baseline";
  if (!is_baseline && asr == nullptr) {
    throw ContractError("train_ser: transfer variant '" + choice.kind + "' needs an ASR checkpoint");
  }
  CheckedModeGuard guard;

  SerBaselineSpec ser_spec = choice.ser;
  ser_spec.dropout = config.dropout;
  Rng init_rng = Rng::derive(config.seed, kInitStream, 0);

  SerBaseline<float> baseline;
  TransferNet<float> transfer;
  std::vector<Tensor<float>*> params;
  if (is_baseline) {
    baseline = build_baseline<float>(ser_spec, init_rng);
    params = baseline.params();
  } else {
    TransferSpec tspec;
    tspec.variant = variant_from_kind(choice.kind);
    tspec.tap_layer = choice.tap_layer;
    tspec.ser = ser_spec;
    transfer = build_transfer<float>(tspec, AsrNet<float>(*asr), init_rng);
    params = transfer.trainable_params();
  }

  const int threads = resolve_threads(config.threads == 0 ? 0 : config.threads);
  Adam<float> opt(params, config.ser_lr);
  PlateauSchedule sched(config.ser_lr, config.patience, config.anneal_factor, config.lr_floor);
  GradAccumulator acc(params, threads);

  // With augmentation off the per-clip features (and frozen taps) never
  // change; compute them once.
  std::vector<Tensor<float>> feat_cache;
  std::vector<TransferInputs<float>> input_cache;
  if (!config.augment) {
    if (is_baseline) {
      feat_cache.resize(static_cast<std::size_t>(train.size()));
      parallel_shards(train.size(), threads, [&](int, Index b, Index e) {
        for (Index i = b; i < e; ++i) {
          feat_cache[static_cast<std::size_t>(i)] =
              ser_features<float>(train.clips[static_cast<std::size_t>(i)]);
        }
      });
    } else {
      input_cache.resize(static_cast<std::size_t>(train.size()));
      parallel_shards(train.size(), threads, [&](int, Index b, Index e) {
        for (Index i = b; i < e; ++i) {
          input_cache[static_cast<std::size_t>(i)] =
              transfer_inputs(transfer, train.clips[static_cast<std::size_t>(i)]);
        }
      });
    }
  }

  // Validation inputs are never augmented; always cacheable.
  std::vector<Tensor<float>> val_feats;
  std::vector<TransferInputs<float>> val_inputs;
  if (is_baseline) {
    val_feats.resize(static_cast<std::size_t>(val.size()));
    parallel_shards(val.size(), threads, [&](int, Index b, Index e) {
      for (Index i = b; i < e; ++i) {
        val_feats[static_cast<std::size_t>(i)] =
            ser_features<float>(val.clips[static_cast<std::size_t>(i)]);
      }
    });
  } else {
    val_inputs.resize(static_cast<std::size_t>(val.size()));
    parallel_shards(val.size(), threads, [&](int, Index b, Index e) {
      for (Index i = b; i < e; ++i) {
        val_inputs[static_cast<std::size_t>(i)] =
            transfer_inputs(transfer, val.clips[static_cast<std::size_t>(i)]);
      }
    });
  }

  auto item_loss = [&](Index item, Index epoch, bool training, double* loss_out,
                       int shard) {
    Tape<float> tape;
    std::vector<Var> pvars;
    Var logits;
    Rng drop_rng = Rng::derive(config.seed, kDropoutStream,
                               static_cast<std::uint64_t>(epoch * train.size() + item));
    const Mode mode = training ? Mode::kTrain : Mode::kEval;
    if (is_baseline) {
      SerBaselineVars vars = training ? bind_baseline(tape, baseline)
                                      : bind_baseline_frozen(tape, baseline);
      if (training) pvars = flatten(vars);
      Tensor<float> feats;
      const Tensor<float>* feats_ptr = nullptr;
      if (training && !config.augment) {
        feats_ptr = &feat_cache[static_cast<std::size_t>(item)];
      } else if (training) {
        feats = ser_features<float>(
            maybe_augment(train.clips[static_cast<std::size_t>(item)], config, epoch, item,
                          train.size()));
        feats_ptr = &feats;
      } else {
        feats_ptr = &val_feats[static_cast<std::size_t>(item)];
      }
      logits = baseline_logits(tape, baseline.spec, vars, tape.frozen(*feats_ptr), mode, drop_rng);
    } else {
      TransferVars vars = training ? bind_transfer(tape, transfer)
                                   : bind_transfer_frozen(tape, transfer);
      if (training) pvars = flatten(vars, transfer.spec.variant);
      TransferInputs<float> fresh;
      const TransferInputs<float>* in_ptr = nullptr;
      if (training && !config.augment) {
        in_ptr = &input_cache[static_cast<std::size_t>(item)];
      } else if (training) {
        fresh = transfer_inputs(
            transfer, maybe_augment(train.clips[static_cast<std::size_t>(item)], config, epoch,
                                    item, train.size()));
        in_ptr = &fresh;
      } else {
        in_ptr = &val_inputs[static_cast<std::size_t>(item)];
      }
      logits = transfer_logits(tape, transfer, vars, *in_ptr, mode, drop_rng);
    }
    const Index label = training ? train.labels[static_cast<std::size_t>(item)]
                                 : val.labels[static_cast<std::size_t>(item)];
    Var loss = cross_entropy_from_logits(tape, logits, label);
    *loss_out = static_cast<double>(tape.value(loss).value());
    if (training) {
      tape.backward(loss);
      for (std::size_t p = 0; p < pvars.size(); ++p) {
        if (tape.has_grad(pvars[p])) acc.add(shard, p, tape.grad(pvars[p]).flat());
      }
    }
  };

  auto snapshot = [&](Index epoch, double val_loss) {
    nlohmann::json meta{{"epoch", epoch}, {"val_loss", val_loss}, {"seed", config.seed}};
    return is_baseline ? make_baseline_checkpoint(baseline, meta)
                       : make_transfer_checkpoint(transfer, meta);
  };

  SerTrainResult result;
  result.history.best_val = std::numeric_limits<double>::infinity();
  for (Index epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng shuffle_rng = Rng::derive(config.seed, kShuffleStream, static_cast<std::uint64_t>(epoch));
    BatchPlan plan = sortagrad_batches(train.durations, epoch, config.batch_size, shuffle_rng);

    double train_loss = 0.0;
    Index clip_events = 0;
    for (const auto& batch : plan.batches) {
      acc.zero();
      std::vector<double> losses(batch.size(), 0.0);
      parallel_shards(static_cast<Index>(batch.size()), threads, [&](int shard, Index b, Index e) {
        for (Index i = b; i < e; ++i) {
          item_loss(batch[static_cast<std::size_t>(i)], epoch, true,
                    &losses[static_cast<std::size_t>(i)], shard);
        }
      });
      for (double l : losses) train_loss += l;
      acc.reduce_into_params(1.0f / static_cast<float>(batch.size()));
      if (clip_grad_norm(params, config.clip_norm).clipped) ++clip_events;
      opt.step();
    }
    train_loss /= static_cast<double>(train.size());
    require_finite_loss(train_loss, "train", epoch, opt.lr());

    std::vector<double> val_losses(static_cast<std::size_t>(val.size()), 0.0);
    parallel_shards(val.size(), threads, [&](int shard, Index b, Index e) {
      for (Index i = b; i < e; ++i) {
        item_loss(i, epoch, false, &val_losses[static_cast<std::size_t>(i)], shard);
      }
    });
    double val_loss = 0.0;
    for (double l : val_losses) val_loss += l;
    val_loss /= static_cast<double>(val.size());
    require_finite_loss(val_loss, "validation", epoch, opt.lr());

    if (val_loss < result.history.best_val) {
      result.history.best_val = val_loss;
      result.history.best_epoch = epoch;
      result.best = snapshot(epoch, val_loss);
    }

    PlateauSchedule::Update update = sched.observe(val_loss);
    opt.set_lr(update.lr);
    result.history.epochs.push_back(
        EpochStats{epoch, train_loss, val_loss, update.lr, clip_events, update.annealed, -1.0});
    if (update.stop) {
      result.history.stopped_early = true;
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// ASR training
// ---------------------------------------------------------------------------

AsrTrainResult train_asr(const AsrNetSpec& spec, const AsrDataset& train, const AsrDataset& val,
                         const TrainConfig& config) {
  config.validate();
  if (train.size() == 0 || val.size() == 0) throw ContractError("train_asr: empty dataset");
  CheckedModeGuard guard;

  Rng init_rng = Rng::derive(config.seed, kInitStream, 0);
  AsrNet<float> net = build_asr<float>(spec, init_rng);
  std::vector<Tensor<float>*> params = net.params();
  const int threads = resolve_threads(config.threads == 0 ? 0 : config.threads);
  Sgd<float> opt(params, config.asr_lr);
  GradAccumulator acc(params, threads);

  std::vector<Tensor<float>> feat_cache;
  if (!config.augment) {
    feat_cache.resize(static_cast<std::size_t>(train.size()));
    parallel_shards(train.size(), threads, [&](int, Index b, Index e) {
      for (Index i = b; i < e; ++i) {
        feat_cache[static_cast<std::size_t>(i)] =
            asr_features<float>(train.clips[static_cast<std::size_t>(i)]);
      }
    });
  }
  std::vector<Tensor<float>> val_feats(static_cast<std::size_t>(val.size()));
  parallel_shards(val.size(), threads, [&](int, Index b, Index e) {
    for (Index i = b; i < e; ++i) {
      val_feats[static_cast<std::size_t>(i)] =
          asr_features<float>(val.clips[static_cast<std::size_t>(i)]);
    }
  });

  AsrTrainResult result;
  result.history.best_val = std::numeric_limits<double>::infinity();
  double best_cer = std::numeric_limits<double>::infinity();
  Index bad_epochs = 0;

  for (Index epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double lr = sgd_epoch_decay(epoch, config.asr_lr, config.asr_lr_decay);
    opt.set_lr(lr);
    Rng shuffle_rng = Rng::derive(config.seed, kShuffleStream, static_cast<std::uint64_t>(epoch));
    BatchPlan plan = sortagrad_batches(train.durations, epoch, config.batch_size, shuffle_rng);

    double train_loss = 0.0;
    Index clip_events = 0;
    for (const auto& batch : plan.batches) {
      acc.zero();
      std::vector<double> losses(batch.size(), 0.0);
      parallel_shards(static_cast<Index>(batch.size()), threads, [&](int shard, Index b, Index e) {
        for (Index bi = b; bi < e; ++bi) {
          const Index item = batch[static_cast<std::size_t>(bi)];
          Tape<float> tape;
          AsrNetVars vars = bind_asr(tape, net);
          std::vector<Var> pvars = flatten_asr(vars);
          Tensor<float> feats;
          const Tensor<float>* feats_ptr;
          if (config.augment) {
            feats = asr_features<float>(maybe_augment(train.clips[static_cast<std::size_t>(item)],
                                                      config, epoch, item, train.size()));
            feats_ptr = &feats;
          } else {
            feats_ptr = &feat_cache[static_cast<std::size_t>(item)];
          }
          AsrForwardVars fw = asr_forward(tape, net.spec, vars, *feats_ptr);
          CtcTarget target{transcript_to_labels(train.transcripts[static_cast<std::size_t>(item)]),
                           kBlankLabel};
          Var loss = ctc_loss_op(tape, fw.log_probs, target);
          losses[static_cast<std::size_t>(bi)] = static_cast<double>(tape.value(loss).value());
          tape.backward(loss);
          for (std::size_t p = 0; p < pvars.size(); ++p) {
            if (tape.has_grad(pvars[p])) acc.add(shard, p, tape.grad(pvars[p]).flat());
          }
        }
      });
      for (double l : losses) train_loss += l;
      acc.reduce_into_params(1.0f / static_cast<float>(batch.size()));
      if (clip_grad_norm(params, config.clip_norm).clipped) ++clip_events;
      opt.step();
    }
    train_loss /= static_cast<double>(train.size());
    require_finite_loss(train_loss, "train", epoch, lr);

    // Validation CTC loss and greedy CER.
    std::vector<double> val_losses(static_cast<std::size_t>(val.size()), 0.0);
    std::vector<std::string> hyps(static_cast<std::size_t>(val.size()));
    parallel_shards(val.size(), threads, [&](int, Index b, Index e) {
      for (Index i = b; i < e; ++i) {
        Tape<float> tape;
        AsrNetVars vars = bind_asr_frozen(tape, net);
        AsrForwardVars fw = asr_forward(tape, net.spec, vars, val_feats[static_cast<std::size_t>(i)]);
        CtcTarget target{transcript_to_labels(val.transcripts[static_cast<std::size_t>(i)]),
                         kBlankLabel};
        val_losses[static_cast<std::size_t>(i)] =
            static_cast<double>(tape.value(ctc_loss_op(tape, fw.log_probs, target)).value());
        hyps[static_cast<std::size_t>(i)] = greedy_ctc_decode(tape.value(fw.log_probs));
      }
    });
    double val_loss = 0.0;
    for (double l : val_losses) val_loss += l;
    val_loss /= static_cast<double>(val.size());
    require_finite_loss(val_loss, "validation", epoch, lr);
    const double cer = corpus_cer(hyps, val.transcripts);

    result.history.epochs.push_back(
        EpochStats{epoch, train_loss, val_loss, lr, clip_events, false, cer});
    if (cer < best_cer) {
      best_cer = cer;
      bad_epochs = 0;
      result.history.best_epoch = epoch;
      result.history.best_val = cer;
      nlohmann::json meta{{"epoch", epoch}, {"val_loss", val_loss}, {"val_cer", cer},
                          {"seed", config.seed}};
      result.best = make_asr_checkpoint(net, meta);
    } else if (best_cer <= 0.9 && ++bad_epochs >= config.patience) {
      // "Stopped improving" presumes it was decoding at all; a flat error
      // rate of ~1 in the warm-up epochs does not trigger the stop.
      result.history.stopped_early = true;
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

SerEvaluation evaluate_ser(const SerModel<float>& model, const SerDataset& test, int threads) {
  if (test.size() == 0) throw ContractError("evaluate_ser: empty test set");
  SerEvaluation eval;
  eval.confusion = ConfusionMatrix(kNumEmotionClasses);
  eval.predictions.resize(static_cast<std::size_t>(test.size()));
  parallel_shards(test.size(), resolve_threads(threads), [&](int, Index b, Index e) {
    for (Index i = b; i < e; ++i) {
      const Tensor<float> dist = model.forward(test.clips[static_cast<std::size_t>(i)]);
      Index best = 0;
      for (Index k = 1; k < dist.extent(0); ++k) {
        if (dist[k] > dist[best]) best = k;
      }
      eval.predictions[static_cast<std::size_t>(i)] = best;
    }
  });
  for (Index i = 0; i < test.size(); ++i) {
    eval.confusion.add(test.labels[static_cast<std::size_t>(i)],
                       eval.predictions[static_cast<std::size_t>(i)]);
  }
  eval.report = compute_metrics(eval.confusion);
  return eval;
}

double evaluate_asr_cer(const AsrNet<float>& net, const AsrDataset& test, int threads) {
  if (test.size() == 0) throw ContractError("evaluate_asr_cer: empty test set");
  std::vector<std::string> hyps(static_cast<std::size_t>(test.size()));
  parallel_shards(test.size(), resolve_threads(threads), [&](int, Index b, Index e) {
    for (Index i = b; i < e; ++i) {
      const AsrForward<float> fw =
          asr_forward_with_taps(net, asr_features<float>(test.clips[static_cast<std::size_t>(i)]));
      hyps[static_cast<std::size_t>(i)] = greedy_ctc_decode(fw.log_probs);
    }
  });
  return corpus_cer(hyps, test.transcripts);
}

FoldDatasets split_by_fold(const std::vector<LabeledUtterance>& samples,
                           const std::vector<AudioClip>& clips, const SplitPlan& fold) {
  if (samples.size() != clips.size()) {
    throw ContractError("split_by_fold: samples and clips must align");
  }
  FoldDatasets out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LabeledUtterance& u = samples[i];
    SerDataset* dst = nullptr;
    if (u.session == fold.held_out_session) {
      if (u.speaker == fold.test_speaker) {
        dst = &out.test;
      } else if (u.speaker == fold.validation_speaker) {
        dst = &out.val;
      } else {
        continue;
      }
    } else {
      dst = &out.train;
    }
    dst->clips.push_back(clips[i]);
    dst->labels.push_back(emotion_class_index(u.label));
    dst->durations.push_back(u.duration_s);
  }
  return out;
}

}  // namespace ettk
