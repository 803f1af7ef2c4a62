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

#ifndef ETTK_TRAIN_HPP_
#define ETTK_TRAIN_HPP_

#include <string>
#include <vector>

#include "ettk/metrics.hpp"
#include "ettk/optim.hpp"
#include "ettk/synth.hpp"

namespace ettk {

inline constexpr std::uint64_t kDefaultSeed = 12345;

/// Training recipe. The defaults reproduce the reference setup: Adam 1e-4
/// for emotion nets, SGD 3e-4 with per-epoch /1.1 decay for the ASR net,
/// gradient-norm clip 15, batch 64, dropout 0.25, plateau annealing with
/// patience 2 down to 1e-6, tempo/gain augmentation in [0.85,1.15] and
/// [-3,+6] dB.
struct TrainConfig {
  double ser_lr = 1e-4;
  double asr_lr = 3e-4;
  double asr_lr_decay = 1.1;
  double clip_norm = 15.0;
  Index batch_size = 64;
  double dropout = 0.25;
  Index patience = 2;
  double anneal_factor = 0.5;
  double lr_floor = 1e-6;
  bool augment = true;
  double tempo_lo = 0.85;
  double tempo_hi = 1.15;
  double gain_lo = -3.0;
  double gain_hi = 6.0;
  Index max_epochs = 30;
  std::uint64_t seed = kDefaultSeed;
  int threads = 1;

  void validate() const;
};

struct EpochStats {
  Index epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  Index clip_events = 0;  // batches whose gradient norm exceeded the clip
  bool annealed = false;
  double val_cer = -1.0;  // ASR runs only
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  Index best_epoch = -1;
  double best_val = 0.0;
  bool stopped_early = false;
};

/// CSV: epoch,train_loss,val_loss,lr[,val_cer].
std::string history_csv(const TrainHistory& history, bool include_cer);

// ---------------------------------------------------------------------------
// Datasets (in-memory, desk scale)
// ---------------------------------------------------------------------------

struct SerDataset {
  std::vector<AudioClip> clips;
  std::vector<Index> labels;  // canonical class indices
  std::vector<double> durations;

  Index size() const { return static_cast<Index>(clips.size()); }
};

struct AsrDataset {
  std::vector<AudioClip> clips;
  std::vector<std::string> transcripts;
  std::vector<double> durations;

  Index size() const { return static_cast<Index>(clips.size()); }
};

/// Which emotion model to train.
struct SerModelChoice {
  std::string kind = "baseline";  // baseline | ft-mp | ft-rnn | progressive
  Index tap_layer = 2;
  SerBaselineSpec ser;
};

struct SerTrainResult {
  Checkpoint best;  // epoch with the lowest validation loss
  TrainHistory history;
};

/// Cross-entropy training with the recipe schedule. Transfer variants take
/// the pretrained ASR net; its parameters are frozen and never receive
/// gradients. Single-thread runs are byte-deterministic in the seed.
SerTrainResult train_ser(const SerModelChoice& choice, const AsrNet<float>* asr,
                         const SerDataset& train, const SerDataset& val, const TrainConfig& config);

struct AsrTrainResult {
  Checkpoint best;  // epoch with the lowest validation character error rate
  TrainHistory history;
};

/// CTC training with SGD and the per-epoch decay; stops once the validation
/// CER fails to improve for `patience` consecutive epochs.
AsrTrainResult train_asr(const AsrNetSpec& spec, const AsrDataset& train, const AsrDataset& val,
                         const TrainConfig& config);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct SerEvaluation {
  MetricsReport report;
  ConfusionMatrix confusion;
  std::vector<Index> predictions;
};

SerEvaluation evaluate_ser(const SerModel<float>& model, const SerDataset& test, int threads = 1);

double evaluate_asr_cer(const AsrNet<float>& net, const AsrDataset& test, int threads = 1);

// ---------------------------------------------------------------------------
// Dataset assembly from manifests / synthetic corpora
// ---------------------------------------------------------------------------

/// Split a labeled corpus into train/val/test per a LOSO fold.
struct FoldDatasets {
  SerDataset train, val, test;
};

FoldDatasets split_by_fold(const std::vector<LabeledUtterance>& samples,
                           const std::vector<AudioClip>& clips, const SplitPlan& fold);

}  // namespace ettk

#endif  // ETTK_TRAIN_HPP_
