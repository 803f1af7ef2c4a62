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

#ifndef ETTK_METRICS_HPP_
#define ETTK_METRICS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "ettk/models.hpp"

namespace ettk {

// ---------------------------------------------------------------------------
// Confusion matrix and classification metrics
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
  Index classes = 0;
  std::vector<Index> counts;  // row = true class, column = predicted

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(Index k) : classes(k), counts(static_cast<std::size_t>(k * k), 0) {}

  Index& at(Index truth, Index pred) {
    return counts[static_cast<std::size_t>(truth * classes + pred)];
  }
  Index at(Index truth, Index pred) const {
    return counts[static_cast<std::size_t>(truth * classes + pred)];
  }
  void add(Index truth, Index pred) {
    if (truth < 0 || truth >= classes || pred < 0 || pred >= classes) {
      throw ContractError("ConfusionMatrix::add: class outside [0, " + std::to_string(classes) + ")");
    }
    ++at(truth, pred);
  }
  Index support(Index truth) const {
    Index n = 0;
    for (Index p = 0; p < classes; ++p) n += at(truth, p);
    return n;
  }
  Index predicted(Index pred) const {
    Index n = 0;
    for (Index t = 0; t < classes; ++t) n += at(t, pred);
    return n;
  }
  Index total() const {
    Index n = 0;
    for (Index c : counts) n += c;
    return n;
  }
};

/// UA/WA under both plausible conventions (the headline numbers use UA =
/// macro recall, WA = overall accuracy, and the report says so explicitly).
/// Per-class F1 is absent when precision or recall is undefined, and macro F1
/// propagates absence.
struct MetricsReport {
  double macro_recall = 0.0;      // UA (mean per-class recall over supported classes)
  double overall_accuracy = 0.0;  // WA (total correct / total samples)
  std::optional<double> macro_f1;
  std::vector<std::optional<double>> precision;
  std::vector<std::optional<double>> recall;
  std::vector<std::optional<double>> f1;
  int fold_id = -1;
  std::uint64_t seed = 0;
};

MetricsReport compute_metrics(const ConfusionMatrix& cm);
std::string metrics_table(const MetricsReport& report, const std::vector<std::string>& class_names);
std::string metrics_record(const MetricsReport& report);  // one-line JSON
std::string confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names);

// ---------------------------------------------------------------------------
// Character error rate
// ---------------------------------------------------------------------------

Index levenshtein(const std::string& a, const std::string& b);

/// Micro-averaged CER: total edit distance / total reference characters.
double corpus_cer(const std::vector<std::string>& hypotheses,
                  const std::vector<std::string>& references);

// ---------------------------------------------------------------------------
// Greedy CTC decoding
// ---------------------------------------------------------------------------

/// Per-frame argmax, collapse adjacent repeats, drop blanks.
template <typename S>
std::vector<Index> greedy_ctc_decode_labels(const Tensor<S>& log_probs, Index blank) {
  if (log_probs.rank() != 2) throw DimensionError("greedy_ctc_decode: [T x V] input required");
  std::vector<Index> out;
  Index prev = -1;
  for (Index t = 0; t < log_probs.extent(0); ++t) {
    Index best = 0;
    for (Index v = 1; v < log_probs.extent(1); ++v) {
      if (log_probs.at(t, v) > log_probs.at(t, best)) best = v;
    }
    if (best != prev && best != blank) out.push_back(best);
    prev = best;
  }
  return out;
}

template <typename S>
std::string greedy_ctc_decode(const Tensor<S>& log_probs) {
  return labels_to_transcript(greedy_ctc_decode_labels(log_probs, kBlankLabel));
}

// ---------------------------------------------------------------------------
// Pearson correlation and the neuron-loudness probe
// ---------------------------------------------------------------------------

/// Absent when either series has zero variance.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

struct ProbeResult {
  Index layer = 0;  // 1-based recurrent layer
  Index unit = 0;   // activation column in [0, 2H)
  std::vector<std::optional<double>> per_clip;
  std::optional<double> mean;  // over clips with a defined correlation
};

/// Correlate one GRU unit's activation sequence with the per-frame loudness
/// track, loudness resampled to the tap frame rate by averaging over conv
/// time-stride groups.
template <typename S>
ProbeResult neuron_probe(const AsrNet<S>& net, const std::vector<AudioClip>& clips, Index layer,
                         Index unit) {
  if (clips.empty()) throw ContractError("neuron_probe: no clips");
  if (layer < 1 || layer > kNumAsrGruLayers) {
    throw ContractError("neuron_probe: layer " + std::to_string(layer) + " outside [1, " +
                        std::to_string(kNumAsrGruLayers) + "]");
  }
  if (unit < 0 || unit >= 2 * net.spec.hidden) {
    throw ContractError("neuron_probe: unit " + std::to_string(unit) + " outside [0, " +
                        std::to_string(2 * net.spec.hidden) + ")");
  }
  ProbeResult result;
  result.layer = layer;
  result.unit = unit;
  double sum = 0.0;
  Index defined = 0;
  for (const AudioClip& clip : clips) {
    const Tensor<S> feats = asr_features<S>(clip);
    const AsrForward<S> fw = asr_forward_with_taps(net, feats);
    const Tensor<S>& tap = fw.taps[static_cast<std::size_t>(layer - 1)];
    const FeatureSequence<S> loud = loudness<S>(clip);

    const Index stride = net.spec.time_stride();
    std::vector<double> activation, level;
    for (Index j = 0; j < tap.extent(0); ++j) {
      const Index lo = j * stride;
      if (lo >= loud.num_frames()) break;
      const Index hi = std::min(loud.num_frames(), lo + stride);
      double acc = 0.0;
      for (Index i = lo; i < hi; ++i) acc += static_cast<double>(loud.frames.at(i, 0));
      level.push_back(acc / static_cast<double>(hi - lo));
      activation.push_back(static_cast<double>(tap.at(j, unit)));
    }
    const auto r = pearson(activation, level);
    result.per_clip.push_back(r);
    if (r) {
      sum += *r;
      ++defined;
    }
  }
  if (defined > 0) result.mean = sum / static_cast<double>(defined);
  return result;
}

// ---------------------------------------------------------------------------
// Embedding export
// ---------------------------------------------------------------------------

struct EmbeddingStage {
  bool pooled = true;  // false: pooled ASR tap at tap_layer
  Index tap_layer = 0; // used when pooled is false
};

/// Utterance representation fed to the model's classifier (pre-dropout), or
/// the pooled ASR tap for stage tap-x.
template <typename S>
Tensor<S> utterance_embedding(const SerModel<S>& model, const AudioClip& clip,
                              const EmbeddingStage& stage) {
  if (!stage.pooled) {
    if (model.baseline) {
      throw ContractError("utterance_embedding: the baseline has no ASR branch to tap");
    }
    const TransferNet<S>& net = *model.transfer;
    if (stage.tap_layer < 1 || stage.tap_layer > kNumAsrGruLayers) {
      throw ContractError("utterance_embedding: tap layer outside [1, 5]");
    }
    const AsrForward<S> fw = asr_forward_with_taps(net.asr, asr_features<S>(clip));
    const Tensor<S>& tap = fw.taps[static_cast<std::size_t>(stage.tap_layer - 1)];
    Tape<S> t;
    return t.value(mean_rows(t, t.frozen(tap), tap.extent(0)));
  }
  if (model.baseline) {
    const SerBaseline<S>& net = *model.baseline;
    const Tensor<S> feats = ser_features<S>(clip);
    Tape<S> t;
    SerBaselineVars vars = bind_baseline_frozen(t, net);
    Var h1 = bigru_item(t, vars.layer1, t.frozen(feats), net.spec.hidden);
    Var h2 = bigru_item(t, vars.layer2, h1, net.spec.hidden);
    return t.value(mean_rows(t, h2, t.value(h2).extent(0)));
  }
  const TransferNet<S>& net = *model.transfer;
  TransferInputs<S> in = transfer_inputs(net, clip);
  switch (net.spec.variant) {
    case TransferVariant::kFtMp:
      return in.tap_pooled;
    case TransferVariant::kFtRnn: {
      Tape<S> t;
      BiGruVars rnn = bind_bigru_frozen(t, net.rnn);
      Var h = bigru_item(t, rnn, t.frozen(in.tap_sequence), net.spec.ser.hidden);
      return t.value(mean_rows(t, h, t.value(h).extent(0)));
    }
    case TransferVariant::kProgressive: {
      Tape<S> t;
      BiGruVars emo1 = bind_bigru_frozen(t, net.emo1);
      BiGruVars emo2 = bind_bigru_frozen(t, net.emo2);
      Var h1 = bigru_item(t, emo1, t.frozen(in.ser_feats), net.spec.ser.hidden);
      Var h2 = bigru_item(t, emo2, h1, net.spec.ser.hidden);
      Var pooled = mean_rows(t, h2, t.value(h2).extent(0));
      Var cat = concat_vecs(t, {pooled, t.frozen(in.tap_pooled)});
      return t.value(cat);
    }
  }
  throw ContractError("utterance_embedding: unknown variant");
}

/// TSV: one row per sample: id, label, embedding components. Deterministic
/// formatting, so re-export with the same checkpoint is byte-identical.
template <typename S>
std::string export_embeddings(const SerModel<S>& model, const std::vector<AudioClip>& clips,
                              const std::vector<std::string>& ids,
                              const std::vector<std::string>& labels,
                              const EmbeddingStage& stage) {
  if (clips.size() != ids.size() || clips.size() != labels.size()) {
    throw ContractError("export_embeddings: clips, ids, labels must align");
  }
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const Tensor<S> emb = utterance_embedding(model, clips[i], stage);
    out += ids[i];
    out += '\t';
    out += labels[i];
    for (Index j = 0; j < emb.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(emb[j]));
      out += '\t';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace ettk

#endif  // ETTK_METRICS_HPP_
