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

#ifndef ETTK_MODELS_HPP_
#define ETTK_MODELS_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ettk/checkpoint.hpp"
#include "ettk/features.hpp"
#include "ettk/layers.hpp"
#include "ettk/manifest.hpp"
#include "ettk/objectives.hpp"

namespace ettk {

inline constexpr Index kNumAsrConvStages = 2;
inline constexpr Index kNumAsrGruLayers = 5;
inline constexpr Index kNumEmotionClasses = 4;

// ---------------------------------------------------------------------------
// Specs
// ---------------------------------------------------------------------------

struct ConvStageSpec {
  Index channels = 0;
  Index kernel_t = 0;  // time
  Index kernel_f = 0;  // frequency
  Index stride_t = 1;
  Index stride_f = 1;
};

/// Topology of the transcription network: two convolutional stages over the
/// 161-bin spectrogram, five bidirectional GRU layers, per-frame softmax over
/// the characters-plus-blank alphabet.
struct AsrNetSpec {
  std::vector<ConvStageSpec> conv;
  Index hidden = 256;
  Index alphabet = kAlphabetSize;

  static AsrNetSpec defaults() {
    AsrNetSpec spec;
    spec.conv = {{32, 11, 41, 2, 2}, {32, 11, 21, 1, 2}};
    return spec;
  }

  void validate() const {
    if (static_cast<Index>(conv.size()) != kNumAsrConvStages) {
      throw ContractError("AsrNetSpec: exactly " + std::to_string(kNumAsrConvStages) +
                          " conv stages required");
    }
    for (const auto& c : conv) {
      if (c.channels < 1 || c.kernel_t < 1 || c.kernel_f < 1 || c.stride_t < 1 || c.stride_f < 1) {
        throw ContractError("AsrNetSpec: conv stage fields must be positive");
      }
    }
    if (hidden < 1) throw ContractError("AsrNetSpec: hidden size must be positive");
    if (alphabet < 2) throw ContractError("AsrNetSpec: alphabet needs blank plus one symbol");
  }

  Index conv_out_freq() const {
    Index f = kSpectrogramBins;
    for (const auto& c : conv) f = conv_out_extent(f, c.kernel_f, c.stride_f);
    return f;
  }
  Index gru_input_width() const { return conv.back().channels * conv_out_freq(); }
  Index out_frames(Index spect_frames) const {
    Index t = spect_frames;
    for (const auto& c : conv) t = conv_out_extent(t, c.kernel_t, c.stride_t);
    return t;
  }
  /// Smallest spectrogram length that survives both conv stages.
  Index min_spect_frames() const {
    Index need = 1;
    for (auto it = conv.rbegin(); it != conv.rend(); ++it) {
      need = (need - 1) * it->stride_t + it->kernel_t;
    }
    return need;
  }
  /// Product of conv time strides; a tap frame covers this many feature
  /// frames (used to align loudness with tap activations).
  Index time_stride() const {
    Index s = 1;
    for (const auto& c : conv) s *= c.stride_t;
    return s;
  }
};

inline nlohmann::json to_json(const AsrNetSpec& spec) {
  nlohmann::json conv = nlohmann::json::array();
  for (const auto& c : spec.conv) {
    conv.push_back({c.channels, c.kernel_t, c.kernel_f, c.stride_t, c.stride_f});
  }
  return {{"conv", conv}, {"hidden", spec.hidden}, {"alphabet", spec.alphabet}};
}

inline AsrNetSpec asr_spec_from_json(const nlohmann::json& j) {
  AsrNetSpec spec;
  spec.conv.clear();
  for (const auto& c : j.at("conv")) {
    spec.conv.push_back({c.at(0).get<Index>(), c.at(1).get<Index>(), c.at(2).get<Index>(),
                         c.at(3).get<Index>(), c.at(4).get<Index>()});
  }
  spec.hidden = j.at("hidden").get<Index>();
  spec.alphabet = j.at("alphabet").get<Index>();
  spec.validate();
  return spec;
}

/// Baseline emotion net: two bidirectional GRU layers over the 27-dim
/// feature stream, temporal mean pooling, dropout 0.25, 4-way softmax.
struct SerBaselineSpec {
  Index hidden = 96;
  Index input_dim = kSerFeatureDim;
  Index classes = kNumEmotionClasses;
  double dropout = 0.25;

  void validate() const {
    if (hidden < 1 || input_dim < 1 || classes < 2) {
      throw ContractError("SerBaselineSpec: sizes must be positive");
    }
    if (dropout < 0.0 || dropout >= 1.0) throw ContractError("SerBaselineSpec: dropout outside [0,1)");
  }
};

inline nlohmann::json to_json(const SerBaselineSpec& spec) {
  return {{"hidden", spec.hidden},
          {"input_dim", spec.input_dim},
          {"classes", spec.classes},
          {"dropout", spec.dropout}};
}

inline SerBaselineSpec ser_spec_from_json(const nlohmann::json& j) {
  SerBaselineSpec spec;
  spec.hidden = j.at("hidden").get<Index>();
  spec.input_dim = j.at("input_dim").get<Index>();
  spec.classes = j.at("classes").get<Index>();
  spec.dropout = j.at("dropout").get<double>();
  spec.validate();
  return spec;
}

enum class TransferVariant { kFtMp, kFtRnn, kProgressive };

inline std::string variant_kind(TransferVariant v) {
  switch (v) {
    case TransferVariant::kFtMp: return "ft-mp";
    case TransferVariant::kFtRnn: return "ft-rnn";
    case TransferVariant::kProgressive: return "progressive";
  }
  throw ContractError("variant_kind: unknown variant");
}

inline TransferVariant variant_from_kind(const std::string& kind) {
  if (kind == "ft-mp") return TransferVariant::kFtMp;
  if (kind == "ft-rnn") return TransferVariant::kFtRnn;
  if (kind == "progressive") return TransferVariant::kProgressive;
  throw ContractError("variant_from_kind: unknown transfer kind '" + kind + "'");
}

/// Transfer architecture: which ASR layer is tapped and what sits on top.
struct TransferSpec {
  TransferVariant variant = TransferVariant::kFtMp;
  Index tap_layer = 2;  // 1-based recurrent layer index
  SerBaselineSpec ser;  // hidden size of the trainable branch, dropout, classes

  void validate() const {
    if (tap_layer < 1 || tap_layer > kNumAsrGruLayers) {
      throw ContractError("TransferSpec: tap layer " + std::to_string(tap_layer) +
                          " outside [1, " + std::to_string(kNumAsrGruLayers) + "]");
    }
    ser.validate();
  }
};

// ---------------------------------------------------------------------------
// Parameter-count formulas (audited by tests against the live registries)
// ---------------------------------------------------------------------------

inline Index gru_cell_param_count(Index input_dim, Index hidden) {
  return 3 * (hidden * input_dim + hidden * hidden + hidden);
}
inline Index bigru_param_count(Index input_dim, Index hidden) {
  return 2 * gru_cell_param_count(input_dim, hidden);
}
inline Index linear_param_count(Index input_dim, Index classes) {
  return classes * input_dim + classes;
}
inline Index baseline_param_count(const SerBaselineSpec& spec) {
  return bigru_param_count(spec.input_dim, spec.hidden) +
         bigru_param_count(2 * spec.hidden, spec.hidden) +
         linear_param_count(2 * spec.hidden, spec.classes);
}
inline Index transfer_trainable_param_count(const TransferSpec& spec, Index asr_hidden) {
  switch (spec.variant) {
    case TransferVariant::kFtMp:
      return linear_param_count(2 * asr_hidden, spec.ser.classes);
    case TransferVariant::kFtRnn:
      return bigru_param_count(2 * asr_hidden, spec.ser.hidden) +
             linear_param_count(2 * spec.ser.hidden, spec.ser.classes);
    case TransferVariant::kProgressive:
      return bigru_param_count(spec.ser.input_dim, spec.ser.hidden) +
             bigru_param_count(2 * spec.ser.hidden, spec.ser.hidden) +
             linear_param_count(2 * spec.ser.hidden + 2 * asr_hidden, spec.ser.classes);
  }
  throw ContractError("transfer_trainable_param_count: unknown variant");
}

// ---------------------------------------------------------------------------
// ASR network
// ---------------------------------------------------------------------------

template <typename S>
struct ConvStage {
  ConvStageSpec spec;
  Tensor<S> kernels;  // [F x C x kt x kf]
  Tensor<S> bias;     // [F]
};

template <typename S>
struct AsrNet {
  AsrNetSpec spec;
  std::vector<ConvStage<S>> conv;
  std::vector<BiGru<S>> layers;
  Tensor<S> out_weight;  // [2H x V]
  Tensor<S> out_bias;    // [V]

  std::vector<std::pair<std::string, Tensor<S>*>> named_params() {
    std::vector<std::pair<std::string, Tensor<S>*>> out;
    for (std::size_t i = 0; i < conv.size(); ++i) {
      const std::string prefix = "conv" + std::to_string(i + 1);
      out.emplace_back(prefix + ".kernels", &conv[i].kernels);
      out.emplace_back(prefix + ".bias", &conv[i].bias);
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string prefix = "gru" + std::to_string(l + 1);
      append_cell(out, prefix + ".fwd", layers[l].fwd);
      append_cell(out, prefix + ".bwd", layers[l].bwd);
    }
    out.emplace_back("out.weight", &out_weight);
    out.emplace_back("out.bias", &out_bias);
    return out;
  }

  std::vector<Tensor<S>*> params() {
    std::vector<Tensor<S>*> out;
    for (auto& [name, tensor] : named_params()) out.push_back(tensor);
    return out;
  }

  void set_trainable(bool trainable) {
    for (Tensor<S>* p : params()) p->set_requires_grad(trainable);
  }

  static void append_cell(std::vector<std::pair<std::string, Tensor<S>*>>& out,
                          const std::string& prefix, GruCell<S>& cell) {
    out.emplace_back(prefix + ".w_update", &cell.w_update);
    out.emplace_back(prefix + ".w_reset", &cell.w_reset);
    out.emplace_back(prefix + ".w_cand", &cell.w_cand);
    out.emplace_back(prefix + ".u_update", &cell.u_update);
    out.emplace_back(prefix + ".u_reset", &cell.u_reset);
    out.emplace_back(prefix + ".u_cand", &cell.u_cand);
    out.emplace_back(prefix + ".b_update", &cell.b_update);
    out.emplace_back(prefix + ".b_reset", &cell.b_reset);
    out.emplace_back(prefix + ".b_cand", &cell.b_cand);
  }
};

/// Fresh ASR network with uniform fan-in init on conv/output and the
/// recurrent 1/sqrt(H) init on GRU cells.
template <typename S>
AsrNet<S> build_asr(const AsrNetSpec& spec, Rng& rng) {
  spec.validate();
  AsrNet<S> net;
  net.spec = spec;
  Index in_channels = 1;
  for (const auto& c : spec.conv) {
    ConvStage<S> stage;
    stage.spec = c;
    stage.kernels = Tensor<S>(Shape{c.channels, in_channels, c.kernel_t, c.kernel_f});
    stage.bias = Tensor<S>(Shape{c.channels});
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * c.kernel_t * c.kernel_f));
    for (Index i = 0; i < stage.kernels.size(); ++i) {
      stage.kernels.flat()[i] = static_cast<S>(rng.uniform(-bound, bound));
    }
    net.conv.push_back(std::move(stage));
    in_channels = c.channels;
  }
  Index width = spec.gru_input_width();
  for (Index l = 0; l < kNumAsrGruLayers; ++l) {
    BiGru<S> layer(width, spec.hidden);
    layer.init(rng);
    net.layers.push_back(std::move(layer));
    width = 2 * spec.hidden;
  }
  net.out_weight = Tensor<S>(Shape{2 * spec.hidden, spec.alphabet});
  net.out_bias = Tensor<S>(Shape{spec.alphabet});
  const double bound = 1.0 / std::sqrt(static_cast<double>(2 * spec.hidden));
  for (Index i = 0; i < net.out_weight.size(); ++i) {
    net.out_weight.flat()[i] = static_cast<S>(rng.uniform(-bound, bound));
  }
  net.set_trainable(true);
  return net;
}

struct AsrNetVars {
  std::vector<std::pair<Var, Var>> conv;  // kernels, bias
  std::vector<BiGruVars> layers;
  Var out_weight, out_bias;
};

template <typename S>
AsrNetVars bind_asr(Tape<S>& t, AsrNet<S>& net) {
  AsrNetVars vars;
  for (auto& stage : net.conv) vars.conv.emplace_back(t.leaf(stage.kernels), t.leaf(stage.bias));
  for (auto& layer : net.layers) vars.layers.push_back(bind_bigru(t, layer));
  vars.out_weight = t.leaf(net.out_weight);
  vars.out_bias = t.leaf(net.out_bias);
  return vars;
}

template <typename S>
AsrNetVars bind_asr_frozen(Tape<S>& t, const AsrNet<S>& net) {
  AsrNetVars vars;
  for (const auto& stage : net.conv) {
    vars.conv.emplace_back(t.frozen(stage.kernels), t.frozen(stage.bias));
  }
  for (const auto& layer : net.layers) vars.layers.push_back(bind_bigru_frozen(t, layer));
  vars.out_weight = t.frozen(net.out_weight);
  vars.out_bias = t.frozen(net.out_bias);
  return vars;
}

struct AsrForwardVars {
  Var log_probs;           // [T' x V]
  std::vector<Var> taps;   // per recurrent layer, [T' x 2H]
};

/// Full forward pass over one utterance's z-normalized spectrogram.
template <typename S>
AsrForwardVars asr_forward(Tape<S>& t, const AsrNetSpec& spec, const AsrNetVars& vars,
                           const Tensor<S>& feats) {
  if (feats.rank() != 2 || feats.extent(1) != kSpectrogramBins) {
    throw DimensionError("asr_forward: expected [T x " + std::to_string(kSpectrogramBins) +
                         "] features, got " + shape_str(feats.shape()));
  }
  if (feats.extent(0) < spec.min_spect_frames()) {
    throw ContractError("asr_forward: " + std::to_string(feats.extent(0)) +
                        " frames, conv stack needs at least " +
                        std::to_string(spec.min_spect_frames()));
  }
  const Index frames = feats.extent(0);
  Var x = t.constant(reshaped(Tensor<S>(feats), Shape{1, frames, kSpectrogramBins}));
  for (std::size_t i = 0; i < spec.conv.size(); ++i) {
    const auto& c = spec.conv[i];
    x = relu(t, conv2d(t, x, vars.conv[i].first, ConvStride{c.stride_t, c.stride_f},
                       vars.conv[i].second));
  }
  Var seq = channels_to_time_rows(t, x);
  AsrForwardVars out;
  for (const auto& layer : vars.layers) {
    seq = bigru_item(t, layer, seq, spec.hidden);
    out.taps.push_back(seq);
  }
  Var logits = add_row_bias(t, matmul(t, seq, vars.out_weight), vars.out_bias);
  out.log_probs = log_softmax(t, logits);
  return out;
}

template <typename S>
struct AsrForward {
  Tensor<S> log_probs;
  std::vector<Tensor<S>> taps;
};

/// Eval-mode forward returning concrete tensors; deterministic for fixed
/// weights, so repeated calls are bit-identical.
template <typename S>
AsrForward<S> asr_forward_with_taps(const AsrNet<S>& net, const Tensor<S>& feats) {
  Tape<S> t;
  AsrNetVars vars = bind_asr_frozen(t, net);
  AsrForwardVars fw = asr_forward(t, net.spec, vars, feats);
  AsrForward<S> out;
  out.log_probs = t.value(fw.log_probs);
  for (Var tap : fw.taps) out.taps.push_back(t.value(tap));
  return out;
}

// ---------------------------------------------------------------------------
// SER baseline network
// ---------------------------------------------------------------------------

template <typename S>
struct SerBaseline {
  SerBaselineSpec spec;
  BiGru<S> layer1, layer2;
  Linear<S> head;

  std::vector<std::pair<std::string, Tensor<S>*>> named_params() {
    std::vector<std::pair<std::string, Tensor<S>*>> out;
    AsrNet<S>::append_cell(out, "gru1.fwd", layer1.fwd);
    AsrNet<S>::append_cell(out, "gru1.bwd", layer1.bwd);
    AsrNet<S>::append_cell(out, "gru2.fwd", layer2.fwd);
    AsrNet<S>::append_cell(out, "gru2.bwd", layer2.bwd);
    out.emplace_back("head.weight", &head.weight);
    out.emplace_back("head.bias", &head.bias);
    return out;
  }
  std::vector<Tensor<S>*> params() {
    std::vector<Tensor<S>*> out;
    for (auto& [name, tensor] : named_params()) out.push_back(tensor);
    return out;
  }
  void set_trainable(bool trainable) {
    for (Tensor<S>* p : params()) p->set_requires_grad(trainable);
  }
};

template <typename S>
SerBaseline<S> build_baseline(const SerBaselineSpec& spec, Rng& rng) {
  spec.validate();
  SerBaseline<S> net;
  net.spec = spec;
  net.layer1 = BiGru<S>(spec.input_dim, spec.hidden);
  net.layer1.init(rng);
  net.layer2 = BiGru<S>(2 * spec.hidden, spec.hidden);
  net.layer2.init(rng);
  net.head = Linear<S>(2 * spec.hidden, spec.classes);
  net.head.init(rng);
  net.set_trainable(true);
  return net;
}

struct SerBaselineVars {
  BiGruVars layer1, layer2;
  LinearVars head;
};

template <typename S>
SerBaselineVars bind_baseline(Tape<S>& t, SerBaseline<S>& net) {
  return SerBaselineVars{bind_bigru(t, net.layer1), bind_bigru(t, net.layer2),
                         bind_linear(t, net.head)};
}

template <typename S>
SerBaselineVars bind_baseline_frozen(Tape<S>& t, const SerBaseline<S>& net) {
  return SerBaselineVars{bind_bigru_frozen(t, net.layer1), bind_bigru_frozen(t, net.layer2),
                         LinearVars{t.frozen(net.head.weight), t.frozen(net.head.bias)}};
}

/// Two recurrent layers, mean pool over all frames, dropout, class logits.
template <typename S>
Var baseline_logits(Tape<S>& t, const SerBaselineSpec& spec, const SerBaselineVars& vars,
                    Var feats, Mode mode, Rng& rng) {
  Var h1 = bigru_item(t, vars.layer1, feats, spec.hidden);
  Var h2 = bigru_item(t, vars.layer2, h1, spec.hidden);
  Var pooled = mean_rows(t, h2, t.value(h2).extent(0));
  Var dropped = dropout(t, pooled, spec.dropout, mode, rng);
  return linear_forward(t, vars.head, dropped);
}

// ---------------------------------------------------------------------------
// Transfer networks
// ---------------------------------------------------------------------------

template <typename S>
struct TransferNet {
  TransferSpec spec;
  AsrNet<S> asr;            // frozen
  BiGru<S> rnn;             // kFtRnn: trainable GRU over the tap sequence
  BiGru<S> emo1, emo2;      // kProgressive: trainable emotion branch
  Linear<S> head;

  Index head_input_width() const {
    switch (spec.variant) {
      case TransferVariant::kFtMp: return 2 * asr.spec.hidden;
      case TransferVariant::kFtRnn: return 2 * spec.ser.hidden;
      case TransferVariant::kProgressive: return 2 * spec.ser.hidden + 2 * asr.spec.hidden;
    }
    throw ContractError("head_input_width: unknown variant");
  }

  std::vector<std::pair<std::string, Tensor<S>*>> trainable_named_params() {
    std::vector<std::pair<std::string, Tensor<S>*>> out;
    if (spec.variant == TransferVariant::kFtRnn) {
      AsrNet<S>::append_cell(out, "rnn.fwd", rnn.fwd);
      AsrNet<S>::append_cell(out, "rnn.bwd", rnn.bwd);
    }
    if (spec.variant == TransferVariant::kProgressive) {
      AsrNet<S>::append_cell(out, "emotion.gru1.fwd", emo1.fwd);
      AsrNet<S>::append_cell(out, "emotion.gru1.bwd", emo1.bwd);
      AsrNet<S>::append_cell(out, "emotion.gru2.fwd", emo2.fwd);
      AsrNet<S>::append_cell(out, "emotion.gru2.bwd", emo2.bwd);
    }
    out.emplace_back("head.weight", &head.weight);
    out.emplace_back("head.bias", &head.bias);
    return out;
  }

  std::vector<std::pair<std::string, Tensor<S>*>> named_params() {
    std::vector<std::pair<std::string, Tensor<S>*>> out;
    for (auto& [name, tensor] : asr.named_params()) out.emplace_back("asr." + name, tensor);
    for (auto& [name, tensor] : trainable_named_params()) out.emplace_back(name, tensor);
    return out;
  }

  std::vector<Tensor<S>*> trainable_params() {
    std::vector<Tensor<S>*> out;
    for (auto& [name, tensor] : trainable_named_params()) out.push_back(tensor);
    return out;
  }
};

/// Assemble a transfer net over an already-trained ASR network. The ASR
/// branch is frozen here and stays frozen for the network's lifetime.
template <typename S>
TransferNet<S> build_transfer(const TransferSpec& spec, AsrNet<S> asr, Rng& rng) {
  spec.validate();
  TransferNet<S> net;
  net.spec = spec;
  net.asr = std::move(asr);
  net.asr.set_trainable(false);
  if (spec.variant == TransferVariant::kFtRnn) {
    net.rnn = BiGru<S>(2 * net.asr.spec.hidden, spec.ser.hidden);
    net.rnn.init(rng);
  }
  if (spec.variant == TransferVariant::kProgressive) {
    net.emo1 = BiGru<S>(spec.ser.input_dim, spec.ser.hidden);
    net.emo1.init(rng);
    net.emo2 = BiGru<S>(2 * spec.ser.hidden, spec.ser.hidden);
    net.emo2.init(rng);
  }
  net.head = Linear<S>(net.head_input_width(), spec.ser.classes);
  net.head.init(rng);
  for (Tensor<S>* p : net.trainable_params()) p->set_requires_grad(true);
  return net;
}

/// Per-clip inputs for the transfer heads; the frozen ASR branch runs once
/// per clip outside the training tape (its outputs are constants).
template <typename S>
struct TransferInputs {
  Tensor<S> tap_pooled;    // [2H_asr]  (ft-mp, progressive)
  Tensor<S> tap_sequence;  // [T' x 2H_asr]  (ft-rnn)
  Tensor<S> ser_feats;     // [T x 27]  (progressive)
};

template <typename S>
TransferInputs<S> transfer_inputs(const TransferNet<S>& net, const AudioClip& clip) {
  TransferInputs<S> in;
  const Tensor<S> spect = asr_features<S>(clip);
  AsrForward<S> fw = asr_forward_with_taps(net.asr, spect);
  in.tap_sequence = fw.taps[static_cast<std::size_t>(net.spec.tap_layer - 1)];
  const Index frames = in.tap_sequence.extent(0);
  Tape<S> t;
  Var pooled = mean_rows(t, t.frozen(in.tap_sequence), frames);
  in.tap_pooled = t.value(pooled);
  if (net.spec.variant == TransferVariant::kProgressive) in.ser_feats = ser_features<S>(clip);
  return in;
}

struct TransferVars {
  BiGruVars rnn;
  BiGruVars emo1, emo2;
  LinearVars head;
};

template <typename S>
TransferVars bind_transfer(Tape<S>& t, TransferNet<S>& net) {
  TransferVars vars;
  if (net.spec.variant == TransferVariant::kFtRnn) vars.rnn = bind_bigru(t, net.rnn);
  if (net.spec.variant == TransferVariant::kProgressive) {
    vars.emo1 = bind_bigru(t, net.emo1);
    vars.emo2 = bind_bigru(t, net.emo2);
  }
  vars.head = bind_linear(t, net.head);
  return vars;
}

template <typename S>
TransferVars bind_transfer_frozen(Tape<S>& t, const TransferNet<S>& net) {
  TransferVars vars;
  if (net.spec.variant == TransferVariant::kFtRnn) vars.rnn = bind_bigru_frozen(t, net.rnn);
  if (net.spec.variant == TransferVariant::kProgressive) {
    vars.emo1 = bind_bigru_frozen(t, net.emo1);
    vars.emo2 = bind_bigru_frozen(t, net.emo2);
  }
  vars.head = LinearVars{t.frozen(net.head.weight), t.frozen(net.head.bias)};
  return vars;
}

/// Class logits for one clip's precomputed inputs.
template <typename S>
Var transfer_logits(Tape<S>& t, const TransferNet<S>& net, const TransferVars& vars,
                    const TransferInputs<S>& in, Mode mode, Rng& rng) {
  const double rate = net.spec.ser.dropout;
  switch (net.spec.variant) {
    case TransferVariant::kFtMp: {
      Var tap = t.frozen(in.tap_pooled);
      return linear_forward(t, vars.head, dropout(t, tap, rate, mode, rng));
    }
    case TransferVariant::kFtRnn: {
      Var seq = t.frozen(in.tap_sequence);
      Var h = bigru_item(t, vars.rnn, seq, net.spec.ser.hidden);
      Var pooled = mean_rows(t, h, t.value(h).extent(0));
      return linear_forward(t, vars.head, dropout(t, pooled, rate, mode, rng));
    }
    case TransferVariant::kProgressive: {
      if (in.ser_feats.size() == 0) {
        throw ContractError("transfer_logits: progressive net needs the 27-dim feature stream");
      }
      Var feats = t.frozen(in.ser_feats);
      Var h1 = bigru_item(t, vars.emo1, feats, net.spec.ser.hidden);
      Var h2 = bigru_item(t, vars.emo2, h1, net.spec.ser.hidden);
      Var pooled = mean_rows(t, h2, t.value(h2).extent(0));
      Var tap = t.frozen(in.tap_pooled);
      Var cat = concat_vecs(t, {pooled, tap});
      return linear_forward(t, vars.head, dropout(t, cat, rate, mode, rng));
    }
  }
  throw ContractError("transfer_logits: unknown variant");
}

// ---------------------------------------------------------------------------
// Eval-mode forwards (class distributions)
// ---------------------------------------------------------------------------

template <typename S>
Tensor<S> baseline_forward(const SerBaseline<S>& net, const AudioClip& clip) {
  const Tensor<S> feats = ser_features<S>(clip);
  Tape<S> t;
  SerBaselineVars vars = bind_baseline_frozen(t, net);
  Rng rng(0);  // eval mode: dropout is identity
  Var logits = baseline_logits(t, net.spec, vars, t.frozen(feats), Mode::kEval, rng);
  return t.value(softmax(t, logits));
}

template <typename S>
Tensor<S> transfer_forward(const TransferNet<S>& net, const AudioClip& clip) {
  TransferInputs<S> in = transfer_inputs(net, clip);
  Tape<S> t;
  TransferVars vars = bind_transfer_frozen(t, net);
  Rng rng(0);
  Var logits = transfer_logits(t, net, vars, in, Mode::kEval, rng);
  return t.value(softmax(t, logits));
}

// ---------------------------------------------------------------------------
// Checkpoint adapters
// ---------------------------------------------------------------------------

template <typename S>
Checkpoint make_asr_checkpoint(AsrNet<S>& net, nlohmann::json train_meta = {}) {
  Checkpoint ckpt;
  ckpt.metadata = std::move(train_meta);
  ckpt.metadata["kind"] = "asr";
  ckpt.metadata["spec"] = to_json(net.spec);
  add_tensors(ckpt, net.named_params());
  return ckpt;
}

template <typename S>
AsrNet<S> asr_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind() != "asr") {
    throw IoError("checkpoint: expected kind 'asr', found '" + ckpt.kind() + "'");
  }
  Rng rng(0);
  AsrNet<S> net = build_asr<S>(asr_spec_from_json(ckpt.metadata.at("spec")), rng);
  load_tensors(ckpt, net.named_params());
  return net;
}

template <typename S>
Checkpoint make_baseline_checkpoint(SerBaseline<S>& net, nlohmann::json train_meta = {}) {
  Checkpoint ckpt;
  ckpt.metadata = std::move(train_meta);
  ckpt.metadata["kind"] = "ser-baseline";
  ckpt.metadata["spec"] = to_json(net.spec);
  add_tensors(ckpt, net.named_params());
  return ckpt;
}

template <typename S>
SerBaseline<S> baseline_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind() != "ser-baseline") {
    throw IoError("checkpoint: expected kind 'ser-baseline', found '" + ckpt.kind() + "'");
  }
  Rng rng(0);
  SerBaseline<S> net = build_baseline<S>(ser_spec_from_json(ckpt.metadata.at("spec")), rng);
  load_tensors(ckpt, net.named_params());
  return net;
}

template <typename S>
Checkpoint make_transfer_checkpoint(TransferNet<S>& net, nlohmann::json train_meta = {}) {
  Checkpoint ckpt;
  ckpt.metadata = std::move(train_meta);
  ckpt.metadata["kind"] = variant_kind(net.spec.variant);
  ckpt.metadata["tap"] = net.spec.tap_layer;
  ckpt.metadata["asr_spec"] = to_json(net.asr.spec);
  ckpt.metadata["ser_spec"] = to_json(net.spec.ser);
  add_tensors(ckpt, net.named_params());
  return ckpt;
}

template <typename S>
TransferNet<S> transfer_from_checkpoint(const Checkpoint& ckpt) {
  TransferSpec spec;
  spec.variant = variant_from_kind(ckpt.kind());  // throws on non-transfer kinds
  spec.tap_layer = ckpt.metadata.at("tap").get<Index>();
  spec.ser = ser_spec_from_json(ckpt.metadata.at("ser_spec"));
  Rng rng(0);
  AsrNet<S> asr = build_asr<S>(asr_spec_from_json(ckpt.metadata.at("asr_spec")), rng);
  TransferNet<S> net = build_transfer<S>(spec, std::move(asr), rng);
  load_tensors(ckpt, net.named_params());
  net.asr.set_trainable(false);
  return net;
}

/// Any SER-capable model (baseline or transfer) behind one interface, loaded
/// from a checkpoint by kind.
template <typename S>
struct SerModel {
  std::optional<SerBaseline<S>> baseline;
  std::optional<TransferNet<S>> transfer;

  std::string kind() const {
    return baseline ? "ser-baseline" : variant_kind(transfer->spec.variant);
  }
  Tensor<S> forward(const AudioClip& clip) const {
    return baseline ? baseline_forward(*baseline, clip) : transfer_forward(*transfer, clip);
  }
};

template <typename S>
SerModel<S> ser_model_from_checkpoint(const Checkpoint& ckpt) {
  SerModel<S> model;
  if (ckpt.kind() == "ser-baseline") {
    model.baseline = baseline_from_checkpoint<S>(ckpt);
  } else {
    model.transfer = transfer_from_checkpoint<S>(ckpt);
  }
  return model;
}

}  // namespace ettk

#endif  // ETTK_MODELS_HPP_
