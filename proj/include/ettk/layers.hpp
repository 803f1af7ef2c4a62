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

#ifndef ETTK_LAYERS_HPP_
#define ETTK_LAYERS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "ettk/ops.hpp"
#include "ettk/rng.hpp"

namespace ettk {

// ---------------------------------------------------------------------------
// Parameter containers
// ---------------------------------------------------------------------------

/// GRU cell parameters. Gate convention:
///   z = sigmoid(W_z x + U_z h + b_z)            (update)
///   r = sigmoid(W_r x + U_r h + b_r)            (reset)
///   n = tanh(W_n x + r .* (U_n h) + b_n)        (candidate)
///   h' = (1 - z) .* n + z .* h
template <typename S>
struct GruCell {
  Tensor<S> w_update, w_reset, w_cand;  // [H x D]
  Tensor<S> u_update, u_reset, u_cand;  // [H x H]
  Tensor<S> b_update, b_reset, b_cand;  // [H]

  GruCell() = default;
  GruCell(Index input_dim, Index hidden_dim)
      : w_update(Shape{hidden_dim, input_dim}),
        w_reset(Shape{hidden_dim, input_dim}),
        w_cand(Shape{hidden_dim, input_dim}),
        u_update(Shape{hidden_dim, hidden_dim}),
        u_reset(Shape{hidden_dim, hidden_dim}),
        u_cand(Shape{hidden_dim, hidden_dim}),
        b_update(Shape{hidden_dim}),
        b_reset(Shape{hidden_dim}),
        b_cand(Shape{hidden_dim}) {}

  Index hidden() const { return w_update.extent(0); }
  Index input() const { return w_update.extent(1); }

  /// uniform(-1/sqrt(H), 1/sqrt(H)) on every weight and bias.
  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden()));
    for (Tensor<S>* p : params()) {
      for (Index i = 0; i < p->size(); ++i) {
        p->flat()[i] = static_cast<S>(rng.uniform(-bound, bound));
      }
    }
  }

  std::vector<Tensor<S>*> params() {
    return {&w_update, &w_reset, &w_cand, &u_update, &u_reset, &u_cand,
            &b_update, &b_reset, &b_cand};
  }
  std::vector<const Tensor<S>*> params() const {
    return {&w_update, &w_reset, &w_cand, &u_update, &u_reset, &u_cand,
            &b_update, &b_reset, &b_cand};
  }
};

/// One bidirectional layer: independent forward and backward cells, outputs
/// concatenated per frame to width 2H.
template <typename S>
struct BiGru {
  GruCell<S> fwd, bwd;

  BiGru() = default;
  BiGru(Index input_dim, Index hidden_dim) : fwd(input_dim, hidden_dim), bwd(input_dim, hidden_dim) {}

  Index hidden() const { return fwd.hidden(); }
  Index input() const { return fwd.input(); }
  Index output_width() const { return 2 * hidden(); }

  void init(Rng& rng) {
    fwd.init(rng);
    bwd.init(rng);
  }

  std::vector<Tensor<S>*> params() {
    auto a = fwd.params();
    auto b = bwd.params();
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }
};

/// Padded batch of per-frame feature sequences. Only the first lengths[i]
/// rows of item i are meaningful; the pad region is all zeros and must never
/// leak into pooled outputs or losses.
template <typename S>
struct SequenceBatch {
  Tensor<S> features;           // [B x T x D]
  std::vector<Index> lengths;   // valid frames per item

  Index items() const { return features.rank() == 3 ? features.extent(0) : 0; }
  Index max_frames() const { return features.extent(1); }
  Index width() const { return features.extent(2); }

  /// Valid frames of one item as a [len x D] tensor.
  Tensor<S> item(Index b) const {
    const Index len = lengths[static_cast<std::size_t>(b)];
    const Index d = width();
    Tensor<S> out(Shape{len, d});
    for (Index t = 0; t < len; ++t) {
      for (Index j = 0; j < d; ++j) out.at(t, j) = features.at(b, t, j);
    }
    return out;
  }

  static SequenceBatch from_items(const std::vector<Tensor<S>>& items) {
    if (items.empty()) throw ContractError("SequenceBatch: no items");
    Index max_t = 0;
    const Index d = items[0].extent(1);
    for (const auto& it : items) {
      if (it.rank() != 2 || it.extent(1) != d) {
        throw DimensionError("SequenceBatch: inconsistent item shapes");
      }
      max_t = std::max(max_t, it.extent(0));
    }
    SequenceBatch out;
    out.features = Tensor<S>(Shape{static_cast<Index>(items.size()), max_t, d});
    for (Index b = 0; b < static_cast<Index>(items.size()); ++b) {
      const auto& it = items[static_cast<std::size_t>(b)];
      out.lengths.push_back(it.extent(0));
      for (Index t = 0; t < it.extent(0); ++t) {
        for (Index j = 0; j < d; ++j) out.features.at(b, t, j) = it.at(t, j);
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Tape-side cell and layer
// ---------------------------------------------------------------------------

/// Vars for a bound GRU cell. Bind once per tape, reuse for every step.
struct GruCellVars {
  Var w_update, w_reset, w_cand;
  Var u_update, u_reset, u_cand;
  Var b_update, b_reset, b_cand;
};

template <typename S>
GruCellVars bind_cell(Tape<S>& t, GruCell<S>& cell) {
  return GruCellVars{t.leaf(cell.w_update), t.leaf(cell.w_reset), t.leaf(cell.w_cand),
                     t.leaf(cell.u_update), t.leaf(cell.u_reset), t.leaf(cell.u_cand),
                     t.leaf(cell.b_update), t.leaf(cell.b_reset), t.leaf(cell.b_cand)};
}

template <typename S>
GruCellVars bind_cell_frozen(Tape<S>& t, const GruCell<S>& cell) {
  return GruCellVars{t.frozen(cell.w_update), t.frozen(cell.w_reset), t.frozen(cell.w_cand),
                     t.frozen(cell.u_update), t.frozen(cell.u_reset), t.frozen(cell.u_cand),
                     t.frozen(cell.b_update), t.frozen(cell.b_reset), t.frozen(cell.b_cand)};
}

/// One GRU step; x_t is [D], h_prev is [H], result is [H].
template <typename S>
Var gru_cell_step(Tape<S>& t, const GruCellVars& c, Var x_t, Var h_prev) {
  Var z = sigmoid(t, add(t, matvec(t, c.w_update, x_t), matvec(t, c.u_update, h_prev), c.b_update));
  Var r = sigmoid(t, add(t, matvec(t, c.w_reset, x_t), matvec(t, c.u_reset, h_prev), c.b_reset));
  Var n = tanh(t, add(t, matvec(t, c.w_cand, x_t), mul(t, r, matvec(t, c.u_cand, h_prev)), c.b_cand));
  return add(t, mul(t, one_minus(t, z), n), mul(t, z, h_prev));
}

struct BiGruVars {
  GruCellVars fwd, bwd;
};

template <typename S>
BiGruVars bind_bigru(Tape<S>& t, BiGru<S>& layer) {
  return BiGruVars{bind_cell(t, layer.fwd), bind_cell(t, layer.bwd)};
}

template <typename S>
BiGruVars bind_bigru_frozen(Tape<S>& t, const BiGru<S>& layer) {
  return BiGruVars{bind_cell_frozen(t, layer.fwd), bind_cell_frozen(t, layer.bwd)};
}

/// Bidirectional scan over one item's valid frames. x is [T x D] with no
/// padding; the forward direction scans rows 0..T-1, the backward direction
/// T-1..0, and per-frame outputs are concatenated to [T x 2H].
template <typename S>
Var bigru_item(Tape<S>& t, const BiGruVars& layer, Var x, Index hidden_dim) {
  const Index frames = t.value(x).extent(0);
  if (frames < 1) throw ContractError("bigru_item: zero-length sequence");
  Var h0 = t.constant(Tensor<S>(Shape{hidden_dim}));

  std::vector<Var> fwd_rows(static_cast<std::size_t>(frames));
  Var h = h0;
  for (Index i = 0; i < frames; ++i) {
    h = gru_cell_step(t, layer.fwd, row(t, x, i), h);
    fwd_rows[static_cast<std::size_t>(i)] = h;
  }
  std::vector<Var> bwd_rows(static_cast<std::size_t>(frames));
  h = h0;
  for (Index i = frames - 1; i >= 0; --i) {
    h = gru_cell_step(t, layer.bwd, row(t, x, i), h);
    bwd_rows[static_cast<std::size_t>(i)] = h;
  }
  return concat_cols(t, stack_rows(t, fwd_rows), stack_rows(t, bwd_rows));
}

// ---------------------------------------------------------------------------
// Tensor-side layer API (inference / tests)
// ---------------------------------------------------------------------------

/// Batched bidirectional GRU over padded sequences. Items are processed
/// independently over their valid frames, so an item's output is identical
/// whether it is alone or padded inside a larger batch; pad frames stay zero.
template <typename S>
SequenceBatch<S> bigru_forward(const BiGru<S>& layer, const SequenceBatch<S>& batch) {
  if (batch.width() != layer.input()) {
    throw DimensionError("bigru_forward: batch width " + std::to_string(batch.width()) +
                         " vs layer input " + std::to_string(layer.input()));
  }
  SequenceBatch<S> out;
  out.lengths = batch.lengths;
  out.features = Tensor<S>(Shape{batch.items(), batch.max_frames(), layer.output_width()});
  for (Index b = 0; b < batch.items(); ++b) {
    if (batch.lengths[static_cast<std::size_t>(b)] < 1) {
      throw ContractError("bigru_forward: zero-length item " + std::to_string(b));
    }
    Tape<S> tape;
    BiGruVars vars = bind_bigru_frozen(tape, layer);
    Var x = tape.constant(batch.item(b));
    Var y = bigru_item(tape, vars, x, layer.hidden());
    const Tensor<S>& yv = tape.value(y);
    for (Index t = 0; t < yv.extent(0); ++t) {
      for (Index j = 0; j < yv.extent(1); ++j) out.features.at(b, t, j) = yv.at(t, j);
    }
  }
  return out;
}

/// Per-item mean over valid frames only: [B x T x D] -> [B x D].
template <typename S>
Tensor<S> temporal_mean_pool(const SequenceBatch<S>& batch) {
  const Index b = batch.items(), d = batch.width();
  Tensor<S> out(Shape{b, d});
  for (Index i = 0; i < b; ++i) {
    const Index len = batch.lengths[static_cast<std::size_t>(i)];
    if (len < 1) throw ContractError("temporal_mean_pool: zero-length item " + std::to_string(i));
    for (Index t = 0; t < len; ++t) {
      for (Index j = 0; j < d; ++j) out.at(i, j) += batch.features.at(i, t, j);
    }
    for (Index j = 0; j < d; ++j) out.at(i, j) /= static_cast<S>(len);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

enum class Mode { kTrain, kEval };

/// Inverted dropout: zero entries with probability rate and scale survivors
/// by 1/(1-rate) in train mode; identity in eval mode.
template <typename S>
Var dropout(Tape<S>& t, Var x, double rate, Mode mode, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ContractError("dropout: rate " + std::to_string(rate) + " outside [0, 1)");
  }
  if (mode == Mode::kEval || rate == 0.0) return x;
  const auto& xv = t.value(x);
  Tensor<S> mask(xv.shape());
  const S keep_scale = static_cast<S>(1.0 / (1.0 - rate));
  for (Index i = 0; i < mask.size(); ++i) {
    mask[i] = rng.bernoulli(rate) ? S(0) : keep_scale;
  }
  return mul(t, x, t.constant(std::move(mask)));
}

/// Tensor-side dropout (same semantics, no tape).
template <typename S>
Tensor<S> dropout(const Tensor<S>& x, double rate, Mode mode, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ContractError("dropout: rate " + std::to_string(rate) + " outside [0, 1)");
  }
  Tensor<S> out = x.clone();
  if (mode == Mode::kEval || rate == 0.0) return out;
  const S keep_scale = static_cast<S>(1.0 / (1.0 - rate));
  for (Index i = 0; i < out.size(); ++i) {
    out[i] = rng.bernoulli(rate) ? S(0) : out[i] * keep_scale;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear classifier head
// ---------------------------------------------------------------------------

template <typename S>
struct Linear {
  Tensor<S> weight;  // [K x D]
  Tensor<S> bias;    // [K]

  Linear() = default;
  Linear(Index input_dim, Index classes)
      : weight(Shape{classes, input_dim}), bias(Shape{classes}) {}

  Index classes() const { return weight.extent(0); }
  Index input() const { return weight.extent(1); }

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(input()));
    for (Index i = 0; i < weight.size(); ++i) weight.flat()[i] = static_cast<S>(rng.uniform(-bound, bound));
    for (Index i = 0; i < bias.size(); ++i) bias.flat()[i] = static_cast<S>(rng.uniform(-bound, bound));
  }

  std::vector<Tensor<S>*> params() { return {&weight, &bias}; }
};

struct LinearVars {
  Var weight, bias;
};

template <typename S>
LinearVars bind_linear(Tape<S>& t, Linear<S>& lin) {
  return LinearVars{t.leaf(lin.weight), t.leaf(lin.bias)};
}

/// W x + b.
template <typename S>
Var linear_forward(Tape<S>& t, const LinearVars& lin, Var x) {
  return add(t, matvec(t, lin.weight, x), lin.bias);
}

/// softmax(W x + b): a class distribution over K classes.
template <typename S>
Var classifier_forward(Tape<S>& t, const LinearVars& lin, Var x) {
  return softmax(t, linear_forward(t, lin, x));
}

/// Tensor-side classifier for direct evaluation.
template <typename S>
Tensor<S> classifier_forward(const Tensor<S>& weight, const Tensor<S>& bias, const Tensor<S>& x) {
  Tape<S> tape;
  LinearVars lin{tape.frozen(weight), tape.frozen(bias)};
  Var out = classifier_forward(tape, lin, tape.frozen(x));
  return tape.value(out).clone();
}

}  // namespace ettk

#endif  // ETTK_LAYERS_HPP_
