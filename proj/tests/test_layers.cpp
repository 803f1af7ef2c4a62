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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ettk/grad_check.hpp"
#include "ettk/layers.hpp"
#include "ettk/objectives.hpp"
#include "oracles.hpp"

using namespace ettk;

namespace {

GruCell<double> random_cell(Index input_dim, Index hidden_dim, Rng& rng) {
  GruCell<double> cell(input_dim, hidden_dim);
  cell.init(rng);
  return cell;
}

Tensor<double> random_seq(Index frames, Index dim, Rng& rng) {
  return Tensor<double>::random_uniform(Shape{frames, dim}, -1.0, 1.0, rng);
}

}  // namespace

TEST_CASE("gru cell: zero parameters halve the hidden state") {
  // z = sigmoid(0) = 0.5, n = tanh(0) = 0, so h' = 0.5 h.
  GruCell<double> cell(2, 3);
  Tape<double> t;
  GruCellVars vars = bind_cell(t, cell);
  Var x = t.constant(Tensor<double>(Shape{2}, {0.3, -0.7}));
  Var h = t.constant(Tensor<double>(Shape{3}, {1.0, -2.0, 0.5}));
  Var out = gru_cell_step(t, vars, x, h);
  CHECK(t.value(out)[0] == doctest::Approx(0.5));
  CHECK(t.value(out)[1] == doctest::Approx(-1.0));
  CHECK(t.value(out)[2] == doctest::Approx(0.25));

  Var h0 = t.constant(Tensor<double>(Shape{3}));
  Var fixed = gru_cell_step(t, vars, x, h0);
  for (Index i = 0; i < 3; ++i) CHECK(t.value(fixed)[i] == doctest::Approx(0.0));
}

TEST_CASE("gru cell matches the scalar-loop oracle over 1000 draws") {
  Rng rng(303);
  for (int draw = 0; draw < 1000; ++draw) {
    GruCell<double> cell = random_cell(2, 3, rng);
    std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    std::vector<double> h{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};

    Tape<double> t;
    GruCellVars vars = bind_cell(t, cell);
    Var vx = t.constant(Tensor<double>(Shape{2}, {x[0], x[1]}));
    Var vh = t.constant(Tensor<double>(Shape{3}, {h[0], h[1], h[2]}));
    Var out = gru_cell_step(t, vars, vx, vh);

    const auto ref = ettk_oracles::gru_step_scalar(cell, x, h);
    for (Index i = 0; i < 3; ++i) {
      CHECK(t.value(out)[i] == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-6));
    }
  }
}

TEST_CASE("gru cell shape mismatch raises a dimension error") {
  GruCell<double> cell(2, 3);
  Tape<double> t;
  GruCellVars vars = bind_cell(t, cell);
  Var bad = t.constant(Tensor<double>(Shape{5}));
  Var h = t.constant(Tensor<double>(Shape{3}));
  CHECK_THROWS_AS(gru_cell_step(t, vars, bad, h), DimensionError);
}

TEST_CASE("gru cell gradient passes finite differences") {
  Rng rng(7);
  for (int seed = 0; seed < 10; ++seed) {
    std::vector<Tensor<double>> inputs;
    const Index d = 3, hd = 4;
    for (int i = 0; i < 3; ++i) inputs.push_back(random_seq(hd, d, rng));        // W
    for (int i = 0; i < 3; ++i) inputs.push_back(random_seq(hd, hd, rng));       // U
    for (int i = 0; i < 3; ++i) inputs.push_back(Tensor<double>::random_uniform(Shape{hd}, -1, 1, rng));
    inputs.push_back(Tensor<double>::random_uniform(Shape{d}, -1, 1, rng));      // x
    inputs.push_back(Tensor<double>::random_uniform(Shape{hd}, -1, 1, rng));     // h
    const double err = grad_check<double>(
        [](Tape<double>& t, const std::vector<Var>& v) {
          GruCellVars c{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]};
          Var h = gru_cell_step(t, c, v[9], v[10]);
          return pick(t, h, 0);
        },
        inputs, 1e-5);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("bigru: single frame uses the same frame in both directions") {
  Rng rng(17);
  BiGru<double> layer(3, 2);
  layer.init(rng);
  SequenceBatch<double> batch = SequenceBatch<double>::from_items({random_seq(1, 3, rng)});
  auto out = bigru_forward(layer, batch);
  CHECK(out.width() == 4);
  CHECK(out.max_frames() == 1);

  // Each half equals one cell step from h0 = 0 on the single frame.
  Tape<double> t;
  auto fv = bind_cell_frozen(t, layer.fwd);
  auto bv = bind_cell_frozen(t, layer.bwd);
  Var x = t.constant(batch.item(0));
  Var x0 = row(t, x, 0);
  Var h0 = t.constant(Tensor<double>(Shape{2}));
  Var hf = gru_cell_step(t, fv, x0, h0);
  Var hb = gru_cell_step(t, bv, x0, h0);
  for (Index j = 0; j < 2; ++j) {
    CHECK(out.features.at(0, 0, j) == t.value(hf)[j]);
    CHECK(out.features.at(0, 0, 2 + j) == t.value(hb)[j]);
  }
}

TEST_CASE("bigru: time reversal with swapped cells mirrors the output") {
  Rng rng(19);
  BiGru<double> layer(2, 3);
  layer.init(rng);
  BiGru<double> swapped(2, 3);
  swapped.fwd = layer.bwd;
  swapped.bwd = layer.fwd;

  const Index frames = 5;
  Tensor<double> x = random_seq(frames, 2, rng);
  Tensor<double> xrev(Shape{frames, 2});
  for (Index t = 0; t < frames; ++t) {
    for (Index j = 0; j < 2; ++j) xrev.at(t, j) = x.at(frames - 1 - t, j);
  }
  auto out = bigru_forward(layer, SequenceBatch<double>::from_items({x}));
  auto out_rev = bigru_forward(swapped, SequenceBatch<double>::from_items({xrev}));
  for (Index t = 0; t < frames; ++t) {
    for (Index j = 0; j < 3; ++j) {
      CHECK(out_rev.features.at(0, t, j) == out.features.at(0, frames - 1 - t, 3 + j));
      CHECK(out_rev.features.at(0, t, 3 + j) == out.features.at(0, frames - 1 - t, j));
    }
  }
}

TEST_CASE("bigru: two-frame output equals manual cell chains") {
  Rng rng(23);
  BiGru<double> layer(2, 3);
  layer.init(rng);
  Tensor<double> x = random_seq(2, 2, rng);
  auto out = bigru_forward(layer, SequenceBatch<double>::from_items({x}));

  Tape<double> t;
  auto fv = bind_cell_frozen(t, layer.fwd);
  auto bv = bind_cell_frozen(t, layer.bwd);
  Var vx = t.constant(x);
  Var h0 = t.constant(Tensor<double>(Shape{3}));
  Var f1 = gru_cell_step(t, fv, row(t, vx, 0), h0);
  Var f2 = gru_cell_step(t, fv, row(t, vx, 1), f1);
  Var b2 = gru_cell_step(t, bv, row(t, vx, 1), h0);
  Var b1 = gru_cell_step(t, bv, row(t, vx, 0), b2);
  for (Index j = 0; j < 3; ++j) {
    CHECK(out.features.at(0, 0, j) == doctest::Approx(t.value(f1)[j]).epsilon(1e-12));
    CHECK(out.features.at(0, 1, j) == doctest::Approx(t.value(f2)[j]).epsilon(1e-12));
    CHECK(out.features.at(0, 0, 3 + j) == doctest::Approx(t.value(b1)[j]).epsilon(1e-12));
    CHECK(out.features.at(0, 1, 3 + j) == doctest::Approx(t.value(b2)[j]).epsilon(1e-12));
  }
}

TEST_CASE("bigru: padding isolation is bit-exact") {
  Rng rng(29);
  BiGru<double> layer(3, 4);
  layer.init(rng);
  Tensor<double> shorter = random_seq(3, 3, rng);
  Tensor<double> longer = random_seq(9, 3, rng);

  auto alone = bigru_forward(layer, SequenceBatch<double>::from_items({shorter}));
  auto padded = bigru_forward(layer, SequenceBatch<double>::from_items({shorter, longer}));
  for (Index t = 0; t < 3; ++t) {
    for (Index j = 0; j < 8; ++j) {
      CHECK(padded.features.at(0, t, j) == alone.features.at(0, t, j));
    }
  }
  // Pad frames of the short item stay exactly zero.
  for (Index t = 3; t < 9; ++t) {
    for (Index j = 0; j < 8; ++j) CHECK(padded.features.at(0, t, j) == 0.0);
  }
}

TEST_CASE("bigru rejects zero-length items and width mismatches") {
  Rng rng(31);
  BiGru<double> layer(3, 4);
  layer.init(rng);
  SequenceBatch<double> batch = SequenceBatch<double>::from_items({random_seq(2, 3, rng)});
  batch.lengths[0] = 0;
  CHECK_THROWS_AS(bigru_forward(layer, batch), ContractError);
  SequenceBatch<double> wrong = SequenceBatch<double>::from_items({random_seq(2, 5, rng)});
  CHECK_THROWS_AS(bigru_forward(layer, wrong), DimensionError);
}

TEST_CASE("bigru gradient passes finite differences") {
  Rng rng(37);
  std::vector<Tensor<double>> inputs;
  const Index d = 2, hd = 2, frames = 3;
  for (int cellidx = 0; cellidx < 2; ++cellidx) {
    for (int i = 0; i < 3; ++i) inputs.push_back(random_seq(hd, d, rng));
    for (int i = 0; i < 3; ++i) inputs.push_back(random_seq(hd, hd, rng));
    for (int i = 0; i < 3; ++i) inputs.push_back(Tensor<double>::random_uniform(Shape{hd}, -1, 1, rng));
  }
  inputs.push_back(random_seq(frames, d, rng));
  const double err = grad_check<double>(
      [hd](Tape<double>& t, const std::vector<Var>& v) {
        BiGruVars layer{{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]},
                        {v[9], v[10], v[11], v[12], v[13], v[14], v[15], v[16], v[17]}};
        Var y = bigru_item(t, layer, v[18], hd);
        Var pooled = mean_rows(t, y, 3);
        return pick(t, tanh(t, pooled), 1);
      },
      inputs, 1e-5);
  CHECK(err < 1e-6);
}

TEST_CASE("temporal mean pool: constants, arithmetic, mask correctness") {
  // Constant sequence pools to the constant.
  Tensor<double> constant(Shape{4, 2});
  for (Index t = 0; t < 4; ++t) {
    constant.at(t, 0) = 3.25;
    constant.at(t, 1) = -1.5;
  }
  SequenceBatch<double> batch = SequenceBatch<double>::from_items({constant});
  Tensor<double> pooled = temporal_mean_pool(batch);
  CHECK(pooled.at(0, 0) == doctest::Approx(3.25));
  CHECK(pooled.at(0, 1) == doctest::Approx(-1.5));

  // Frames [1,2],[3,4] -> [2,3].
  SequenceBatch<double> two =
      SequenceBatch<double>::from_items({Tensor<double>(Shape{2, 2}, {1, 2, 3, 4})});
  Tensor<double> mean = temporal_mean_pool(two);
  CHECK(mean.at(0, 0) == doctest::Approx(2.0));
  CHECK(mean.at(0, 1) == doctest::Approx(3.0));

  // Length 1 padded to T=5: equals frame 1 exactly.
  SequenceBatch<double> padded;
  padded.features = Tensor<double>(Shape{1, 5, 2});
  padded.features.at(0, 0, 0) = 7.0;
  padded.features.at(0, 0, 1) = -2.0;
  padded.lengths = {1};
  Tensor<double> only = temporal_mean_pool(padded);
  CHECK(only.at(0, 0) == 7.0);
  CHECK(only.at(0, 1) == -2.0);
}

TEST_CASE("mean pool gradient distributes 1/len over valid frames") {
  Rng rng(41);
  std::vector<Tensor<double>> inputs{random_seq(4, 3, rng)};
  const double err = grad_check<double>(
      [](Tape<double>& t, const std::vector<Var>& v) {
        Var pooled = mean_rows(t, v[0], 3);  // only first 3 of 4 rows
        return pick(t, pooled, 2);
      },
      inputs, 1e-5);
  CHECK(err < 1e-6);

  // Direct check of the scatter: rows beyond len receive no gradient.
  Tensor<double> x = random_seq(4, 2, rng);
  x.set_requires_grad(true);
  Tape<double> t;
  Var vx = t.leaf(x);
  Var pooled = mean_rows(t, vx, 3);
  t.backward(pick(t, pooled, 0));
  CHECK(t.grad(vx).at(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(t.grad(vx).at(2, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(t.grad(vx).at(3, 0) == 0.0);
}

TEST_CASE("dropout: identity cases and Monte-Carlo statistics") {
  Rng rng(43);
  Tensor<double> ones = Tensor<double>::full(Shape{1000000}, 1.0);

  Tensor<double> same = dropout(ones, 0.0, Mode::kTrain, rng);
  for (Index i = 0; i < 100; ++i) CHECK(same[i] == 1.0);
  Tensor<double> eval = dropout(ones, 0.25, Mode::kEval, rng);
  for (Index i = 0; i < 100; ++i) CHECK(eval[i] == 1.0);
  CHECK_THROWS_AS(dropout(ones, 1.0, Mode::kTrain, rng), ContractError);

  Tensor<double> dropped = dropout(ones, 0.25, Mode::kTrain, rng);
  double sum = 0.0;
  Index zeros = 0;
  for (Index i = 0; i < dropped.size(); ++i) {
    sum += dropped[i];
    if (dropped[i] == 0.0) ++zeros;
  }
  const double mean = sum / static_cast<double>(dropped.size());
  const double zero_frac = static_cast<double>(zeros) / static_cast<double>(dropped.size());
  CHECK(std::abs(mean - 1.0) < 0.01);
  CHECK(std::abs(zero_frac - 0.25) < 0.01);
  // Inverted-dropout expectation at 3 sigma: var = p/(1-p) = 1/3 per entry.
  CHECK(std::abs(mean - 1.0) < 3.0 * std::sqrt((1.0 / 3.0) / 1e6));
}

TEST_CASE("classifier head: uniform logits, closed-form bias, monotonicity") {
  Tensor<double> w0(Shape{4, 3});
  Tensor<double> b0(Shape{4});
  Tensor<double> x(Shape{3}, {0.4, -0.2, 1.0});
  Tensor<double> uniform = classifier_forward(w0, b0, x);
  for (Index k = 0; k < 4; ++k) CHECK(uniform[k] == doctest::Approx(0.25));

  Tensor<double> w2(Shape{2, 3});
  Tensor<double> b2(Shape{2}, {std::log(3.0), 0.0});
  Tensor<double> biased = classifier_forward(w2, b2, x);
  CHECK(biased[0] == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(biased[1] == doctest::Approx(0.25).epsilon(1e-9));

  Rng rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    Linear<double> lin(5, 4);
    lin.init(rng);
    Tensor<double> input = Tensor<double>::random_uniform(Shape{5}, -2, 2, rng);
    Tape<double> t;
    LinearVars lv{t.frozen(lin.weight), t.frozen(lin.bias)};
    Var in = t.frozen(input);
    Var logits = linear_forward(t, lv, in);
    Var dist = softmax(t, logits);
    Index argmax_logit = 0, argmax_dist = 0;
    for (Index k = 1; k < 4; ++k) {
      if (t.value(logits)[k] > t.value(logits)[argmax_logit]) argmax_logit = k;
      if (t.value(dist)[k] > t.value(dist)[argmax_dist]) argmax_dist = k;
    }
    CHECK(argmax_logit == argmax_dist);
    double total = 0.0;
    for (Index k = 0; k < 4; ++k) total += t.value(dist)[k];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("classifier gradient passes finite differences") {
  Rng rng(53);
  std::vector<Tensor<double>> inputs{random_seq(4, 3, rng),
                                     Tensor<double>::random_uniform(Shape{4}, -1, 1, rng),
                                     Tensor<double>::random_uniform(Shape{3}, -1, 1, rng)};
  const double err = grad_check<double>(
      [](Tape<double>& t, const std::vector<Var>& v) {
        LinearVars lin{v[0], v[1]};
        Var logits = linear_forward(t, lin, v[2]);
        return cross_entropy_from_logits(t, logits, 1);
      },
      inputs, 1e-5);
  CHECK(err < 1e-6);
}
