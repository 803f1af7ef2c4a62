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
#include "ettk/objectives.hpp"
#include "ettk/optim.hpp"
#include "oracles.hpp"

using namespace ettk;

namespace {

/// Random per-frame log-distributions over `vocab` symbols.
Tensor<double> random_log_probs(Index frames, Index vocab, Rng& rng) {
  Tensor<double> lp(Shape{frames, vocab});
  for (Index t = 0; t < frames; ++t) {
    double sum = 0.0;
    for (Index v = 0; v < vocab; ++v) {
      lp.at(t, v) = rng.uniform(0.05, 1.0);
      sum += lp.at(t, v);
    }
    for (Index v = 0; v < vocab; ++v) lp.at(t, v) = std::log(lp.at(t, v) / sum);
  }
  return lp;
}

}  // namespace

TEST_CASE("ctc single-frame single-path loss") {
  Tensor<double> lp(Shape{1, 2}, {std::log(0.5), std::log(0.5)});
  CtcTarget target{{1}, 0};
  auto res = ctc_loss(lp, target);
  CHECK(res.feasible);
  CHECK(res.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("ctc two-frame uniform: three valid paths") {
  const double l = std::log(0.5);
  Tensor<double> lp(Shape{2, 2}, {l, l, l, l});
  CtcTarget target{{1}, 0};
  auto res = ctc_loss(lp, target);
  CHECK(res.feasible);
  CHECK(res.loss == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("ctc infeasible target reported distinctly, not NaN") {
  Tensor<double> lp(Shape{1, 2}, {std::log(0.5), std::log(0.5)});
  CtcTarget target{{1, 1}, 0};  // "aa" needs >= 3 frames
  CHECK(ctc_min_frames(target) == 3);
  auto res = ctc_loss(lp, target);
  CHECK_FALSE(res.feasible);
  CHECK(std::isinf(res.loss));
  CHECK_FALSE(std::isnan(res.loss));
}

TEST_CASE("ctc matches brute-force path enumeration") {
  Rng rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    const Index frames = 1 + static_cast<Index>(rng.uniform_index(4));  // T <= 4 here
    const Index vocab = 2 + static_cast<Index>(rng.uniform_index(3));
    const Index target_len = static_cast<Index>(rng.uniform_index(4));
    CtcTarget target;
    target.blank = 0;
    for (Index i = 0; i < target_len; ++i) {
      target.labels.push_back(1 + static_cast<Index>(rng.uniform_index(vocab - 1)));
    }
    Tensor<double> lp = random_log_probs(frames, vocab, rng);
    auto res = ctc_loss(lp, target);
    const double brute = ettk_oracles::ctc_path_sum(lp, target.labels, target.blank);
    if (!res.feasible) {
      CHECK(brute == 0.0);
    } else {
      CHECK(res.loss == doctest::Approx(-std::log(brute)).epsilon(1e-10));
      CHECK(std::exp(-res.loss) > 0.0);
      CHECK(std::exp(-res.loss) <= 1.0);
    }
  }
}

TEST_CASE("ctc gradient passes finite differences") {
  Rng rng(202);
  for (int trial = 0; trial < 10; ++trial) {
    const Index frames = 4;
    const Index vocab = 3;
    CtcTarget target{{1, 2}, 0};
    std::vector<Tensor<double>> inputs{
        Tensor<double>::random_uniform(Shape{frames, vocab}, -1.0, 1.0, rng)};
    const double err = grad_check<double>(
        [&target](Tape<double>& t, const std::vector<Var>& v) {
          return ctc_loss_op(t, log_softmax(t, v[0]), target);
        },
        inputs, 1e-6);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("ctc rejects blank in labels and bad alphabet") {
  Tensor<double> lp(Shape{2, 2}, {std::log(0.5), std::log(0.5), std::log(0.5), std::log(0.5)});
  CHECK_THROWS_AS(ctc_loss(lp, CtcTarget{{0}, 0}), ContractError);
  CHECK_THROWS_AS(ctc_loss(lp, CtcTarget{{5}, 0}), ContractError);
}

TEST_CASE("cross entropy values") {
  Tensor<double> onehot(Shape{4}, {0.0, 1.0, 0.0, 0.0});
  CHECK(cross_entropy(onehot, 1) == doctest::Approx(0.0));
  Tensor<double> uniform = Tensor<double>::full(Shape{4}, 0.25);
  CHECK(cross_entropy(uniform, 2) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
  Tensor<double> biased(Shape{2}, {0.7, 0.3});
  CHECK(cross_entropy(biased, 1) == doctest::Approx(1.2040).epsilon(1e-4));
  CHECK_THROWS_AS(cross_entropy(biased, 2), ContractError);
}

TEST_CASE("adam: zero grad no-op, first-step magnitude, scalar oracle") {
  Tensor<double> theta = Tensor<double>::scalar(1.0);
  Adam<double> opt({&theta}, 1e-4);
  theta.grad().setZero();
  opt.step();
  CHECK(theta[0] == doctest::Approx(1.0));

  // First step with g=0.1: update ~ -lr * g/sqrt(g^2) = -1e-4.
  Tensor<double> p = Tensor<double>::scalar(0.5);
  Adam<double> opt2({&p}, 1e-4);
  p.grad().setConstant(0.1);
  opt2.step();
  CHECK(p[0] == doctest::Approx(0.5 - 1e-4).epsilon(1e-6));

  // Two steps with constant gradient vs scalar reference, 64-bit.
  Tensor<double> q = Tensor<double>::scalar(-0.3);
  Adam<double> opt3({&q}, 3e-3);
  ettk_oracles::ScalarAdam ref;
  double ref_theta = -0.3;
  for (int step = 0; step < 2; ++step) {
    q.zero_grad();
    q.grad().setConstant(0.7);
    opt3.step();
    ref_theta = ref.step(ref_theta, 0.7, 3e-3);
  }
  CHECK(q[0] == doctest::Approx(ref_theta).epsilon(1e-10));
}

TEST_CASE("adam rejects non-finite gradients and honors lr=0") {
  Tensor<double> theta = Tensor<double>::scalar(1.0);
  Adam<double> opt({&theta}, 1e-4);
  theta.grad().setConstant(std::nan(""));
  CHECK_THROWS_AS(opt.step(), DomainError);

  Tensor<double> p(Shape{3}, {1.0, -2.0, 0.5});
  Adam<double> opt0({&p}, 0.0);
  Rng rng(3);
  for (int step = 0; step < 5; ++step) {
    p.zero_grad();
    for (Index i = 0; i < 3; ++i) p.grad()[i] = rng.uniform(-4.0, 4.0);
    opt0.step();
  }
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(-2.0));
  CHECK(p[2] == doctest::Approx(0.5));
}

TEST_CASE("clip_grad_norm: below threshold untouched, above scaled, idempotent") {
  Tensor<double> a(Shape{2}, {0.0, 0.0});
  a.grad()[0] = 6.0;
  a.grad()[1] = 8.0;  // norm 10
  auto res = clip_grad_norm<double>({&a}, 15.0);
  CHECK_FALSE(res.clipped);
  CHECK(res.norm == doctest::Approx(10.0));
  CHECK(a.grad()[0] == doctest::Approx(6.0));

  Tensor<double> b(Shape{2}, {0.0, 0.0});
  b.grad()[0] = 18.0;
  b.grad()[1] = 24.0;  // norm 30
  auto res2 = clip_grad_norm<double>({&b}, 15.0);
  CHECK(res2.clipped);
  CHECK(b.grad()[0] == doctest::Approx(9.0));
  CHECK(b.grad()[1] == doctest::Approx(12.0));
  auto res3 = clip_grad_norm<double>({&b}, 15.0);
  CHECK_FALSE(res3.clipped);
  CHECK(b.grad()[0] == doctest::Approx(9.0));

  Tensor<double> c(Shape{4});
  c.grad().setZero();
  auto res4 = clip_grad_norm<double>({&c}, 15.0);
  CHECK_FALSE(res4.clipped);
  CHECK(res4.norm == doctest::Approx(0.0));
}

TEST_CASE("plateau schedule: improvement, anneal trace, floor stop") {
  {
    PlateauSchedule sched(1e-4);
    auto u1 = sched.observe(1.0);
    auto u2 = sched.observe(0.9);
    auto u3 = sched.observe(0.8);
    CHECK(u1.lr == doctest::Approx(1e-4));
    CHECK(u3.lr == doctest::Approx(1e-4));
    CHECK_FALSE(u3.stop);
    CHECK_FALSE(u3.annealed);
  }
  {
    PlateauSchedule sched(1e-4);
    sched.observe(1.0);
    auto u2 = sched.observe(1.1);
    CHECK_FALSE(u2.annealed);
    auto u3 = sched.observe(1.2);
    CHECK(u3.annealed);
    CHECK(u3.lr == doctest::Approx(5e-5));
    CHECK_FALSE(u3.stop);
  }
  {
    PlateauSchedule sched(2e-6, 2, 0.5, 1e-6);
    sched.observe(1.0);
    sched.observe(1.1);
    auto u = sched.observe(1.2);
    CHECK(u.annealed);
    CHECK(u.lr == doctest::Approx(1e-6));
    CHECK(u.stop);
  }
}

TEST_CASE("plateau lr sequence is non-increasing") {
  Rng rng(77);
  PlateauSchedule sched(1e-4);
  double prev = sched.lr();
  for (int epoch = 0; epoch < 60; ++epoch) {
    auto u = sched.observe(rng.uniform(0.5, 1.5));
    CHECK(u.lr <= prev);
    CHECK(u.lr >= 1e-6);
    prev = u.lr;
  }
}

TEST_CASE("sgd epoch decay schedule") {
  CHECK(sgd_epoch_decay(0) == doctest::Approx(3e-4));
  CHECK(sgd_epoch_decay(1) == doctest::Approx(2.727e-4).epsilon(1e-3));
  CHECK(sgd_epoch_decay(35) == doctest::Approx(1.066e-5).epsilon(1e-3));
  CHECK_THROWS_AS(sgd_epoch_decay(-1), ContractError);
}
