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

#ifndef ETTK_OBJECTIVES_HPP_
#define ETTK_OBJECTIVES_HPP_

#include <limits>
#include <vector>

#include "ettk/ops.hpp"

namespace ettk {

// ---------------------------------------------------------------------------
// Connectionist Temporal Classification
// ---------------------------------------------------------------------------

/// Label sequence over a finite alphabet; the blank index is reserved for the
/// loss and never appears among the labels.
struct CtcTarget {
  std::vector<Index> labels;
  Index blank = 0;
};

/// Minimum number of frames that can emit the target (one per label plus a
/// separating blank between adjacent repeats).
inline Index ctc_min_frames(const CtcTarget& target) {
  Index n = static_cast<Index>(target.labels.size());
  for (std::size_t i = 1; i < target.labels.size(); ++i) {
    if (target.labels[i] == target.labels[i - 1]) ++n;
  }
  return n;
}

template <typename S>
struct CtcResult {
  bool feasible = false;
  double loss = std::numeric_limits<double>::infinity();
  Tensor<S> grad;  // d loss / d log_probs, [T x V]; zero when infeasible
};

namespace detail {

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace detail

/// -log P(target | log_probs) marginalized over all monotone alignments,
/// computed by the forward-backward recursion over the blank-extended label
/// sequence, entirely in log space. Also returns the gradient with respect to
/// the per-frame log-probabilities. An unattainable target (too few frames)
/// is reported as an infeasible outcome, never as NaN.
template <typename S>
CtcResult<S> ctc_loss(const Tensor<S>& log_probs, const CtcTarget& target) {
  using detail::kLogZero;
  using detail::log_add;
  if (log_probs.rank() != 2) {
    throw DimensionError("ctc_loss: log_probs must be [T x V], got " + shape_str(log_probs.shape()));
  }
  const Index frames = log_probs.extent(0);
  const Index vocab = log_probs.extent(1);
  if (target.blank < 0 || target.blank >= vocab) {
    throw ContractError("ctc_loss: blank index " + std::to_string(target.blank) +
                        " outside alphabet of size " + std::to_string(vocab));
  }
  for (Index lab : target.labels) {
    if (lab < 0 || lab >= vocab || lab == target.blank) {
      throw ContractError("ctc_loss: label " + std::to_string(lab) + " invalid for alphabet size " +
                          std::to_string(vocab) + " with blank " + std::to_string(target.blank));
    }
  }
  if (checked_mode()) {
    for (Index t = 0; t < frames; ++t) {
      double sum = 0.0;
      for (Index v = 0; v < vocab; ++v) sum += std::exp(static_cast<double>(log_probs.at(t, v)));
      if (std::abs(sum - 1.0) > 1e-3) {
        throw ContractError("ctc_loss: frame " + std::to_string(t) +
                            " probabilities sum to " + std::to_string(sum));
      }
    }
  }

  CtcResult<S> result;
  result.grad = Tensor<S>(log_probs.shape());
  if (frames < ctc_min_frames(target)) return result;  // infeasible

  const Index ext_len = 2 * static_cast<Index>(target.labels.size()) + 1;
  std::vector<Index> ext(static_cast<std::size_t>(ext_len), target.blank);
  for (std::size_t i = 0; i < target.labels.size(); ++i) ext[2 * i + 1] = target.labels[i];

  auto lp = [&](Index t, Index v) { return static_cast<double>(log_probs.at(t, v)); };

  std::vector<double> alpha(static_cast<std::size_t>(frames * ext_len), kLogZero);
  std::vector<double> beta(static_cast<std::size_t>(frames * ext_len), kLogZero);
  auto a = [&](Index t, Index s) -> double& { return alpha[static_cast<std::size_t>(t * ext_len + s)]; };
  auto b = [&](Index t, Index s) -> double& { return beta[static_cast<std::size_t>(t * ext_len + s)]; };

  a(0, 0) = lp(0, ext[0]);
  if (ext_len > 1) a(0, 1) = lp(0, ext[1]);
  for (Index t = 1; t < frames; ++t) {
    for (Index s = 0; s < ext_len; ++s) {
      double acc = a(t - 1, s);
      if (s >= 1) acc = log_add(acc, a(t - 1, s - 1));
      if (s >= 2 && ext[static_cast<std::size_t>(s)] != target.blank &&
          ext[static_cast<std::size_t>(s)] != ext[static_cast<std::size_t>(s - 2)]) {
        acc = log_add(acc, a(t - 1, s - 2));
      }
      a(t, s) = acc == kLogZero ? kLogZero : acc + lp(t, ext[static_cast<std::size_t>(s)]);
    }
  }
  double log_p = a(frames - 1, ext_len - 1);
  if (ext_len > 1) log_p = log_add(log_p, a(frames - 1, ext_len - 2));
  if (log_p == kLogZero) return result;  // infeasible

  b(frames - 1, ext_len - 1) = lp(frames - 1, ext[static_cast<std::size_t>(ext_len - 1)]);
  if (ext_len > 1) b(frames - 1, ext_len - 2) = lp(frames - 1, ext[static_cast<std::size_t>(ext_len - 2)]);
  for (Index t = frames - 2; t >= 0; --t) {
    for (Index s = 0; s < ext_len; ++s) {
      double acc = b(t + 1, s);
      if (s + 1 < ext_len) acc = log_add(acc, b(t + 1, s + 1));
      if (s + 2 < ext_len && ext[static_cast<std::size_t>(s + 2)] != target.blank &&
          ext[static_cast<std::size_t>(s + 2)] != ext[static_cast<std::size_t>(s)]) {
        acc = log_add(acc, b(t + 1, s + 2));
      }
      b(t, s) = acc == kLogZero ? kLogZero : acc + lp(t, ext[static_cast<std::size_t>(s)]);
    }
  }

  // d loss / d log y_(t,k) = -exp(lse_{s: ext[s]=k}(alpha+beta) - log y_(t,k) - log P);
  // alpha and beta both carry the frame emission, hence the -log y term.
  for (Index t = 0; t < frames; ++t) {
    std::vector<double> acc(static_cast<std::size_t>(vocab), kLogZero);
    for (Index s = 0; s < ext_len; ++s) {
      const Index k = ext[static_cast<std::size_t>(s)];
      const double ab = a(t, s) == kLogZero || b(t, s) == kLogZero ? kLogZero : a(t, s) + b(t, s);
      acc[static_cast<std::size_t>(k)] = log_add(acc[static_cast<std::size_t>(k)], ab);
    }
    for (Index k = 0; k < vocab; ++k) {
      if (acc[static_cast<std::size_t>(k)] == kLogZero) continue;
      result.grad.at(t, k) =
          static_cast<S>(-std::exp(acc[static_cast<std::size_t>(k)] - lp(t, k) - log_p));
    }
  }
  result.feasible = true;
  result.loss = -log_p;
  return result;
}

/// Tape node wrapping ctc_loss. Throws on infeasible targets; training data
/// is expected to be pre-filtered with ctc_min_frames.
template <typename S>
Var ctc_loss_op(Tape<S>& t, Var log_probs, const CtcTarget& target) {
  CtcResult<S> res = ctc_loss(t.value(log_probs), target);
  if (!res.feasible) {
    throw DomainError("ctc_loss: target of length " + std::to_string(target.labels.size()) +
                      " infeasible for " + std::to_string(t.value(log_probs).extent(0)) + " frames");
  }
  const bool rg = t.requires_grad(log_probs);
  Var o = t.emit(Tensor<S>::scalar(static_cast<S>(res.loss)), rg);
  if (rg) {
    auto grad = std::make_shared<Tensor<S>>(std::move(res.grad));
    t.record_node([log_probs, o, grad](Tape<S>& tp) {
      if (!tp.has_grad(o)) return;
      const S g = tp.grad(o).flat()[0];
      tp.grad(log_probs).flat() += g * grad->flat();
    });
  }
  return o;
}

// ---------------------------------------------------------------------------
// Cross-entropy
// ---------------------------------------------------------------------------

/// -log(dist[label]) on an explicit distribution.
template <typename S>
double cross_entropy(const Tensor<S>& dist, Index label) {
  if (dist.rank() != 1) throw DimensionError("cross_entropy: rank-1 distribution required");
  if (label < 0 || label >= dist.extent(0)) {
    throw ContractError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                        std::to_string(dist.extent(0)) + ")");
  }
  if (checked_mode()) {
    double sum = 0.0;
    for (Index i = 0; i < dist.size(); ++i) sum += static_cast<double>(dist[i]);
    if (std::abs(sum - 1.0) > 1e-4) {
      throw ContractError("cross_entropy: distribution sums to " + std::to_string(sum));
    }
  }
  return -std::log(static_cast<double>(dist[label]));
}

/// -log softmax(logits)[label], the numerically stable training path.
template <typename S>
Var cross_entropy_from_logits(Tape<S>& t, Var logits, Index label) {
  const auto& lv = t.value(logits);
  if (lv.rank() != 1) throw DimensionError("cross_entropy_from_logits: rank-1 logits required");
  if (label < 0 || label >= lv.extent(0)) {
    throw ContractError("cross_entropy_from_logits: label " + std::to_string(label) +
                        " outside [0, " + std::to_string(lv.extent(0)) + ")");
  }
  return scale(t, pick(t, log_softmax(t, logits), label), S(-1));
}

}  // namespace ettk

#endif  // ETTK_OBJECTIVES_HPP_
