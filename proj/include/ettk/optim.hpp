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

#ifndef ETTK_OPTIM_HPP_
#define ETTK_OPTIM_HPP_

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ettk/tensor.hpp"

namespace ettk {

/// Adam with bias correction (Kingma defaults beta1=0.9, beta2=0.999,
/// eps=1e-8). Parameters without a populated gradient are treated as
/// zero-gradient and left unchanged.
template <typename S>
class Adam {
 public:
  Adam(std::vector<Tensor<S>*> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Tensor<S>* p : params_) {
      m_.emplace_back(Tensor<S>::Storage::Zero(p->size()));
      v_.emplace_back(Tensor<S>::Storage::Zero(p->size()));
    }
  }

  /// One update from the parameters' grad buffers. A non-finite gradient
  /// rejects the whole step before any state is touched.
  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (!params_[i]->has_grad()) continue;
      const auto& g = params_[i]->grad();
      for (Index j = 0; j < g.size(); ++j) {
        if (!std::isfinite(static_cast<double>(g[j]))) {
          throw DomainError("adam_step: non-finite gradient in parameter " + std::to_string(i) +
                            " entry " + std::to_string(j) + "; step rejected");
        }
      }
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (!params_[i]->has_grad()) continue;
      const auto& g = params_[i]->grad();
      auto& m = m_[i];
      auto& v = v_[i];
      m = static_cast<S>(beta1_) * m + static_cast<S>(1.0 - beta1_) * g;
      v = static_cast<S>(beta2_) * v + static_cast<S>(1.0 - beta2_) * g * g;
      auto& theta = params_[i]->flat();
      theta -= ((m / static_cast<S>(bc1)) /
                ((v / static_cast<S>(bc2)).sqrt() + static_cast<S>(eps_)))
                   .eval() *
               static_cast<S>(lr_);
    }
  }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  Index step_count() const { return step_; }

 private:
  std::vector<Tensor<S>*> params_;
  std::vector<typename Tensor<S>::Storage> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  Index step_ = 0;
};

/// Plain SGD; the ASR recipe pairs it with sgd_epoch_decay.
template <typename S>
class Sgd {
 public:
  Sgd(std::vector<Tensor<S>*> params, double lr) : params_(std::move(params)), lr_(lr) {}

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (!params_[i]->has_grad()) continue;
      const auto& g = params_[i]->grad();
      for (Index j = 0; j < g.size(); ++j) {
        if (!std::isfinite(static_cast<double>(g[j]))) {
          throw DomainError("sgd_step: non-finite gradient in parameter " + std::to_string(i) +
                            "; step rejected");
        }
      }
    }
    for (Tensor<S>* p : params_) {
      if (!p->has_grad()) continue;
      p->flat() -= static_cast<S>(lr_) * p->grad();
    }
  }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  std::vector<Tensor<S>*> params_;
  double lr_;
};

struct ClipResult {
  double norm = 0.0;  // global L2 norm before clipping
  bool clipped = false;
};

/// Scale all gradients by max_norm/norm when the global L2 norm exceeds
/// max_norm. Idempotent.
template <typename S>
ClipResult clip_grad_norm(const std::vector<Tensor<S>*>& params, double max_norm) {
  if (max_norm <= 0.0) throw ContractError("clip_grad_norm: max_norm must be positive");
  double sq = 0.0;
  for (Tensor<S>* p : params) {
    if (!p->has_grad()) continue;
    sq += static_cast<double>(p->grad().template cast<double>().square().sum());
  }
  ClipResult res;
  res.norm = std::sqrt(sq);
  if (res.norm > max_norm) {
    const S factor = static_cast<S>(max_norm / res.norm);
    for (Tensor<S>* p : params) {
      if (p->has_grad()) p->grad() *= factor;
    }
    res.clipped = true;
  }
  return res;
}

/// Validation-loss plateau annealing: after `patience` consecutive
/// non-improving epochs the rate is multiplied by `decay`; training stops
/// once the rate reaches the floor.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, Index patience = 2, double decay = 0.5, double floor = 1e-6)
      : lr_(lr), patience_(patience), decay_(decay), floor_(floor) {
    if (patience_ < 1) throw ContractError("PlateauSchedule: patience must be >= 1");
    if (lr_ < floor_) throw ContractError("PlateauSchedule: lr below floor");
    if (decay_ <= 0.0 || decay_ >= 1.0) throw ContractError("PlateauSchedule: decay must be in (0,1)");
  }

  struct Update {
    double lr = 0.0;
    bool stop = false;
    bool annealed = false;
  };

  /// Observe one epoch's validation loss. Any decrease counts as improvement.
  Update observe(double val_loss) {
    if (!std::isfinite(val_loss)) throw ContractError("plateau_update: non-finite validation loss");
    Update u;
    if (val_loss < best_) {
      best_ = val_loss;
      bad_epochs_ = 0;
    } else {
      ++bad_epochs_;
      if (bad_epochs_ >= patience_) {
        lr_ = std::max(lr_ * decay_, floor_);
        bad_epochs_ = 0;
        u.annealed = true;
        if (lr_ <= floor_) u.stop = true;
      }
    }
    u.lr = lr_;
    return u;
  }

  double lr() const { return lr_; }
  double best() const { return best_; }

 private:
  double lr_;
  Index patience_;
  double decay_;
  double floor_;
  double best_ = std::numeric_limits<double>::infinity();
  Index bad_epochs_ = 0;
};

/// ASR stochastic-gradient schedule: base rate divided by decay^epoch.
inline double sgd_epoch_decay(Index epoch, double base_lr = 3e-4, double decay = 1.1) {
  if (epoch < 0) throw ContractError("sgd_epoch_decay: negative epoch");
  return base_lr / std::pow(decay, static_cast<double>(epoch));
}

}  // namespace ettk

#endif  // ETTK_OPTIM_HPP_
