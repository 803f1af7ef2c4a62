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

#ifndef ETTK_TAPE_HPP_
#define ETTK_TAPE_HPP_

#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "ettk/tensor.hpp"

namespace ettk {

/// Handle to a value recorded on a Tape.
struct Var {
  Index id = -1;
  bool valid() const { return id >= 0; }
};

/// Define-by-run reverse-mode tape. Operations append their output value and
/// a backward rule; backward() replays the rules once, in reverse topological
/// (= insertion) order, accumulating gradients across fan-out. A tape is
/// single-owner: one forward/backward pass, not shared across threads.
template <typename Scalar>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Register an externally owned tensor (model parameter or input). Whether
  /// gradients flow is taken from the tensor's requires_grad flag.
  Var leaf(Tensor<Scalar>& t) {
    check_finite(t, "Tape::leaf");
    Slot slot;
    slot.external = &t;
    slot.cvalue = &t;
    slot.requires_grad = t.requires_grad();
    slots_.push_back(std::move(slot));
    return Var{static_cast<Index>(slots_.size()) - 1};
  }

  /// Register a read-only external tensor (frozen parameters, cached
  /// activations). Never receives gradient.
  Var frozen(const Tensor<Scalar>& t) {
    Slot slot;
    slot.cvalue = &t;
    slots_.push_back(std::move(slot));
    return Var{static_cast<Index>(slots_.size()) - 1};
  }

  /// Record a tape-owned constant.
  Var constant(Tensor<Scalar> value) { return emit(std::move(value), false); }

  /// Record an op output. Library ops and custom nodes use this together
  /// with record_node().
  Var emit(Tensor<Scalar> value, bool requires_grad) {
    check_finite(value, "Tape::emit");
    Slot slot;
    slot.owned = std::move(value);
    slot.requires_grad = requires_grad;
    slots_.push_back(std::move(slot));
    slots_.back().cvalue = &slots_.back().owned;
    return Var{static_cast<Index>(slots_.size()) - 1};
  }

  /// Append a backward rule. Rules run in reverse insertion order.
  void record_node(std::function<void(Tape&)> backward) {
    nodes_.push_back(Node{std::move(backward)});
  }

  const Tensor<Scalar>& value(Var v) const { return *slots_[idx(v)].cvalue; }

  bool requires_grad(Var v) const { return slots_[idx(v)].requires_grad; }

  bool has_grad(Var v) const { return slots_[idx(v)].grad.size() > 0; }

  /// Gradient buffer for a var, allocated to zeros on first access.
  Tensor<Scalar>& grad(Var v) {
    Slot& s = slots_[idx(v)];
    if (s.grad.size() == 0) s.grad = Tensor<Scalar>(s.cvalue->shape());
    return s.grad;
  }

  /// Reverse sweep from a scalar loss. Populates gradient buffers for every
  /// var on a path from a requires_grad leaf to the loss.
  void backward(Var loss) {
    if (value(loss).size() != 1) {
      throw ContractError("Tape::backward: loss must be scalar, got shape " +
                          shape_str(value(loss).shape()));
    }
    grad(loss).flat().setConstant(Scalar(1));
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      it->backward(*this);
    }
  }

  /// Add each external leaf's tape gradient into the tensor's own grad
  /// buffer. Kept separate from backward() so batch-parallel item tapes can
  /// instead be reduced in deterministic index order by the caller.
  void accumulate_leaf_grads() {
    for (Slot& s : slots_) {
      if (s.external != nullptr && s.requires_grad && s.grad.size() > 0) {
        s.external->grad() += s.grad.flat();
      }
    }
  }

  std::size_t num_vars() const { return slots_.size(); }
  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Slot {
    Tensor<Scalar> owned;
    const Tensor<Scalar>* cvalue = nullptr;
    Tensor<Scalar>* external = nullptr;
    Tensor<Scalar> grad;
    bool requires_grad = false;
  };
  struct Node {
    std::function<void(Tape&)> backward;
  };

  std::size_t idx(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= slots_.size()) {
      throw ContractError("Tape: invalid var handle");
    }
    return static_cast<std::size_t>(v.id);
  }

  std::deque<Slot> slots_;
  std::vector<Node> nodes_;
};

}  // namespace ettk

#endif  // ETTK_TAPE_HPP_
