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

#ifndef ETTK_GRAD_CHECK_HPP_
#define ETTK_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "ettk/ops.hpp"

namespace ettk {

/// Central finite-difference check of the recorded backward rules.
///
/// `build` maps (tape, vars) to a scalar var and must be a pure function of
/// the input values. Returns the maximum over all input entries of
///   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
/// with numeric = (f(x+eps) - f(x-eps)) / (2 eps). Run on Tensor<double>
/// inputs for meaningful tolerances.
template <typename S, typename BuildFn>
double grad_check(BuildFn&& build, std::vector<Tensor<S>> inputs, double epsilon) {
  if (epsilon <= 0.0) throw ContractError("grad_check: epsilon must be positive");
  for (auto& in : inputs) {
    check_finite(in, "grad_check");
    in.set_requires_grad(true);
  }

  Tape<S> tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (auto& in : inputs) vars.push_back(tape.leaf(in));
  Var loss = build(tape, vars);
  if (tape.value(loss).size() != 1) {
    throw ContractError("grad_check: build must produce a scalar");
  }
  tape.backward(loss);
  std::vector<Tensor<S>> analytic;
  analytic.reserve(vars.size());
  for (Var v : vars) analytic.push_back(tape.grad(v).clone());

  auto eval = [&](const std::vector<Tensor<S>>& points) {
    std::vector<Tensor<S>> local = points;
    for (auto& l : local) l.set_requires_grad(false);
    Tape<S> tp;
    std::vector<Var> vs;
    vs.reserve(local.size());
    for (auto& l : local) vs.push_back(tp.leaf(l));
    Var out = build(tp, vs);
    return static_cast<double>(tp.value(out).value());
  };

  double max_err = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (Index j = 0; j < inputs[i].size(); ++j) {
      const S saved = inputs[i][j];
      inputs[i][j] = saved + static_cast<S>(epsilon);
      const double up = eval(inputs);
      inputs[i][j] = saved - static_cast<S>(epsilon);
      const double down = eval(inputs);
      inputs[i][j] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = static_cast<double>(analytic[i][j]);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      max_err = std::max(max_err, std::abs(a - numeric) / denom);
    }
  }
  return max_err;
}

}  // namespace ettk

#endif  // ETTK_GRAD_CHECK_HPP_
