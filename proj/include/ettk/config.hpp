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

#ifndef ETTK_CONFIG_HPP_
#define ETTK_CONFIG_HPP_

#include <string>
#include <vector>

#include "ettk/train.hpp"

namespace ettk {

/// Flat key = value configuration text ('#' comments). Unknown keys and
/// out-of-range values are rejected with the offending line number. An empty
/// file yields exactly the reference training recipe.
TrainConfig parse_config_text(const std::string& text, const std::string& origin);
TrainConfig parse_config_file(const std::string& path);

/// Apply "key=value" overrides on top of a parsed config.
TrainConfig apply_overrides(TrainConfig config, const std::vector<std::string>& overrides);

/// Canonical echo of the effective configuration (deterministic order).
std::string config_to_text(const TrainConfig& config);

}  // namespace ettk

#endif  // ETTK_CONFIG_HPP_
