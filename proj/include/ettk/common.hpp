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

#ifndef ETTK_COMMON_HPP_
#define ETTK_COMMON_HPP_

#include <atomic>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ettk {

using Index = std::int64_t;
using Shape = std::vector<Index>;

/// Base error for all toolkit failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape/extent mismatch between operands.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// Violated precondition of an operation or type invariant.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error(msg) {}
};

/// Numeric-domain violation (log of non-positive, NaN in checked mode).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// File and wire-format failures.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

inline Index shape_size(const Shape& s) {
  Index n = 1;
  for (Index d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ']';
  return os.str();
}

// Checked mode gates the NaN/Inf scans at op boundaries. Shape checks are
// always on. Trainers switch it off inside the hot loop.
inline std::atomic<bool>& checked_mode_flag() {
  static std::atomic<bool> flag{true};
  return flag;
}

inline bool checked_mode() {
  return checked_mode_flag().load(std::memory_order_relaxed);
}

inline void set_checked_mode(bool on) {
  checked_mode_flag().store(on, std::memory_order_relaxed);
}

}  // namespace ettk

#endif  // ETTK_COMMON_HPP_
