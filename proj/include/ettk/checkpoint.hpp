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

#ifndef ETTK_CHECKPOINT_HPP_
#define ETTK_CHECKPOINT_HPP_

#include <json.hpp>
#include <cstdint>
#include <string>
#include <vector>

#include "ettk/tensor.hpp"

namespace ettk {

/// Binary container for named float32 tensors plus a JSON metadata block.
///
/// Wire format, all integers little-endian:
///   magic "ETTK" | version u16 | metadata length u32 | metadata (UTF-8 JSON)
///   | tensor count u32 | per tensor: name length u32, name bytes, rank u32,
///   extents u32 each, float32 payload | CRC-32 of all preceding bytes.
struct Checkpoint {
  struct Entry {
    std::string name;
    Shape shape;
    std::vector<float> data;
  };

  nlohmann::json metadata;  // carries "kind" plus the model spec descriptor
  std::vector<Entry> tensors;

  std::string kind() const { return metadata.value("kind", std::string()); }
  const Entry& find(const std::string& name) const;
  bool has(const std::string& name) const;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& origin);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// CRC-32 (IEEE) over a byte range.
std::uint32_t crc32(const std::uint8_t* data, std::size_t len);

// ---------------------------------------------------------------------------
// Adapters between live parameter sets and checkpoint entries
// ---------------------------------------------------------------------------

template <typename S>
void add_tensors(Checkpoint& ckpt,
                 const std::vector<std::pair<std::string, Tensor<S>*>>& named) {
  for (const auto& [name, tensor] : named) {
    Checkpoint::Entry e;
    e.name = name;
    e.shape = tensor->shape();
    e.data.resize(static_cast<std::size_t>(tensor->size()));
    for (Index i = 0; i < tensor->size(); ++i) e.data[static_cast<std::size_t>(i)] =
        static_cast<float>(tensor->flat()[i]);
    ckpt.tensors.push_back(std::move(e));
  }
}

template <typename S>
void load_tensors(const Checkpoint& ckpt,
                  const std::vector<std::pair<std::string, Tensor<S>*>>& named) {
  if (ckpt.tensors.size() != named.size()) {
    throw IoError("checkpoint: parameter set mismatch: file has " +
                  std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                  std::to_string(named.size()));
  }
  for (const auto& [name, tensor] : named) {
    const Checkpoint::Entry& e = ckpt.find(name);
    if (e.shape != tensor->shape()) {
      throw IoError("checkpoint: tensor '" + name + "' has shape " + shape_str(e.shape) +
                    ", model expects " + shape_str(tensor->shape()));
    }
    for (Index i = 0; i < tensor->size(); ++i) {
      tensor->flat()[i] = static_cast<S>(e.data[static_cast<std::size_t>(i)]);
    }
  }
}

}  // namespace ettk

#endif  // ETTK_CHECKPOINT_HPP_
