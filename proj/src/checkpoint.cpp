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

#include "ettk/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace ettk {
namespace {

constexpr char kMagic[4] = {'E', 'T', 'T', 'K'};

const std::array<std::uint32_t, 256>& crc_table() {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, const std::string& origin)
      : bytes_(bytes), origin_(origin) {}

  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t len) {
    need(len);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  std::vector<float> floats(std::size_t count) {
    need(count * 4);
    std::vector<float> v(count);
    std::memcpy(v.data(), bytes_.data() + pos_, count * 4);
    pos_ += count * 4;
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError("checkpoint: " + origin_ + " is truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
  std::uint32_t c = 0xffffffffu;
  for (std::size_t i = 0; i < len; ++i) {
    c = crc_table()[(c ^ data[i]) & 0xffu] ^ (c >> 8);
  }
  return c ^ 0xffffffffu;
}

const Checkpoint::Entry& Checkpoint::find(const std::string& name) const {
  for (const Entry& e : tensors) {
    if (e.name == name) return e;
  }
  throw IoError("checkpoint: missing tensor '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  for (const Entry& e : tensors) {
    if (e.name == name) return true;
  }
  return false;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kCheckpointVersion);
  const std::string meta = ckpt.metadata.dump();
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out.insert(out.end(), meta.begin(), meta.end());
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& e : ckpt.tensors) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
    Index numel = 1;
    for (Index d : e.shape) {
      put_u32(out, static_cast<std::uint32_t>(d));
      numel *= d;
    }
    if (numel != static_cast<Index>(e.data.size())) {
      throw ContractError("checkpoint: tensor '" + e.name + "' payload does not match shape");
    }
    const std::size_t off = out.size();
    out.resize(off + e.data.size() * 4);
    std::memcpy(out.data() + off, e.data.data(), e.data.size() * 4);
  }
  put_u32(out, crc32(out.data(), out.size()));
  return out;
}

Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  if (bytes.size() < 14) throw IoError("checkpoint: " + origin + " is too short");
  const std::uint32_t stored = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                               (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
                               (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
  if (crc32(bytes.data(), bytes.size() - 4) != stored) {
    throw IoError("checkpoint: " + origin + " failed the CRC-32 integrity check");
  }
  Reader r(bytes, origin);
  if (r.str(4) != std::string(kMagic, 4)) {
    throw IoError("checkpoint: " + origin + " has a bad magic number");
  }
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint: " + origin + " has unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const std::uint32_t meta_len = r.u32();
  const std::string meta = r.str(meta_len);
  try {
    ckpt.metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint: " + origin + " has malformed metadata: " + e.what());
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    Checkpoint::Entry e;
    e.name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    Index numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const Index extent = static_cast<Index>(r.u32());
      e.shape.push_back(extent);
      numel *= extent;
    }
    e.data = r.floats(static_cast<std::size_t>(numel));
    ckpt.tensors.push_back(std::move(e));
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::vector<std::uint8_t> bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_checkpoint: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes, path);
}

}  // namespace ettk
