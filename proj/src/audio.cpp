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

#include "ettk/audio.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace ettk {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatIeeeFloat = 3;

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

AudioClip load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_wav: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError("load_wav: " + path + " is not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::uint32_t data_len = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = read_u32(bytes.data() + pos + 4);
    pos += 8;
    if (pos + len > bytes.size()) throw IoError("load_wav: truncated chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw IoError("load_wav: malformed fmt chunk in " + path);
      format = read_u16(bytes.data() + pos);
      channels = read_u16(bytes.data() + pos + 2);
      rate = read_u32(bytes.data() + pos + 4);
      bits = read_u16(bytes.data() + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + pos;
      data_len = len;
    }
    pos += len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt || data == nullptr) throw IoError("load_wav: missing fmt/data chunk in " + path);
  if (channels == 0) throw IoError("load_wav: zero channels in " + path);
  if (rate != static_cast<std::uint32_t>(kSampleRate)) {
    throw IoError("load_wav: " + path + " has sample rate " + std::to_string(rate) +
                  ", expected " + std::to_string(kSampleRate) + " (no implicit resampling)");
  }

  AudioClip clip;
  clip.sample_rate = kSampleRate;
  if (format == kFormatPcm && bits == 16) {
    const std::size_t frames = data_len / (2u * channels);
    clip.samples.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
      double acc = 0.0;
      for (std::uint16_t c = 0; c < channels; ++c) {
        const std::uint8_t* p = data + (f * channels + c) * 2;
        const std::int16_t s = static_cast<std::int16_t>(p[0] | (p[1] << 8));
        acc += static_cast<double>(s) / 32768.0;
      }
      clip.samples[f] = static_cast<float>(acc / channels);
    }
  } else if (format == kFormatIeeeFloat && bits == 32) {
    const std::size_t frames = data_len / (4u * channels);
    clip.samples.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
      double acc = 0.0;
      for (std::uint16_t c = 0; c < channels; ++c) {
        float s;
        std::memcpy(&s, data + (f * channels + c) * 4, 4);
        acc += static_cast<double>(s);
      }
      clip.samples[f] = static_cast<float>(acc / channels);
    }
  } else {
    throw IoError("load_wav: unsupported codec in " + path + " (format " + std::to_string(format) +
                  ", " + std::to_string(bits) + "-bit); expected PCM-16 or float-32");
  }
  return clip;
}

void save_wav(const std::string& path, const AudioClip& clip) {
  const std::uint32_t data_len = static_cast<std::uint32_t>(clip.samples.size() * 4);
  std::string out;
  out.reserve(58 + data_len);
  out.append("RIFF");
  put_u32(out, 4 + 8 + 16 + 8 + 4 + 8 + data_len);  // WAVE + fmt + fact + data
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatIeeeFloat);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 4);
  put_u16(out, 4);
  put_u16(out, 32);
  out.append("fact");
  put_u32(out, 4);
  put_u32(out, static_cast<std::uint32_t>(clip.samples.size()));
  out.append("data");
  put_u32(out, data_len);
  for (float s : clip.samples) {
    char buf[4];
    std::memcpy(buf, &s, 4);
    out.append(buf, 4);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("save_wav: cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("save_wav: write failed for " + path);
}

}  // namespace ettk
