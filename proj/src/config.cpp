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

#include "ettk/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ettk {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(const std::string& origin, Index line, const std::string& msg) {
  throw ContractError(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& origin, Index line, const std::string& key,
                    const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(origin, line, key + ": cannot parse '" + value + "' as a number");
  }
}

Index parse_index(const std::string& origin, Index line, const std::string& key,
                  const std::string& value) {
  const double v = parse_double(origin, line, key, value);
  if (v != static_cast<double>(static_cast<Index>(v))) {
    fail(origin, line, key + ": expected an integer, got '" + value + "'");
  }
  return static_cast<Index>(v);
}

bool parse_bool(const std::string& origin, Index line, const std::string& key,
                const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  fail(origin, line, key + ": expected true/false, got '" + value + "'");
}

void apply_key(TrainConfig& cfg, const std::string& origin, Index line, const std::string& key,
               const std::string& value) {
  auto positive = [&](double v, const char* what) {
    if (v <= 0.0) fail(origin, line, std::string(what) + " out of range: must be positive");
    return v;
  };
  if (key == "ser_lr") {
    cfg.ser_lr = positive(parse_double(origin, line, key, value), "ser_lr");
  } else if (key == "asr_lr") {
    cfg.asr_lr = positive(parse_double(origin, line, key, value), "asr_lr");
  } else if (key == "asr_lr_decay") {
    cfg.asr_lr_decay = parse_double(origin, line, key, value);
    if (cfg.asr_lr_decay <= 1.0) fail(origin, line, "asr_lr_decay out of range: must exceed 1");
  } else if (key == "clip_norm") {
    cfg.clip_norm = parse_double(origin, line, key, value);
    if (cfg.clip_norm <= 0.0) fail(origin, line, "clip_norm out of range: must be positive");
  } else if (key == "batch_size") {
    cfg.batch_size = parse_index(origin, line, key, value);
    if (cfg.batch_size < 1) fail(origin, line, "batch_size out of range: must be at least 1");
  } else if (key == "dropout") {
    cfg.dropout = parse_double(origin, line, key, value);
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) fail(origin, line, "dropout out of range: [0, 1)");
  } else if (key == "patience") {
    cfg.patience = parse_index(origin, line, key, value);
    if (cfg.patience < 1) fail(origin, line, "patience out of range: must be at least 1");
  } else if (key == "anneal_factor") {
    cfg.anneal_factor = parse_double(origin, line, key, value);
    if (cfg.anneal_factor <= 0.0 || cfg.anneal_factor >= 1.0) {
      fail(origin, line, "anneal_factor out of range: (0, 1)");
    }
  } else if (key == "lr_floor") {
    cfg.lr_floor = positive(parse_double(origin, line, key, value), "lr_floor");
  } else if (key == "augment") {
    cfg.augment = parse_bool(origin, line, key, value);
  } else if (key == "tempo_min") {
    cfg.tempo_lo = parse_double(origin, line, key, value);
    if (cfg.tempo_lo < kTempoMin) fail(origin, line, "tempo_min out of range: >= 0.85");
  } else if (key == "tempo_max") {
    cfg.tempo_hi = parse_double(origin, line, key, value);
    if (cfg.tempo_hi > kTempoMax) fail(origin, line, "tempo_max out of range: <= 1.15");
  } else if (key == "gain_min") {
    cfg.gain_lo = parse_double(origin, line, key, value);
    if (cfg.gain_lo < kGainMinDb) fail(origin, line, "gain_min out of range: >= -3 dB");
  } else if (key == "gain_max") {
    cfg.gain_hi = parse_double(origin, line, key, value);
    if (cfg.gain_hi > kGainMaxDb) fail(origin, line, "gain_max out of range: <= +6 dB");
  } else if (key == "max_epochs") {
    cfg.max_epochs = parse_index(origin, line, key, value);
    if (cfg.max_epochs < 1) fail(origin, line, "max_epochs out of range: must be at least 1");
  } else if (key == "seed") {
    const Index v = parse_index(origin, line, key, value);
    if (v < 0) fail(origin, line, "seed out of range: must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(v);
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(parse_index(origin, line, key, value));
    if (cfg.threads < 0) fail(origin, line, "threads out of range: must be non-negative");
  } else {
    fail(origin, line, "unknown key '" + key + "'");
  }
}

}  // namespace

TrainConfig parse_config_text(const std::string& text, const std::string& origin) {
  TrainConfig cfg;
  std::stringstream ss(text);
  std::string raw;
  Index line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail(origin, line_no, "expected 'key = value'");
    apply_key(cfg, origin, line_no, key, value);
  }
  cfg.validate();
  return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

TrainConfig apply_overrides(TrainConfig config, const std::vector<std::string>& overrides) {
  Index n = 0;
  for (const std::string& kv : overrides) {
    ++n;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ContractError("override " + std::to_string(n) + ": expected key=value, got '" + kv + "'");
    }
    apply_key(config, "<override>", n, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

std::string config_to_text(const TrainConfig& cfg) {
  char buf[1024];
  std::snprintf(buf, sizeof(buf),
                "ser_lr = %.10g\n"
                "asr_lr = %.10g\n"
                "asr_lr_decay = %.10g\n"
                "clip_norm = %.10g\n"
                "batch_size = %lld\n"
                "dropout = %.10g\n"
                "patience = %lld\n"
                "anneal_factor = %.10g\n"
                "lr_floor = %.10g\n"
                "augment = %s\n"
                "tempo_min = %.10g\n"
                "tempo_max = %.10g\n"
                "gain_min = %.10g\n"
                "gain_max = %.10g\n"
                "max_epochs = %lld\n"
                "seed = %llu\n"
                "threads = %d\n",
                cfg.ser_lr, cfg.asr_lr, cfg.asr_lr_decay, cfg.clip_norm,
                static_cast<long long>(cfg.batch_size), cfg.dropout,
                static_cast<long long>(cfg.patience), cfg.anneal_factor, cfg.lr_floor,
                cfg.augment ? "true" : "false", cfg.tempo_lo, cfg.tempo_hi, cfg.gain_lo,
                cfg.gain_hi, static_cast<long long>(cfg.max_epochs),
                static_cast<unsigned long long>(cfg.seed), cfg.threads);
  return buf;
}

}  // namespace ettk
