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

#include "ettk/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace ettk {

// ---------------------------------------------------------------------------
// Alphabet
// ---------------------------------------------------------------------------

Index char_to_label(char c) {
  if (c >= 'a' && c <= 'z') return 1 + (c - 'a');
  if (c == ' ') return 27;
  if (c == '\'') return 28;
  throw ContractError(std::string("char_to_label: '") + c + "' outside the transcript alphabet");
}

char label_to_char(Index label) {
  if (label >= 1 && label <= 26) return static_cast<char>('a' + (label - 1));
  if (label == 27) return ' ';
  if (label == 28) return '\'';
  throw ContractError("label_to_char: label " + std::to_string(label) + " has no character");
}

std::vector<Index> transcript_to_labels(const std::string& text) {
  std::vector<Index> out;
  out.reserve(text.size());
  for (char c : text) out.push_back(char_to_label(c));
  return out;
}

std::string labels_to_transcript(const std::vector<Index>& labels) {
  std::string out;
  out.reserve(labels.size());
  for (Index l : labels) out.push_back(label_to_char(l));
  return out;
}

bool valid_transcript(const std::string& text) {
  return std::all_of(text.begin(), text.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || c == ' ' || c == '\'';
  });
}

// ---------------------------------------------------------------------------
// Emotion filtering
// ---------------------------------------------------------------------------

const std::vector<std::string>& emotion_classes() {
  static const std::vector<std::string> classes{"neutral", "anger", "happiness", "sadness"};
  return classes;
}

Index emotion_class_index(const std::string& label) {
  const auto& classes = emotion_classes();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == label) return static_cast<Index>(i);
  }
  throw ContractError("emotion_class_index: unknown class '" + label + "'");
}

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::optional<std::string> agreed_emotion_label(const std::vector<std::string>& annotator_labels) {
  if (annotator_labels.empty()) {
    throw ContractError("agreed_emotion_label: record with no annotator labels");
  }
  // Excited merges into Happiness before any counting, since the merge can
  // create the required agreement.
  std::map<std::string, int> counts;
  for (const std::string& raw : annotator_labels) {
    std::string label = lowercase(raw);
    if (label == "excited") label = "happiness";
    ++counts[label];
  }
  if (counts.size() >= 3) return std::nullopt;  // three distinct emotions
  int best = 0;
  std::string majority;
  bool tie = false;
  for (const auto& [label, count] : counts) {
    if (count > best) {
      best = count;
      majority = label;
      tie = false;
    } else if (count == best) {
      tie = true;
    }
  }
  if (best < 2 || tie) return std::nullopt;
  const auto& classes = emotion_classes();
  if (std::find(classes.begin(), classes.end(), majority) == classes.end()) return std::nullopt;
  return majority;
}

std::vector<LabeledUtterance> filter_emotion_records(const std::vector<EmotionRecord>& records) {
  std::vector<LabeledUtterance> out;
  for (const EmotionRecord& rec : records) {
    const auto label = agreed_emotion_label(rec.annotator_labels);
    if (!label) continue;
    out.push_back(LabeledUtterance{rec.audio_path, rec.duration_s, rec.session, rec.speaker, *label});
  }
  return out;
}

std::vector<AsrManifestEntry> filter_long_utterances(std::vector<AsrManifestEntry> entries,
                                                     double max_s) {
  entries.erase(std::remove_if(entries.begin(), entries.end(),
                               [max_s](const AsrManifestEntry& e) { return e.duration_s > max_s; }),
                entries.end());
  return entries;
}

// ---------------------------------------------------------------------------
// Splits and batching
// ---------------------------------------------------------------------------

std::vector<SplitPlan> loso_splits(const std::vector<LabeledUtterance>& samples) {
  std::map<int, std::set<std::string>> speakers_by_session;
  for (const auto& s : samples) speakers_by_session[s.session].insert(s.speaker);
  if (speakers_by_session.empty()) throw ContractError("loso_splits: no samples");
  for (const auto& [session, speakers] : speakers_by_session) {
    if (speakers.size() != 2) {
      throw ContractError("loso_splits: session " + std::to_string(session) + " has " +
                          std::to_string(speakers.size()) + " speakers, expected 2");
    }
  }
  std::vector<SplitPlan> folds;
  int fold_id = 0;
  for (const auto& [session, speakers] : speakers_by_session) {
    for (const std::string& test_speaker : speakers) {
      SplitPlan plan;
      plan.fold_id = fold_id++;
      plan.held_out_session = session;
      plan.test_speaker = test_speaker;
      for (const std::string& other : speakers) {
        if (other != test_speaker) plan.validation_speaker = other;
      }
      for (const auto& [other_session, unused] : speakers_by_session) {
        if (other_session != session) plan.train_sessions.push_back(other_session);
      }
      folds.push_back(std::move(plan));
    }
  }
  return folds;
}

BatchPlan sortagrad_batches(const std::vector<double>& durations, Index epoch, Index batch_size,
                            Rng& rng) {
  if (batch_size < 1) throw ContractError("sortagrad_batches: batch size must be positive");
  std::vector<Index> order(durations.size());
  std::iota(order.begin(), order.end(), Index{0});
  if (epoch == 0) {
    std::stable_sort(order.begin(), order.end(), [&durations](Index a, Index b) {
      return durations[static_cast<std::size_t>(a)] < durations[static_cast<std::size_t>(b)];
    });
  } else {
    shuffle(order, rng);
  }
  BatchPlan plan;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    plan.batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                              order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// TSV IO
// ---------------------------------------------------------------------------

namespace {

std::string format_duration(double seconds) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", seconds);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest: cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

void write_asr_manifest(const std::string& path, const std::vector<AsrManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("write_asr_manifest: cannot open " + path);
  for (const auto& e : entries) {
    out << e.audio_path << '\t' << format_duration(e.duration_s) << '\t' << e.transcript << '\n';
  }
}

std::vector<AsrManifestEntry> read_asr_manifest(const std::string& path) {
  std::vector<AsrManifestEntry> entries;
  Index line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw IoError("read_asr_manifest: " + path + ":" + std::to_string(line_no) +
                    ": expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    AsrManifestEntry e;
    e.audio_path = fields[0];
    e.duration_s = std::stod(fields[1]);
    e.transcript = fields[2];
    if (e.duration_s <= 0.0) {
      throw IoError("read_asr_manifest: " + path + ":" + std::to_string(line_no) +
                    ": non-positive duration");
    }
    if (!valid_transcript(e.transcript)) {
      throw IoError("read_asr_manifest: " + path + ":" + std::to_string(line_no) +
                    ": transcript contains characters outside the alphabet");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_ser_manifest(const std::string& path, const std::vector<EmotionRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("write_ser_manifest: cannot open " + path);
  for (const auto& r : records) {
    out << r.audio_path << '\t' << format_duration(r.duration_s) << '\t' << r.session << '\t'
        << r.speaker << '\t';
    for (std::size_t i = 0; i < r.annotator_labels.size(); ++i) {
      if (i) out << ',';
      out << r.annotator_labels[i];
    }
    out << '\n';
  }
}

std::vector<EmotionRecord> read_ser_manifest(const std::string& path) {
  std::vector<EmotionRecord> records;
  Index line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    const auto fields = split_tabs(line);
    if (fields.size() != 5) {
      throw IoError("read_ser_manifest: " + path + ":" + std::to_string(line_no) +
                    ": expected 5 tab-separated fields, got " + std::to_string(fields.size()));
    }
    EmotionRecord r;
    r.audio_path = fields[0];
    r.duration_s = std::stod(fields[1]);
    r.session = std::stoi(fields[2]);
    r.speaker = fields[3];
    r.annotator_labels = split_commas(fields[4]);
    if (r.annotator_labels.empty()) {
      throw IoError("read_ser_manifest: " + path + ":" + std::to_string(line_no) +
                    ": record without annotator labels");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::string resolve_audio_path(const std::string& manifest_path, const std::string& audio_path) {
  if (!audio_path.empty() && audio_path.front() == '/') return audio_path;
  const auto slash = manifest_path.find_last_of('/');
  if (slash == std::string::npos) return audio_path;
  return manifest_path.substr(0, slash + 1) + audio_path;
}

}  // namespace ettk
