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

#ifndef ETTK_MANIFEST_HPP_
#define ETTK_MANIFEST_HPP_

#include <optional>
#include <string>
#include <vector>

#include "ettk/common.hpp"
#include "ettk/rng.hpp"

namespace ettk {

// ---------------------------------------------------------------------------
// Transcription alphabet: blank, a-z, space, apostrophe (29 symbols)
// ---------------------------------------------------------------------------

inline constexpr Index kBlankLabel = 0;
inline constexpr Index kAlphabetSize = 29;

Index char_to_label(char c);
char label_to_char(Index label);
std::vector<Index> transcript_to_labels(const std::string& text);
std::string labels_to_transcript(const std::vector<Index>& labels);
bool valid_transcript(const std::string& text);

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct AsrManifestEntry {
  std::string audio_path;
  double duration_s = 0.0;
  std::string transcript;  // lowercase over the alphabet
};

/// One annotated emotion utterance before filtering.
struct EmotionRecord {
  std::string audio_path;
  double duration_s = 0.0;
  int session = 0;  // 1-based
  std::string speaker;
  std::vector<std::string> annotator_labels;  // at least one
};

/// Post-filter sample with its agreed label.
struct LabeledUtterance {
  std::string audio_path;
  double duration_s = 0.0;
  int session = 0;
  std::string speaker;
  std::string label;  // one of the four target classes
};

/// The four target classes in canonical index order.
const std::vector<std::string>& emotion_classes();
Index emotion_class_index(const std::string& label);

/// Leave-one-speaker-out fold: train on the other sessions, validate on the
/// held-out session's other speaker, test on this one.
struct SplitPlan {
  int fold_id = 0;
  int held_out_session = 0;
  std::vector<int> train_sessions;
  std::string validation_speaker;
  std::string test_speaker;
};

struct BatchPlan {
  std::vector<std::vector<Index>> batches;  // entry indices, every entry once
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Annotator-agreement filter: Excited merges into Happiness first, then a
/// sample is kept iff some label reaches at least two annotators, the
/// annotators did not produce three or more distinct labels, no tie for the
/// majority remains, and the majority label is one of the four target
/// classes. Returns the surviving label.
std::optional<std::string> agreed_emotion_label(const std::vector<std::string>& annotator_labels);

std::vector<LabeledUtterance> filter_emotion_records(const std::vector<EmotionRecord>& records);

/// Drop utterances strictly longer than max_s seconds (ASR corpora only).
std::vector<AsrManifestEntry> filter_long_utterances(std::vector<AsrManifestEntry> entries,
                                                     double max_s = 15.0);

/// One fold per (session, speaker): 2 speakers x S sessions. Every session
/// must contain exactly two speakers.
std::vector<SplitPlan> loso_splits(const std::vector<LabeledUtterance>& samples);

/// Epoch 0: ascending duration (SortaGrad); later epochs: uniform shuffle.
/// Chunked into batches of batch_size; always a partition of the input.
BatchPlan sortagrad_batches(const std::vector<double>& durations, Index epoch, Index batch_size,
                            Rng& rng);

// ---------------------------------------------------------------------------
// TSV manifests (UTF-8, LF)
//   ASR: path<TAB>duration_s<TAB>transcript
//   SER: path<TAB>duration_s<TAB>session<TAB>speaker<TAB>label1,label2,...
// ---------------------------------------------------------------------------

void write_asr_manifest(const std::string& path, const std::vector<AsrManifestEntry>& entries);
std::vector<AsrManifestEntry> read_asr_manifest(const std::string& path);
void write_ser_manifest(const std::string& path, const std::vector<EmotionRecord>& records);
std::vector<EmotionRecord> read_ser_manifest(const std::string& path);

/// Audio paths in manifests are relative to the manifest's directory unless
/// absolute.
std::string resolve_audio_path(const std::string& manifest_path, const std::string& audio_path);

}  // namespace ettk

#endif  // ETTK_MANIFEST_HPP_
