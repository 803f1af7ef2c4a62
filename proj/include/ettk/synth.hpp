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

#ifndef ETTK_SYNTH_HPP_
#define ETTK_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ettk/audio.hpp"
#include "ettk/manifest.hpp"

namespace ettk {

// ---------------------------------------------------------------------------
// Desk-scale transcription corpus: every vocabulary word is a distinct
// two-segment harmonic tone pattern; utterances are word sequences in noise.
// ---------------------------------------------------------------------------

struct SynthWord {
  std::string text;    // lowercase spelling over the transcript alphabet
  double freq_a = 0.0; // first tone segment, Hz
  double freq_b = 0.0; // second tone segment, Hz
};

struct SynthAsrSpec {
  std::vector<SynthWord> vocab;
  Index num_utterances = 200;
  Index min_words = 2;
  Index max_words = 4;
  double snr_db = 20.0;
  double amplitude = 0.3;

  static SynthAsrSpec defaults();
};

/// One generated utterance with its clean/noise components kept separate so
/// tests can verify the SNR contract.
struct SynthParts {
  AudioClip clip;
  std::string transcript;
  std::vector<float> clean;
  std::vector<float> noise;
};

SynthParts synth_asr_utterance(const SynthAsrSpec& spec, std::uint64_t seed, Index index);

struct SynthAsrCorpus {
  std::vector<AudioClip> clips;
  std::vector<AsrManifestEntry> entries;  // audio paths are utt_%05d.wav
};

SynthAsrCorpus synth_asr_corpus(const SynthAsrSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Desk-scale emotion corpus: 4 classes with class-conditional pitch band,
// amplitude-modulation rate, loudness and pitch contour; several synthetic
// speakers (2 per session) with per-speaker pitch/gain offsets.
// ---------------------------------------------------------------------------

struct SynthSerClass {
  std::string label;     // canonical class name, e.g. "anger"
  double f0_lo = 0.0, f0_hi = 0.0;
  double am_lo = 0.0, am_hi = 0.0;     // amplitude-modulation rate, Hz
  double amp_lo = 0.0, amp_hi = 0.0;   // linear amplitude
  double contour = 0.0;                // relative F0 slope across the clip
};

struct SynthSerSpec {
  std::vector<SynthSerClass> classes;
  Index clips_per_class = 100;
  Index num_sessions = 5;  // two speakers each
  double duration_lo = 0.7;
  double duration_hi = 1.3;
  double snr_db = 18.0;

  static SynthSerSpec defaults();
};

struct SynthSerCorpus {
  std::vector<AudioClip> clips;
  std::vector<EmotionRecord> records;  // audio paths are utt_%05d.wav
};

SynthSerCorpus synth_ser_corpus(const SynthSerSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Disk writers: WAV files plus a manifest.tsv inside `dir`; return the
// manifest path.
// ---------------------------------------------------------------------------

std::string write_asr_corpus(const std::string& dir, const SynthAsrSpec& spec, std::uint64_t seed);
std::string write_ser_corpus(const std::string& dir, const SynthSerSpec& spec, std::uint64_t seed);

}  // namespace ettk

#endif  // ETTK_SYNTH_HPP_
