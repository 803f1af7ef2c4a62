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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ettk/features.hpp"
#include "ettk/manifest.hpp"
#include "ettk/synth.hpp"

using namespace ettk;

TEST_CASE("transcript alphabet round trip and validation") {
  const std::string text = "it's a test";
  auto labels = transcript_to_labels(text);
  CHECK(labels_to_transcript(labels) == text);
  for (Index l : labels) CHECK(l != kBlankLabel);
  CHECK(valid_transcript(text));
  CHECK_FALSE(valid_transcript("Uppercase"));
  CHECK_THROWS_AS(transcript_to_labels("digit 9"), ContractError);
}

TEST_CASE("emotion agreement filter follows the published rules") {
  // 2-of-3 agreement keeps the majority label.
  CHECK(agreed_emotion_label({"Anger", "Anger", "Neutral"}) == "anger");
  // Three distinct emotions are discarded.
  CHECK_FALSE(agreed_emotion_label({"Anger", "Happiness", "Sadness"}).has_value());
  // Excited merges into Happiness before counting.
  CHECK(agreed_emotion_label({"Excited", "Happiness"}) == "happiness");
  CHECK(agreed_emotion_label({"Excited", "Excited"}) == "happiness");
  CHECK(agreed_emotion_label({"Excited", "Happiness", "Anger"}) == "happiness");
  // Agreement on a non-target class is discarded.
  CHECK_FALSE(agreed_emotion_label({"Fear", "Fear"}).has_value());
  CHECK_FALSE(agreed_emotion_label({"Frustration", "Frustration", "Anger"}).has_value());
  // Two annotators disagreeing: no label reaches two.
  CHECK_FALSE(agreed_emotion_label({"Anger", "Neutral"}).has_value());
  // 2-of-2 agreement keeps the sample.
  CHECK(agreed_emotion_label({"Sadness", "Sadness"}) == "sadness");
  // Tied majorities are ambiguous.
  CHECK_FALSE(agreed_emotion_label({"Anger", "Anger", "Sadness", "Sadness"}).has_value());
}

TEST_CASE("emotion filter is order-independent and idempotent") {
  const std::vector<std::string> pool{"Neutral", "Anger",       "Happiness", "Sadness",
                                      "Excited", "Frustration", "Fear",      "Surprise"};
  Rng rng(71);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> labels;
    const Index n = 2 + static_cast<Index>(rng.uniform_index(3));
    for (Index i = 0; i < n; ++i) {
      labels.push_back(pool[static_cast<std::size_t>(rng.uniform_index(8))]);
    }
    const auto base = agreed_emotion_label(labels);
    for (int shuffle_trial = 0; shuffle_trial < 4; ++shuffle_trial) {
      shuffle(labels, rng);
      CHECK(agreed_emotion_label(labels) == base);
    }
    if (base) {
      // Idempotence: records that survive keep the same label when refiltered
      // as a unanimous record.
      CHECK(agreed_emotion_label({*base, *base}) == base);
    }
  }
}

TEST_CASE("long-utterance filter uses a strict 15 s boundary") {
  std::vector<AsrManifestEntry> entries{{"a.wav", 14.9, "ba"},
                                        {"b.wav", 15.1, "dee"},
                                        {"c.wav", 15.0, "go"}};
  auto kept = filter_long_utterances(std::move(entries));
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].audio_path == "a.wav");
  CHECK(kept[1].audio_path == "c.wav");
}

TEST_CASE("loso splits: ten folds, disjoint speakers, full coverage") {
  std::vector<LabeledUtterance> samples;
  for (int session = 1; session <= 5; ++session) {
    for (int spk = 0; spk < 2; ++spk) {
      LabeledUtterance u;
      u.session = session;
      u.speaker = "spk" + std::to_string(2 * (session - 1) + spk);
      u.label = "anger";
      samples.push_back(u);
    }
  }
  auto folds = loso_splits(samples);
  CHECK(folds.size() == 10);
  std::set<std::string> test_speakers;
  for (const auto& fold : folds) {
    CHECK(fold.validation_speaker != fold.test_speaker);
    CHECK(fold.train_sessions.size() == 4);
    for (int s : fold.train_sessions) CHECK(s != fold.held_out_session);
    test_speakers.insert(fold.test_speaker);
  }
  CHECK(test_speakers.size() == 10);

  samples.pop_back();  // session 5 now has one speaker
  CHECK_THROWS_AS(loso_splits(samples), ContractError);
}

TEST_CASE("sortagrad: epoch 0 sorted, later epochs shuffled partitions") {
  Rng corpus_rng(5);
  std::vector<double> durations;
  for (int i = 0; i < 130; ++i) durations.push_back(corpus_rng.uniform(0.5, 12.0));

  Rng rng0(99);
  BatchPlan epoch0 = sortagrad_batches(durations, 0, 64, rng0);
  REQUIRE(epoch0.batches.size() == 3);
  CHECK(epoch0.batches[0].size() == 64);
  CHECK(epoch0.batches[1].size() == 64);
  CHECK(epoch0.batches[2].size() == 2);
  double prev = -1.0;
  for (const auto& batch : epoch0.batches) {
    for (Index idx : batch) {
      CHECK(durations[static_cast<std::size_t>(idx)] >= prev);
      prev = durations[static_cast<std::size_t>(idx)];
    }
  }

  Rng rng1a(123), rng1b(123);
  BatchPlan a = sortagrad_batches(durations, 1, 64, rng1a);
  BatchPlan b = sortagrad_batches(durations, 1, 64, rng1b);
  std::set<Index> seen;
  for (std::size_t i = 0; i < a.batches.size(); ++i) {
    CHECK(a.batches[i] == b.batches[i]);  // deterministic under the seed
    for (Index idx : a.batches[i]) CHECK(seen.insert(idx).second);
  }
  CHECK(seen.size() == durations.size());  // partition
}

TEST_CASE("synthetic asr corpus: deterministic, on-vocabulary, snr contract") {
  SynthAsrSpec spec = SynthAsrSpec::defaults();
  spec.num_utterances = 12;
  SynthAsrCorpus one = synth_asr_corpus(spec, 42);
  SynthAsrCorpus two = synth_asr_corpus(spec, 42);
  REQUIRE(one.clips.size() == 12);
  for (std::size_t i = 0; i < one.clips.size(); ++i) {
    CHECK(one.entries[i].transcript == two.entries[i].transcript);
    REQUIRE(one.clips[i].samples.size() == two.clips[i].samples.size());
    CHECK(std::equal(one.clips[i].samples.begin(), one.clips[i].samples.end(),
                     two.clips[i].samples.begin()));
  }

  std::set<std::string> vocab_words;
  for (const auto& w : spec.vocab) vocab_words.insert(w.text);
  for (const auto& e : one.entries) {
    CHECK(valid_transcript(e.transcript));
    std::stringstream ss(e.transcript);
    std::string word;
    while (ss >> word) CHECK(vocab_words.count(word) == 1);
    CHECK(e.duration_s > 0.0);
  }

  for (Index i = 0; i < spec.num_utterances; ++i) {
    SynthParts parts = synth_asr_utterance(spec, 42, i);
    double clean_e = 0.0, noise_e = 0.0;
    for (float s : parts.clean) clean_e += static_cast<double>(s) * s;
    for (float s : parts.noise) noise_e += static_cast<double>(s) * s;
    const double snr = 10.0 * std::log10(clean_e / noise_e);
    CHECK(std::abs(snr - spec.snr_db) < 2.0);
  }
}

TEST_CASE("synthetic ser corpus: balance, loudness separation, loso-ready") {
  SynthSerSpec spec = SynthSerSpec::defaults();
  spec.clips_per_class = 20;
  SynthSerCorpus corpus = synth_ser_corpus(spec, 7);
  REQUIRE(corpus.records.size() == 80);

  auto labeled = filter_emotion_records(corpus.records);
  CHECK(labeled.size() == corpus.records.size());  // generator always survives
  std::map<std::string, int> counts;
  for (const auto& u : labeled) ++counts[u.label];
  for (const auto& cls : spec.classes) CHECK(counts[cls.label] == 20);

  // Anger is at least 6 dB louder than sadness on average.
  double anger_db = 0.0, sadness_db = 0.0;
  int anger_n = 0, sadness_n = 0;
  for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
    const std::string& label = labeled[i].label;
    if (label != "anger" && label != "sadness") continue;
    auto loud = loudness<double>(corpus.clips[i]);
    double mean = 0.0;
    for (Index t = 0; t < loud.num_frames(); ++t) mean += loud.frames.at(t, 0);
    mean /= static_cast<double>(loud.num_frames());
    if (label == "anger") {
      anger_db += mean;
      ++anger_n;
    } else {
      sadness_db += mean;
      ++sadness_n;
    }
  }
  REQUIRE(anger_n > 0);
  REQUIRE(sadness_n > 0);
  CHECK(anger_db / anger_n >= sadness_db / sadness_n + 6.0);

  auto folds = loso_splits(labeled);
  CHECK(folds.size() == 2 * static_cast<std::size_t>(spec.num_sessions));
}

TEST_CASE("manifest tsv round trips") {
  const std::string asr_path = "/tmp/ettk_asr_manifest.tsv";
  std::vector<AsrManifestEntry> entries{{"utt_00000.wav", 1.234, "ba dee"},
                                        {"/abs/utt_1.wav", 2.5, "go go"}};
  write_asr_manifest(asr_path, entries);
  auto back = read_asr_manifest(asr_path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].audio_path == "utt_00000.wav");
  CHECK(back[0].duration_s == doctest::Approx(1.234));
  CHECK(back[0].transcript == "ba dee");
  CHECK(resolve_audio_path(asr_path, back[0].audio_path) == "/tmp/utt_00000.wav");
  CHECK(resolve_audio_path(asr_path, back[1].audio_path) == "/abs/utt_1.wav");

  const std::string ser_path = "/tmp/ettk_ser_manifest.tsv";
  std::vector<EmotionRecord> records;
  EmotionRecord r;
  r.audio_path = "utt_00000.wav";
  r.duration_s = 0.9;
  r.session = 3;
  r.speaker = "spk05";
  r.annotator_labels = {"anger", "anger", "excited"};
  records.push_back(r);
  write_ser_manifest(ser_path, records);
  auto rback = read_ser_manifest(ser_path);
  REQUIRE(rback.size() == 1);
  CHECK(rback[0].session == 3);
  CHECK(rback[0].speaker == "spk05");
  REQUIRE(rback[0].annotator_labels.size() == 3);
  CHECK(rback[0].annotator_labels[2] == "excited");
}
