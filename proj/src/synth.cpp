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

#include "ettk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ettk/rng.hpp"

namespace ettk {
namespace {

constexpr std::uint64_t kAsrStream = 0x41535221;      // per-utterance ASR draws
constexpr std::uint64_t kSerStream = 0x53455221;      // per-utterance SER draws
constexpr std::uint64_t kSpeakerStream = 0x53504b52;  // per-speaker traits

/// Append a harmonic tone with a short attack/decay ramp. The phase is kept
/// continuous across a frequency contour.
void render_tone(std::vector<float>& out, double freq_start, double freq_end, double amplitude,
                 double am_rate, double am_phase, Index samples) {
  const Index ramp = kSampleRate / 100;  // 10 ms
  double phase = 0.0;
  for (Index i = 0; i < samples; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(std::max<Index>(samples - 1, 1));
    const double freq = freq_start + (freq_end - freq_start) * frac;
    phase += 2.0 * M_PI * freq / kSampleRate;
    double s = 0.0;
    for (int h = 1; h <= 3; ++h) s += std::sin(phase * h) / static_cast<double>(h);
    double env = 1.0;
    if (i < ramp) env = static_cast<double>(i) / static_cast<double>(ramp);
    if (samples - 1 - i < ramp) {
      env = std::min(env, static_cast<double>(samples - 1 - i) / static_cast<double>(ramp));
    }
    double am = 1.0;
    if (am_rate > 0.0) {
      const double t = static_cast<double>(out.size()) / kSampleRate;
      am = 0.7 + 0.3 * std::sin(2.0 * M_PI * am_rate * t + am_phase);
    }
    out.push_back(static_cast<float>(amplitude * env * am * s / 1.8333));  // 1+1/2+1/3
  }
}

void append_silence(std::vector<float>& out, Index samples) {
  out.insert(out.end(), static_cast<std::size_t>(samples), 0.0f);
}

/// Scale white noise so that 10 log10(E_signal / E_noise) == snr_db over the
/// whole clip, then return signal + noise clamped to [-1, 1].
SynthParts mix_with_noise(std::vector<float> clean, double snr_db, Rng& rng) {
  SynthParts parts;
  parts.clean = std::move(clean);
  parts.noise.resize(parts.clean.size());
  double clean_energy = 0.0;
  for (float s : parts.clean) clean_energy += static_cast<double>(s) * static_cast<double>(s);
  double noise_energy = 0.0;
  for (auto& n : parts.noise) {
    n = static_cast<float>(rng.uniform(-1.0, 1.0));
    noise_energy += static_cast<double>(n) * static_cast<double>(n);
  }
  if (clean_energy > 0.0 && noise_energy > 0.0) {
    const double scale = std::sqrt(clean_energy / (noise_energy * std::pow(10.0, snr_db / 10.0)));
    for (auto& n : parts.noise) n = static_cast<float>(n * scale);
  }
  parts.clip.sample_rate = kSampleRate;
  parts.clip.samples.resize(parts.clean.size());
  for (std::size_t i = 0; i < parts.clean.size(); ++i) {
    parts.clip.samples[i] =
        std::clamp(parts.clean[i] + parts.noise[i], -1.0f, 1.0f);
  }
  return parts;
}

std::string utt_name(Index index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "utt_%05lld.wav", static_cast<long long>(index));
  return buf;
}

}  // namespace

SynthAsrSpec SynthAsrSpec::defaults() {
  SynthAsrSpec spec;
  spec.vocab = {{"ba", 300.0, 420.0}, {"di", 560.0, 760.0}, {"go", 950.0, 1300.0}};
  return spec;
}

SynthParts synth_asr_utterance(const SynthAsrSpec& spec, std::uint64_t seed, Index index) {
  if (spec.vocab.empty()) throw ContractError("synth_asr_utterance: empty vocabulary");
  Rng rng = Rng::derive(seed, kAsrStream, static_cast<std::uint64_t>(index));

  const Index words =
      spec.min_words + static_cast<Index>(rng.uniform_index(spec.max_words - spec.min_words + 1));
  const double jitter = rng.uniform(0.97, 1.03);

  std::vector<float> clean;
  append_silence(clean, static_cast<Index>(rng.uniform(0.06, 0.12) * kSampleRate));
  std::string transcript;
  for (Index w = 0; w < words; ++w) {
    const auto& word = spec.vocab[static_cast<std::size_t>(rng.uniform_index(
        static_cast<Index>(spec.vocab.size())))];
    if (w) {
      transcript.push_back(' ');
      append_silence(clean, static_cast<Index>(rng.uniform(0.09, 0.14) * kSampleRate));
    }
    transcript += word.text;
    const double amp = spec.amplitude * rng.uniform(0.8, 1.2);
    const Index seg = static_cast<Index>(0.13 * kSampleRate);
    render_tone(clean, word.freq_a * jitter, word.freq_a * jitter, amp, 0.0, 0.0, seg);
    render_tone(clean, word.freq_b * jitter, word.freq_b * jitter, amp, 0.0, 0.0, seg);
  }
  append_silence(clean, static_cast<Index>(rng.uniform(0.06, 0.12) * kSampleRate));

  SynthParts parts = mix_with_noise(std::move(clean), spec.snr_db, rng);
  parts.transcript = std::move(transcript);
  return parts;
}

SynthAsrCorpus synth_asr_corpus(const SynthAsrSpec& spec, std::uint64_t seed) {
  SynthAsrCorpus corpus;
  for (Index i = 0; i < spec.num_utterances; ++i) {
    SynthParts parts = synth_asr_utterance(spec, seed, i);
    AsrManifestEntry entry;
    entry.audio_path = utt_name(i);
    entry.duration_s = parts.clip.duration_s();
    entry.transcript = parts.transcript;
    corpus.entries.push_back(std::move(entry));
    corpus.clips.push_back(std::move(parts.clip));
  }
  return corpus;
}

SynthSerSpec SynthSerSpec::defaults() {
  SynthSerSpec spec;
  spec.classes = {
      {"neutral", 150.0, 210.0, 0.5, 1.5, 0.22, 0.38, 0.0},
      {"anger", 260.0, 380.0, 7.0, 11.0, 0.50, 0.80, 0.15},
      {"happiness", 230.0, 330.0, 3.0, 6.0, 0.30, 0.55, 0.30},
      {"sadness", 95.0, 145.0, 0.5, 1.5, 0.09, 0.17, -0.25},
  };
  return spec;
}

SynthSerCorpus synth_ser_corpus(const SynthSerSpec& spec, std::uint64_t seed) {
  if (spec.classes.empty()) throw ContractError("synth_ser_corpus: no classes");
  if (spec.num_sessions < 1) throw ContractError("synth_ser_corpus: need at least one session");
  const Index n_classes = static_cast<Index>(spec.classes.size());
  const Index n_speakers = 2 * spec.num_sessions;
  const Index total = n_classes * spec.clips_per_class;

  // Per-speaker traits, stable in the corpus seed.
  std::vector<double> f0_mult, gain;
  for (Index s = 0; s < n_speakers; ++s) {
    Rng srng = Rng::derive(seed, kSpeakerStream, static_cast<std::uint64_t>(s));
    f0_mult.push_back(srng.uniform(0.92, 1.12));
    gain.push_back(srng.uniform(0.85, 1.15));
  }

  SynthSerCorpus corpus;
  for (Index i = 0; i < total; ++i) {
    Rng rng = Rng::derive(seed, kSerStream, static_cast<std::uint64_t>(i));
    const Index class_idx = i % n_classes;
    const auto& cls = spec.classes[static_cast<std::size_t>(class_idx)];
    const Index session = (i / n_classes) % spec.num_sessions;       // 0-based
    const Index speaker = 2 * session + (i / (n_classes * spec.num_sessions)) % 2;

    const double duration = rng.uniform(spec.duration_lo, spec.duration_hi);
    const Index samples = static_cast<Index>(duration * kSampleRate);
    const double f0 = std::clamp(rng.uniform(cls.f0_lo, cls.f0_hi) * f0_mult[static_cast<std::size_t>(speaker)],
                                 80.0, 460.0);
    const double am_rate = rng.uniform(cls.am_lo, cls.am_hi);
    const double amp = rng.uniform(cls.amp_lo, cls.amp_hi) * gain[static_cast<std::size_t>(speaker)];
    const double f_start = f0 * (1.0 - 0.5 * cls.contour);
    const double f_end = f0 * (1.0 + 0.5 * cls.contour);

    std::vector<float> clean;
    render_tone(clean, f_start, f_end, amp, am_rate, rng.uniform(0.0, 2.0 * M_PI), samples);
    SynthParts parts = mix_with_noise(std::move(clean), spec.snr_db, rng);

    EmotionRecord rec;
    rec.audio_path = utt_name(i);
    rec.duration_s = parts.clip.duration_s();
    rec.session = static_cast<int>(session + 1);
    char spk[16];
    std::snprintf(spk, sizeof(spk), "spk%02lld", static_cast<long long>(speaker + 1));
    rec.speaker = spk;

    // Three annotators: two agree by construction, the third is noisy and
    // occasionally writes Excited for Happiness (exercising the merge rule).
    rec.annotator_labels = {cls.label, cls.label};
    if (rng.bernoulli(0.35)) {
      Index other = rng.uniform_index(n_classes);
      rec.annotator_labels.push_back(spec.classes[static_cast<std::size_t>(other)].label);
    } else if (cls.label == "happiness" && rng.bernoulli(0.4)) {
      rec.annotator_labels.push_back("excited");
    } else {
      rec.annotator_labels.push_back(cls.label);
    }

    corpus.records.push_back(std::move(rec));
    corpus.clips.push_back(std::move(parts.clip));
  }
  return corpus;
}

std::string write_asr_corpus(const std::string& dir, const SynthAsrSpec& spec, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  SynthAsrCorpus corpus = synth_asr_corpus(spec, seed);
  for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
    save_wav(dir + "/" + corpus.entries[i].audio_path, corpus.clips[i]);
  }
  const std::string manifest = dir + "/manifest.tsv";
  write_asr_manifest(manifest, corpus.entries);
  return manifest;
}

std::string write_ser_corpus(const std::string& dir, const SynthSerSpec& spec, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  SynthSerCorpus corpus = synth_ser_corpus(spec, seed);
  for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
    save_wav(dir + "/" + corpus.records[i].audio_path, corpus.clips[i]);
  }
  const std::string manifest = dir + "/manifest.tsv";
  write_ser_manifest(manifest, corpus.records);
  return manifest;
}

}  // namespace ettk
