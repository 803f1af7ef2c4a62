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

#ifndef ETTK_FEATURES_HPP_
#define ETTK_FEATURES_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ettk/audio.hpp"
#include "ettk/rng.hpp"
#include "ettk/tensor.hpp"

namespace ettk {

// 20 ms Hamming windows with 10 ms stride at 16 kHz; 320-point FFT keeps
// exactly 161 one-sided power bins.
inline constexpr Index kFrameLength = 320;
inline constexpr Index kFrameHop = 160;
inline constexpr Index kSpectrogramBins = 161;
inline constexpr Index kNumMelFilters = 26;
inline constexpr Index kNumMfcc = 13;
inline constexpr Index kSerFeatureDim = 2 * kNumMfcc + 1;  // MFCC + deltas + pitch
inline constexpr Index kPitchSmoothingFrames = 15;
inline constexpr double kPitchMinHz = 50.0;
inline constexpr double kPitchMaxHz = 500.0;
inline constexpr double kVoicingThreshold = 0.3;
inline constexpr double kLoudnessFloor = 1e-10;

enum class FeatureKind { kPowerSpec, kMfccDeltaPitch, kLoudness };

/// Per-frame feature matrix at 100 frames/s.
template <typename S>
struct FeatureSequence {
  Tensor<S> frames;  // [T x D]
  double frame_rate = 16000.0 / kFrameHop;
  FeatureKind kind = FeatureKind::kPowerSpec;

  Index num_frames() const { return frames.extent(0); }
  Index dim() const { return frames.extent(1); }
};

/// Raw estimates (0 = unvoiced, else clamped to [50, 500] Hz) plus the
/// 15-frame moving-average track used as the SER pitch feature.
struct PitchTrack {
  std::vector<double> raw_f0;
  std::vector<double> smoothed;
  Index smoothing_frames = kPitchSmoothingFrames;
};

namespace detail {

inline void require_framable(const AudioClip& clip, const char* who) {
  if (clip.sample_rate != kSampleRate) {
    throw ContractError(std::string(who) + ": clip at " + std::to_string(clip.sample_rate) +
                        " Hz, expected " + std::to_string(kSampleRate));
  }
  if (static_cast<Index>(clip.samples.size()) < kFrameLength) {
    throw ContractError(std::string(who) + ": clip shorter than one analysis window");
  }
}

inline Index frame_count(const AudioClip& clip) {
  return 1 + (static_cast<Index>(clip.samples.size()) - kFrameLength) / kFrameHop;
}

inline const Eigen::VectorXd& hamming_window() {
  static const Eigen::VectorXd w = [] {
    Eigen::VectorXd v(kFrameLength);
    for (Index n = 0; n < kFrameLength; ++n) {
      v[n] = 0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(n) /
                                    static_cast<double>(kFrameLength - 1));
    }
    return v;
  }();
  return w;
}

// Real DFT as two dense GEMMs against fixed basis tables; for a 320-point
// window this is faster than it sounds and keeps Eigen the only math dep.
inline const Eigen::MatrixXd& dft_cos_table() {
  static const Eigen::MatrixXd table = [] {
    Eigen::MatrixXd m(kFrameLength, kSpectrogramBins);
    for (Index n = 0; n < kFrameLength; ++n) {
      for (Index k = 0; k < kSpectrogramBins; ++k) {
        m(n, k) = std::cos(2.0 * M_PI * static_cast<double>(k) * static_cast<double>(n) /
                           static_cast<double>(kFrameLength));
      }
    }
    return m;
  }();
  return table;
}

inline const Eigen::MatrixXd& dft_sin_table() {
  static const Eigen::MatrixXd table = [] {
    Eigen::MatrixXd m(kFrameLength, kSpectrogramBins);
    for (Index n = 0; n < kFrameLength; ++n) {
      for (Index k = 0; k < kSpectrogramBins; ++k) {
        m(n, k) = std::sin(2.0 * M_PI * static_cast<double>(k) * static_cast<double>(n) /
                           static_cast<double>(kFrameLength));
      }
    }
    return m;
  }();
  return table;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular mel filterbank, 26 filters spanning 0-8 kHz (HTK mel scale).
inline const Eigen::MatrixXd& mel_filterbank() {
  static const Eigen::MatrixXd bank = [] {
    const double mel_max = hz_to_mel(static_cast<double>(kSampleRate) / 2.0);
    std::vector<double> edges(kNumMelFilters + 2);
    for (Index i = 0; i < kNumMelFilters + 2; ++i) {
      const double hz = mel_to_hz(mel_max * static_cast<double>(i) /
                                  static_cast<double>(kNumMelFilters + 1));
      edges[static_cast<std::size_t>(i)] =
          hz / (static_cast<double>(kSampleRate) / 2.0) * static_cast<double>(kSpectrogramBins - 1);
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kNumMelFilters, kSpectrogramBins);
    for (Index f = 0; f < kNumMelFilters; ++f) {
      const double lo = edges[static_cast<std::size_t>(f)];
      const double mid = edges[static_cast<std::size_t>(f + 1)];
      const double hi = edges[static_cast<std::size_t>(f + 2)];
      for (Index k = 0; k < kSpectrogramBins; ++k) {
        const double x = static_cast<double>(k);
        if (x > lo && x < mid) {
          m(f, k) = (x - lo) / (mid - lo);
        } else if (x >= mid && x < hi) {
          m(f, k) = (hi - x) / (hi - mid);
        }
      }
    }
    return m;
  }();
  return bank;
}

/// Orthonormal DCT-II, first kNumMfcc rows.
inline const Eigen::MatrixXd& dct_table() {
  static const Eigen::MatrixXd table = [] {
    Eigen::MatrixXd m(kNumMfcc, kNumMelFilters);
    const double norm0 = std::sqrt(1.0 / static_cast<double>(kNumMelFilters));
    const double norm = std::sqrt(2.0 / static_cast<double>(kNumMelFilters));
    for (Index j = 0; j < kNumMfcc; ++j) {
      for (Index i = 0; i < kNumMelFilters; ++i) {
        m(j, i) = (j == 0 ? norm0 : norm) *
                  std::cos(M_PI * static_cast<double>(j) * (static_cast<double>(i) + 0.5) /
                           static_cast<double>(kNumMelFilters));
      }
    }
    return m;
  }();
  return table;
}

/// Windowed frames as a [T x 320] matrix.
inline Eigen::MatrixXd windowed_frames(const AudioClip& clip) {
  const Index frames = frame_count(clip);
  const Eigen::VectorXd& window = hamming_window();
  Eigen::MatrixXd out(frames, kFrameLength);
  for (Index t = 0; t < frames; ++t) {
    for (Index n = 0; n < kFrameLength; ++n) {
      out(t, n) = static_cast<double>(clip.samples[static_cast<std::size_t>(t * kFrameHop + n)]) *
                  window[n];
    }
  }
  return out;
}

inline Eigen::MatrixXd power_frames(const AudioClip& clip) {
  const Eigen::MatrixXd frames = windowed_frames(clip);
  const Eigen::MatrixXd re = frames * dft_cos_table();
  const Eigen::MatrixXd im = frames * dft_sin_table();
  return re.array().square() + im.array().square();
}

}  // namespace detail

/// Power spectrogram: |X_k|^2 for k = 0..160 per 20 ms Hamming frame.
template <typename S>
FeatureSequence<S> power_spectrogram(const AudioClip& clip) {
  detail::require_framable(clip, "power_spectrogram");
  const Eigen::MatrixXd power = detail::power_frames(clip);
  FeatureSequence<S> out;
  out.kind = FeatureKind::kPowerSpec;
  out.frames = Tensor<S>(Shape{power.rows(), power.cols()});
  for (Index t = 0; t < power.rows(); ++t) {
    for (Index k = 0; k < power.cols(); ++k) out.frames.at(t, k) = static_cast<S>(power(t, k));
  }
  return out;
}

/// 13 MFCCs (including c0) plus +-2-frame regression deltas: [T x 26].
template <typename S>
FeatureSequence<S> mfcc_with_deltas(const AudioClip& clip) {
  detail::require_framable(clip, "mfcc_with_deltas");
  const Eigen::MatrixXd power = detail::power_frames(clip);
  Eigen::MatrixXd mel = power * detail::mel_filterbank().transpose();
  mel = mel.array().max(1e-10).log();
  const Eigen::MatrixXd coeffs = mel * detail::dct_table().transpose();  // [T x 13]

  const Index frames = coeffs.rows();
  FeatureSequence<S> out;
  out.kind = FeatureKind::kMfccDeltaPitch;
  out.frames = Tensor<S>(Shape{frames, 2 * kNumMfcc});
  auto clamp_t = [frames](Index t) { return std::clamp<Index>(t, 0, frames - 1); };
  for (Index t = 0; t < frames; ++t) {
    for (Index j = 0; j < kNumMfcc; ++j) {
      out.frames.at(t, j) = static_cast<S>(coeffs(t, j));
      double delta = 0.0;
      for (Index n = 1; n <= 2; ++n) {
        delta += static_cast<double>(n) * (coeffs(clamp_t(t + n), j) - coeffs(clamp_t(t - n), j));
      }
      out.frames.at(t, kNumMfcc + j) = static_cast<S>(delta / 10.0);  // 2 * (1^2 + 2^2)
    }
  }
  return out;
}

/// Centered moving average of odd width; the window is truncated at the
/// edges and divided by the actual member count. Unvoiced zeros are averaged
/// in, so an isolated value f spreads across the window with peak f/width.
inline std::vector<double> moving_average(const std::vector<double>& values, Index width) {
  if (width < 1 || width % 2 == 0) throw ContractError("moving_average: width must be odd and positive");
  const Index n = static_cast<Index>(values.size());
  const Index half = width / 2;
  std::vector<double> out(values.size(), 0.0);
  for (Index t = 0; t < n; ++t) {
    const Index lo = std::max<Index>(0, t - half);
    const Index hi = std::min<Index>(n - 1, t + half);
    double acc = 0.0;
    for (Index i = lo; i <= hi; ++i) acc += values[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(t)] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// Autocorrelation F0 with a 0.3 voicing threshold, octave correction, and
/// parabolic lag refinement, then a centered 15-frame moving average over the
/// raw track (zeros included, so an isolated estimate spreads to f/15).
inline PitchTrack pitch_track(const AudioClip& clip) {
  detail::require_framable(clip, "pitch_track");
  const Index frames = detail::frame_count(clip);
  const Index n = static_cast<Index>(clip.samples.size());
  const Index lag_min = static_cast<Index>(static_cast<double>(kSampleRate) / kPitchMaxHz);  // 32
  const Index lag_max = static_cast<Index>(static_cast<double>(kSampleRate) / kPitchMinHz);  // 320
  const Index analysis = 2 * kFrameLength;  // 40 ms captures two 50 Hz periods

  PitchTrack track;
  track.raw_f0.assign(static_cast<std::size_t>(frames), 0.0);

  std::vector<double> corr(static_cast<std::size_t>(lag_max + 1), 0.0);
  for (Index t = 0; t < frames; ++t) {
    std::fill(corr.begin(), corr.end(), 0.0);
    const Index start = t * kFrameHop;
    const Index len = std::min(analysis, n - start);
    const float* x = clip.samples.data() + start;

    double energy = 0.0;
    for (Index i = 0; i < len; ++i) energy += static_cast<double>(x[i]) * static_cast<double>(x[i]);
    if (energy < 1e-9) continue;  // silence: unvoiced

    double best_r = 0.0;
    Index best_lag = 0;
    for (Index lag = lag_min; lag <= lag_max; ++lag) {
      const Index m = len - lag;
      if (m < kFrameHop) break;  // too little overlap to trust
      double dot = 0.0, e0 = 0.0, e1 = 0.0;
      for (Index i = 0; i < m; ++i) {
        const double a = static_cast<double>(x[i]);
        const double b = static_cast<double>(x[i + lag]);
        dot += a * b;
        e0 += a * a;
        e1 += b * b;
      }
      const double denom = std::sqrt(e0 * e1);
      const double r = denom > 0.0 ? dot / denom : 0.0;
      corr[static_cast<std::size_t>(lag)] = r;
      if (r > best_r) {
        best_r = r;
        best_lag = lag;
      }
    }
    if (best_lag == 0 || best_r < kVoicingThreshold) continue;

    // Prefer the smallest sub-multiple lag with comparable correlation to
    // avoid locking onto a period multiple.
    for (Index div = static_cast<Index>(best_lag / lag_min); div >= 2; --div) {
      const Index cand = best_lag / div;
      if (cand < lag_min) continue;
      Index local = 0;
      double local_r = -1.0;
      for (Index lag = std::max(lag_min, cand - 2); lag <= std::min(lag_max, cand + 2); ++lag) {
        if (corr[static_cast<std::size_t>(lag)] > local_r) {
          local_r = corr[static_cast<std::size_t>(lag)];
          local = lag;
        }
      }
      if (local_r >= 0.9 * best_r) {
        best_lag = local;
        best_r = local_r;
        break;
      }
    }

    // Parabolic interpolation around the peak for sub-sample lag.
    double lag_refined = static_cast<double>(best_lag);
    if (best_lag > lag_min && best_lag < lag_max) {
      const double rm = corr[static_cast<std::size_t>(best_lag - 1)];
      const double r0 = corr[static_cast<std::size_t>(best_lag)];
      const double rp = corr[static_cast<std::size_t>(best_lag + 1)];
      const double denom = rm - 2.0 * r0 + rp;
      if (std::abs(denom) > 1e-12) {
        const double shift = 0.5 * (rm - rp) / denom;
        if (std::abs(shift) <= 1.0) lag_refined += shift;
      }
    }
    const double f0 = std::clamp(static_cast<double>(kSampleRate) / lag_refined, kPitchMinHz, kPitchMaxHz);
    track.raw_f0[static_cast<std::size_t>(t)] = f0;
  }

  track.smoothed = moving_average(track.raw_f0, kPitchSmoothingFrames);
  return track;
}

/// Per-frame RMS energy in dB (20 log10(rms + 1e-10)), spectrogram framing.
template <typename S>
FeatureSequence<S> loudness(const AudioClip& clip) {
  detail::require_framable(clip, "loudness");
  const Index frames = detail::frame_count(clip);
  FeatureSequence<S> out;
  out.kind = FeatureKind::kLoudness;
  out.frames = Tensor<S>(Shape{frames, 1});
  for (Index t = 0; t < frames; ++t) {
    double acc = 0.0;
    for (Index i = 0; i < kFrameLength; ++i) {
      const double s = static_cast<double>(clip.samples[static_cast<std::size_t>(t * kFrameHop + i)]);
      acc += s * s;
    }
    const double rms = std::sqrt(acc / static_cast<double>(kFrameLength));
    out.frames.at(t, 0) = static_cast<S>(20.0 * std::log10(rms + kLoudnessFloor));
  }
  return out;
}

/// Per-dimension, per-utterance (x - mean) / max(stddev, 1e-8). Population
/// standard deviation; a single frame or a constant dimension maps to zeros.
template <typename S>
Tensor<S> z_normalize(const Tensor<S>& frames) {
  if (frames.rank() != 2) throw DimensionError("z_normalize: [T x D] input required");
  const Index t_len = frames.extent(0);
  const Index dim = frames.extent(1);
  if (t_len < 1) throw ContractError("z_normalize: empty sequence");
  Tensor<S> out(frames.shape());
  for (Index d = 0; d < dim; ++d) {
    double mean = 0.0;
    for (Index t = 0; t < t_len; ++t) mean += static_cast<double>(frames.at(t, d));
    mean /= static_cast<double>(t_len);
    double var = 0.0;
    for (Index t = 0; t < t_len; ++t) {
      const double diff = static_cast<double>(frames.at(t, d)) - mean;
      var += diff * diff;
    }
    const double sd = std::max(std::sqrt(var / static_cast<double>(t_len)), 1e-8);
    for (Index t = 0; t < t_len; ++t) {
      out.at(t, d) = static_cast<S>((static_cast<double>(frames.at(t, d)) - mean) / sd);
    }
  }
  return out;
}

template <typename S>
FeatureSequence<S> z_normalize(const FeatureSequence<S>& seq) {
  FeatureSequence<S> out;
  out.kind = seq.kind;
  out.frame_rate = seq.frame_rate;
  out.frames = z_normalize(seq.frames);
  return out;
}

inline constexpr double kTempoMin = 0.85;
inline constexpr double kTempoMax = 1.15;
inline constexpr double kGainMinDb = -3.0;
inline constexpr double kGainMaxDb = 6.0;

/// Tempo change by linear-interpolation resampling (output length
/// round(N/tempo)) followed by gain in dB, clamped to [-1, 1]. Parameters are
/// restricted to the training recipe's ranges.
inline AudioClip augment(const AudioClip& clip, double tempo, double gain_db) {
  if (tempo < kTempoMin || tempo > kTempoMax) {
    throw ContractError("augment: tempo " + std::to_string(tempo) + " outside [" +
                        std::to_string(kTempoMin) + ", " + std::to_string(kTempoMax) + "]");
  }
  if (gain_db < kGainMinDb || gain_db > kGainMaxDb) {
    throw ContractError("augment: gain " + std::to_string(gain_db) + " dB outside [" +
                        std::to_string(kGainMinDb) + ", " + std::to_string(kGainMaxDb) + "]");
  }
  const Index n = static_cast<Index>(clip.samples.size());
  const Index out_len = static_cast<Index>(std::llround(static_cast<double>(n) / tempo));
  const double gain = std::pow(10.0, gain_db / 20.0);
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(static_cast<std::size_t>(out_len));
  for (Index j = 0; j < out_len; ++j) {
    const double pos = static_cast<double>(j) * tempo;
    const Index i0 = std::min<Index>(static_cast<Index>(pos), n - 1);
    const Index i1 = std::min<Index>(i0 + 1, n - 1);
    const double frac = pos - static_cast<double>(i0);
    const double s = (1.0 - frac) * static_cast<double>(clip.samples[static_cast<std::size_t>(i0)]) +
                     frac * static_cast<double>(clip.samples[static_cast<std::size_t>(i1)]);
    out.samples[static_cast<std::size_t>(j)] =
        static_cast<float>(std::clamp(s * gain, -1.0, 1.0));
  }
  return out;
}

/// Recipe draw: tempo uniform in [0.85, 1.15], gain uniform in [-3, +6] dB.
inline AudioClip augment_random(const AudioClip& clip, Rng& rng) {
  const double tempo = rng.uniform(kTempoMin, kTempoMax);
  const double gain_db = rng.uniform(kGainMinDb, kGainMaxDb);
  return augment(clip, tempo, gain_db);
}

/// SER input features: 13 MFCC + 13 deltas + smoothed pitch, z-normalized
/// per utterance: [T x 27].
template <typename S>
Tensor<S> ser_features(const AudioClip& clip) {
  FeatureSequence<S> mfcc = mfcc_with_deltas<S>(clip);
  PitchTrack pitch = pitch_track(clip);
  const Index frames = mfcc.num_frames();
  Tensor<S> stacked(Shape{frames, kSerFeatureDim});
  for (Index t = 0; t < frames; ++t) {
    for (Index j = 0; j < 2 * kNumMfcc; ++j) stacked.at(t, j) = mfcc.frames.at(t, j);
    stacked.at(t, 2 * kNumMfcc) = static_cast<S>(pitch.smoothed[static_cast<std::size_t>(t)]);
  }
  return z_normalize(stacked);
}

/// ASR input features: z-normalized power spectrogram, [T x 161].
template <typename S>
Tensor<S> asr_features(const AudioClip& clip) {
  return z_normalize(power_spectrogram<S>(clip).frames);
}

}  // namespace ettk

#endif  // ETTK_FEATURES_HPP_
