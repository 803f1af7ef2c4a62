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

#ifndef ETTK_AUDIO_HPP_
#define ETTK_AUDIO_HPP_

#include <string>
#include <vector>

#include "ettk/common.hpp"

namespace ettk {

inline constexpr int kSampleRate = 16000;

/// Mono audio at a fixed sample rate, samples in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

/// Read a RIFF/WAVE file. Accepts PCM-16 (scaled by 1/32768) and IEEE
/// float-32; multichannel input is averaged to mono. Any rate other than
/// 16 kHz is an error; the toolkit never resamples implicitly.
AudioClip load_wav(const std::string& path);

/// Write a mono IEEE float-32 WAV at 16 kHz.
void save_wav(const std::string& path, const AudioClip& clip);

}  // namespace ettk

#endif  // ETTK_AUDIO_HPP_
