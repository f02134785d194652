// Copyright 2026 The bal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bal/common.hpp"

namespace bal::audio {

inline constexpr int kSampleRate = 16000;
inline constexpr std::size_t kClipLength = 16000;
inline constexpr std::size_t kFftSize = 2048;
inline constexpr std::size_t kHopLength = 512;
inline constexpr std::size_t kMelBands = 32;
// 1 + floor(kClipLength / kHopLength) with centered frames.
inline constexpr std::size_t kFrames = 1 + kClipLength / kHopLength;
inline constexpr double kLogFloor = 1e-6;

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
  std::string source_id;
};

// Rows are mel bands (low to high), columns are frames.
struct MelSpectrogram {
  Matrix values;
  std::string source_id;

  // Row-major flattening (band-major), the layout used by the feature cache.
  Vector flattened() const;
};

// ---------------------------------------------------------------- WAV

struct WavData {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  std::vector<double> mono;  // channels averaged, scaled to [-1, 1]
};

// Reads RIFF/WAVE PCM (8/16/24/32-bit integer or 32-bit float).
WavData read_wav(const std::filesystem::path& path);
WavData decode_wav(std::span<const std::uint8_t> bytes, const std::string& name);

// 16-bit PCM mono encoding; samples are clipped to [-1, 1].
std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate);
void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate);

// ---------------------------------------------------------------- length / rate

// Band-limited (Hann-windowed sinc) resampling from `from_rate` to `to_rate`.
std::vector<double> resample(std::span<const double> samples, int from_rate, int to_rate);

// Linear interpolation reading the input at `rate` input samples per output
// sample; output length round(n / rate).
std::vector<double> resample_linear(std::span<const double> samples, double rate);

// Symmetric zero padding (extra sample goes to the end) or center crop.
std::vector<double> fit_length(std::span<const double> samples, std::size_t length);

AudioClip ingest_wav(const std::filesystem::path& path, int target_rate = kSampleRate);

// ---------------------------------------------------------------- features

double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelFilterbank {
  std::vector<double> center_hz;  // kMelBands entries
  Matrix weights;                 // kMelBands x (kFftSize/2 + 1)
};

// HTK mel scale, triangular filters with unit peak, 0..8000 Hz.
const MelFilterbank& mel_filterbank();

MelSpectrogram mel_spectrogram(const AudioClip& clip);

// ---------------------------------------------------------------- augmentation

struct AugmentationConfig {
  double apply_prob = 0.5;
  std::array<double, 2> amplitude_range{0.8, 1.2};
  std::array<double, 2> speed_range{0.8, 1.2};
  std::array<double, 2> shift_range_ms{-250.0, 250.0};
  std::array<double, 2> snr_range_db{0.0, 40.0};
  // Per-augmentation switches; a disabled augmentation is never applied.
  bool amplitude = true;
  bool speed = true;
  bool shift = true;
  bool noise = true;
  // Arbitrary-length background recordings; a random segment is mixed in.
  std::vector<AudioClip> noise_bank;

  void validate() const;
  static AugmentationConfig disabled();
};

struct AugmentRecord {
  bool amplitude_applied = false;
  double amplitude_factor = 1.0;
  bool speed_applied = false;
  double speed_factor = 1.0;
  bool shift_applied = false;
  long shift_samples = 0;
  bool noise_applied = false;
  double snr_db = 0.0;
  std::vector<std::string> warnings;
};

struct AugmentResult {
  AudioClip clip;
  AugmentRecord record;
};

void scale_amplitude(std::vector<double>& samples, double factor);
// Plays the clip `factor` times faster, then pads or crops back to the input length.
std::vector<double> change_speed(std::span<const double> samples, double factor);
// Positive shift delays the signal; vacated samples are zero.
std::vector<double> time_shift(std::span<const double> samples, long shift);
// Adds `noise` (already length-matched) rescaled so that signal/noise power is snr_db.
// Returns false without touching `signal` when either power is zero.
bool mix_noise(std::vector<double>& signal, std::span<const double> noise, double snr_db);

double mean_power(std::span<const double> samples);

// Amplitude -> speed -> shift -> noise, each with probability apply_prob.
// Pure function of its arguments.
AugmentResult augment(const AudioClip& clip, const AugmentationConfig& cfg, std::uint64_t seed);

}  // namespace bal::audio
