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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "bal/audio.hpp"
#include "oracles.hpp"

using namespace bal;
using namespace bal::audio;

namespace {

std::vector<double> gaussian(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = N(rng);
  return x;
}

AudioClip clip_of(std::vector<double> x) {
  AudioClip c;
  c.samples = std::move(x);
  return c;
}

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}
void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

// Minimal RIFF/WAVE writer for formats the library does not encode.
std::vector<std::uint8_t> wav_bytes(int format, int channels, int bits, int rate,
                                    const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> b;
  for (char c : std::string("RIFF")) b.push_back(c);
  put32(b, 36 + static_cast<std::uint32_t>(data.size()));
  for (char c : std::string("WAVEfmt ")) b.push_back(c);
  put32(b, 16);
  put16(b, static_cast<std::uint16_t>(format));
  put16(b, static_cast<std::uint16_t>(channels));
  put32(b, static_cast<std::uint32_t>(rate));
  put32(b, static_cast<std::uint32_t>(rate * channels * bits / 8));
  put16(b, static_cast<std::uint16_t>(channels * bits / 8));
  put16(b, static_cast<std::uint16_t>(bits));
  for (char c : std::string("data")) b.push_back(c);
  put32(b, static_cast<std::uint32_t>(data.size()));
  b.insert(b.end(), data.begin(), data.end());
  return b;
}

AugmentationConfig only(bool amplitude, bool speed, bool shift, bool noise) {
  AugmentationConfig cfg;
  cfg.apply_prob = 1.0;
  cfg.amplitude = amplitude;
  cfg.speed = speed;
  cfg.shift = shift;
  cfg.noise = noise;
  return cfg;
}

}  // namespace

// ---------------------------------------------------------------- WAV

TEST_CASE("16-bit WAV round-trips within quantization") {
  const auto x = oracle::sine(440.0, 16000.0, 1600, 0.7);
  const auto bytes = encode_wav(x, 16000);
  const WavData w = decode_wav(bytes, "mem");
  CHECK(w.sample_rate == 16000);
  CHECK(w.channels == 1);
  CHECK(w.bits_per_sample == 16);
  REQUIRE(w.mono.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(w.mono[i] - x[i]) <= 2.0 / 32768.0);
}

TEST_CASE("encoding clips to [-1, 1]") {
  const std::vector<double> x{2.0, -3.0, 0.5};
  const WavData w = decode_wav(encode_wav(x, 8000), "mem");
  CHECK(w.mono[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(w.mono[1] == doctest::Approx(-1.0).epsilon(1e-4));
}

TEST_CASE("stereo 8-bit and float WAV decode to averaged mono") {
  // 8-bit unsigned stereo: (255, 1) averages to ~0.
  const WavData a = decode_wav(wav_bytes(1, 2, 8, 8000, {255, 1, 128, 128}), "u8");
  REQUIRE(a.mono.size() == 2);
  CHECK(std::abs(a.mono[0]) < 1e-2);
  CHECK(a.mono[1] == doctest::Approx(0.0));
  std::vector<std::uint8_t> data(8);
  const float f[2] = {0.25f, -0.5f};
  std::memcpy(data.data(), f, 8);
  const WavData b = decode_wav(wav_bytes(3, 1, 32, 16000, data), "f32");
  REQUIRE(b.mono.size() == 2);
  CHECK(b.mono[0] == doctest::Approx(0.25));
  CHECK(b.mono[1] == doctest::Approx(-0.5));
}

TEST_CASE("malformed WAV input raises an ingest error") {
  const std::vector<std::uint8_t> junk{'R', 'I', 'F', 'F', 0, 0};
  CHECK_THROWS_AS(decode_wav(junk, "junk"), IngestError);
  CHECK_THROWS_AS(read_wav("/nonexistent/file.wav"), IngestError);
}

// ---------------------------------------------------------------- length / rate

TEST_CASE("a 1 s clip at 16 kHz is unchanged") {
  const auto x = gaussian(16000, 0.1, 1);
  const auto y = fit_length(x, kClipLength);
  CHECK(y == x);
}

TEST_CASE("a 0.5 s clip is padded symmetrically") {
  const std::vector<double> x(8000, 0.3);
  const auto y = fit_length(x, kClipLength);
  REQUIRE(y.size() == 16000);
  for (std::size_t i = 0; i < 4000; ++i) CHECK(y[i] == 0.0);
  for (std::size_t i = 12000; i < 16000; ++i) CHECK(y[i] == 0.0);
  for (std::size_t i = 4000; i < 12000; ++i) CHECK(y[i] == 0.3);
  const auto odd = fit_length(std::vector<double>(3, 1.0), 6);
  CHECK(odd == std::vector<double>{0, 1, 1, 1, 0, 0});
  const auto crop = fit_length(std::vector<double>{1, 2, 3, 4, 5}, 3);
  CHECK(crop == std::vector<double>{2, 3, 4});
}

TEST_CASE("an 8 kHz tone resamples to 16000 samples with its 440 Hz peak") {
  const auto dir = std::filesystem::temp_directory_path() / "bal_test_audio";
  std::filesystem::create_directories(dir);
  write_wav(dir / "tone8k.wav", oracle::sine(440.0, 8000.0, 8000, 0.5), 8000);
  const AudioClip c = ingest_wav(dir / "tone8k.wav");
  REQUIRE(c.samples.size() == 16000);
  CHECK(c.sample_rate == 16000);
  CHECK(std::abs(oracle::peak_frequency(c.samples, 16000.0) - 440.0) <= 1.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("linear resampling length and speed change") {
  CHECK(resample_linear(std::vector<double>(1000, 0.0), 1.25).size() == 800);
  CHECK(change_speed(std::vector<double>(1000, 0.0), 0.8).size() == 1000);
  const auto x = oracle::sine(300.0, 16000.0, 16000);
  CHECK(std::abs(oracle::peak_frequency(change_speed(x, 1.2), 16000.0) - 360.0) <= 2.0);
}

TEST_CASE("time shift delays and zero-fills") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(time_shift(x, 1) == std::vector<double>{0, 1, 2, 3});
  CHECK(time_shift(x, -2) == std::vector<double>{3, 4, 0, 0});
  CHECK(time_shift(x, 9) == std::vector<double>{0, 0, 0, 0});
}

// ---------------------------------------------------------------- features

TEST_CASE("mel scale round-trips and filterbank centers match the HTK oracle") {
  for (double hz : {0.0, 100.0, 1000.0, 7999.0}) CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz).epsilon(1e-12));
  CHECK(hz_to_mel(1000.0) == doctest::Approx(2595.0 * std::log10(1.0 + 1000.0 / 700.0)));
  const auto expect = oracle::mel_centers(32, 0.0, 8000.0);
  const auto& fb = mel_filterbank();
  REQUIRE(fb.center_hz.size() == 32);
  for (std::size_t b = 0; b < 32; ++b) CHECK(fb.center_hz[b] == doctest::Approx(expect[b]).epsilon(1e-9));
  CHECK(fb.weights.rows() == 32);
  CHECK(fb.weights.cols() == static_cast<Eigen::Index>(kFftSize / 2 + 1));
  CHECK(fb.weights.minCoeff() >= 0.0);
}

TEST_CASE("spectrograms are 32 x 32 for any clip") {
  for (std::size_t n : {16000u, 8000u, 24000u, 100u}) {
    const AudioClip c = clip_of(fit_length(gaussian(n, 0.2, n), kClipLength));
    const MelSpectrogram s = mel_spectrogram(c);
    CHECK(s.values.rows() == 32);
    CHECK(s.values.cols() == 32);
    CHECK(s.flattened().size() == 1024);
  }
}

TEST_CASE("all-zero clip gives log(1e-6) everywhere") {
  const MelSpectrogram s = mel_spectrogram(clip_of(std::vector<double>(16000, 0.0)));
  CHECK((s.values.array() - std::log(1e-6)).abs().maxCoeff() == 0.0);
}

TEST_CASE("a 1 kHz tone peaks in the band centred nearest 1 kHz") {
  const MelSpectrogram s = mel_spectrogram(clip_of(oracle::sine(1000.0, 16000.0, 16000)));
  Eigen::Index best = 0;
  s.values.rowwise().sum().maxCoeff(&best);
  const auto centers = oracle::mel_centers(32, 0.0, 8000.0);
  std::size_t nearest = 0;
  for (std::size_t b = 1; b < centers.size(); ++b)
    if (std::abs(centers[b] - 1000.0) < std::abs(centers[nearest] - 1000.0)) nearest = b;
  CHECK(static_cast<std::size_t>(best) == nearest);
}

TEST_CASE("scaling the clip shifts the log-mel matrix by a constant") {
  const auto x = gaussian(16000, 10.0, 7);
  const MelSpectrogram base = mel_spectrogram(clip_of(x));
  for (double a : {0.8, 1.2, 3.0}) {
    auto y = x;
    scale_amplitude(y, a);
    const Matrix d = mel_spectrogram(clip_of(y)).values - base.values;
    double lo = 1e300, hi = -1e300;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (std::exp(base.values.data()[i]) < 1e3) continue;  // near the log floor
      lo = std::min(lo, d.data()[i]);
      hi = std::max(hi, d.data()[i]);
    }
    CHECK(hi - lo <= 1e-9);
    CHECK(lo == doctest::Approx(2.0 * std::log(a)).epsilon(1e-9));
  }
}

// ---------------------------------------------------------------- augmentation

TEST_CASE("apply_prob = 0 leaves the clip untouched") {
  AugmentationConfig cfg;
  cfg.apply_prob = 0.0;
  cfg.noise_bank = {clip_of(gaussian(20000, 0.1, 3))};
  const AudioClip c = clip_of(gaussian(16000, 0.3, 2));
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(augment(c, cfg, seed).clip.samples == c.samples);
  CHECK(augment(c, AugmentationConfig::disabled(), 5).clip.samples == c.samples);
}

TEST_CASE("amplitude-only augmentation multiplies every sample by u in [0.8, 1.2]") {
  const AudioClip c = clip_of(gaussian(16000, 0.3, 4));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const AugmentResult r = augment(c, only(true, false, false, false), seed);
    REQUIRE(r.record.amplitude_applied);
    const double u = r.record.amplitude_factor;
    CHECK(u >= 0.8);
    CHECK(u <= 1.2);
    for (std::size_t i = 0; i < c.samples.size(); i += 97) CHECK(r.clip.samples[i] == c.samples[i] * u);
  }
}

TEST_CASE("noise at 0 dB onto a unit-power signal has unit power") {
  auto x = gaussian(16000, 1.0, 5);
  scale_amplitude(x, 1.0 / std::sqrt(mean_power(x)));
  AugmentationConfig cfg = only(false, false, false, true);
  cfg.snr_range_db = {0.0, 0.0};
  cfg.noise_bank = {clip_of(gaussian(16000, 0.05, 6))};
  const AugmentResult r = augment(clip_of(x), cfg, 1);
  REQUIRE(r.record.noise_applied);
  std::vector<double> added(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) added[i] = r.clip.samples[i] - x[i];
  CHECK(std::abs(mean_power(added) - 1.0) <= 1e-6);
}

TEST_CASE("measured SNR matches the drawn target within 0.01 dB") {
  const AudioClip c = clip_of(oracle::sine(700.0, 16000.0, 16000, 0.4));
  AugmentationConfig cfg = only(false, false, false, true);
  cfg.noise_bank = {clip_of(gaussian(50000, 0.2, 8)), clip_of(gaussian(16000, 1.0, 9))};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const AugmentResult r = augment(c, cfg, seed);
    REQUIRE(r.record.noise_applied);
    std::vector<double> added(c.samples.size());
    for (std::size_t i = 0; i < added.size(); ++i) added[i] = r.clip.samples[i] - c.samples[i];
    const double snr = 10.0 * std::log10(mean_power(c.samples) / mean_power(added));
    CHECK(std::abs(snr - r.record.snr_db) <= 0.01);
    CHECK(r.record.snr_db >= 0.0);
    CHECK(r.record.snr_db <= 40.0);
  }
}

TEST_CASE("noise with an empty bank is skipped with a warning") {
  const AudioClip c = clip_of(gaussian(16000, 0.3, 10));
  const AugmentResult r = augment(c, only(false, false, false, true), 0);
  CHECK_FALSE(r.record.noise_applied);
  CHECK(r.record.warnings.size() == 1);
  CHECK(r.clip.samples == c.samples);
  std::vector<double> silent(100, 0.0);
  CHECK_FALSE(mix_noise(silent, std::vector<double>(100, 1.0), 10.0));
}

TEST_CASE("augmentation is a pure function of its inputs and keeps the clip length") {
  const AudioClip c = clip_of(gaussian(16000, 0.3, 11));
  AugmentationConfig cfg = only(true, true, true, true);
  cfg.noise_bank = {clip_of(gaussian(30000, 0.1, 12))};
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const AugmentResult a = augment(c, cfg, seed), b = augment(c, cfg, seed);
    CHECK(a.clip.samples == b.clip.samples);
    CHECK(a.clip.samples.size() == 16000);
    const MelSpectrogram s = mel_spectrogram(a.clip);
    CHECK(s.values.rows() == 32);
    CHECK(s.values.cols() == 32);
  }
  cfg.apply_prob = 0.5;
  for (std::uint64_t seed = 0; seed < 30; ++seed) CHECK(augment(c, cfg, seed).clip.samples.size() == 16000);
}

TEST_CASE("augmentation config validation") {
  AugmentationConfig cfg;
  cfg.apply_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = AugmentationConfig{};
  cfg.speed_range = {0.0, 1.2};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = AugmentationConfig{};
  cfg.amplitude_range = {1.2, 0.8};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
