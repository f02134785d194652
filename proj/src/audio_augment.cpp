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

#include <cmath>
#include <numeric>

#include "bal/audio.hpp"
#include "bal/random.hpp"

namespace bal::audio {

void AugmentationConfig::validate() const {
  if (!(apply_prob >= 0.0 && apply_prob <= 1.0)) throw InvalidArgument("augmentation apply_prob must lie in [0,1]");
  auto check = [](const std::array<double, 2>& r, const char* name) {
    if (!(r[0] <= r[1])) throw InvalidArgument(std::string("augmentation range '") + name + "' has lower bound above upper");
  };
  check(amplitude_range, "amplitude_range");
  check(speed_range, "speed_range");
  check(shift_range_ms, "shift_range_ms");
  check(snr_range_db, "snr_range_db");
  if (speed_range[0] <= 0.0) throw InvalidArgument("augmentation speed_range must be positive");
}

AugmentationConfig AugmentationConfig::disabled() {
  AugmentationConfig cfg;
  cfg.apply_prob = 0.0;
  return cfg;
}

double mean_power(std::span<const double> samples) {
  if (samples.empty()) return 0.0;
  return std::inner_product(samples.begin(), samples.end(), samples.begin(), 0.0) /
         static_cast<double>(samples.size());
}

void scale_amplitude(std::vector<double>& samples, double factor) {
  for (double& s : samples) s *= factor;
}

std::vector<double> change_speed(std::span<const double> samples, double factor) {
  return fit_length(resample_linear(samples, factor), samples.size());
}

std::vector<double> time_shift(std::span<const double> samples, long shift) {
  const auto n = static_cast<long>(samples.size());
  std::vector<double> out(samples.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    const long src = i - shift;
    if (src >= 0 && src < n) out[static_cast<std::size_t>(i)] = samples[static_cast<std::size_t>(src)];
  }
  return out;
}

bool mix_noise(std::vector<double>& signal, std::span<const double> noise, double snr_db) {
  if (noise.size() != signal.size()) throw InvalidArgument("mix_noise: noise length must match signal");
  const double ps = mean_power(signal);
  const double pn = mean_power(noise);
  if (ps <= 0.0 || pn <= 0.0) return false;
  const double gain = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  for (std::size_t i = 0; i < signal.size(); ++i) signal[i] += gain * noise[i];
  return true;
}

AugmentResult augment(const AudioClip& clip, const AugmentationConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const std::array<double, 2>& r) { return r[0] + (r[1] - r[0]) * unit(rng); };
  // Every coin and parameter is drawn regardless of outcome so that toggling one
  // augmentation leaves the others' draws unchanged.
  const bool amp_coin = unit(rng) < cfg.apply_prob;
  const double amp = draw(cfg.amplitude_range);
  const bool speed_coin = unit(rng) < cfg.apply_prob;
  const double speed = draw(cfg.speed_range);
  const bool shift_coin = unit(rng) < cfg.apply_prob;
  const double shift_ms = draw(cfg.shift_range_ms);
  const bool noise_coin = unit(rng) < cfg.apply_prob;
  const double snr = draw(cfg.snr_range_db);
  const double noise_pick = unit(rng);
  const double noise_offset = unit(rng);

  AugmentResult out;
  out.clip = clip;
  auto& samples = out.clip.samples;
  auto& rec = out.record;

  if (cfg.amplitude && amp_coin) {
    scale_amplitude(samples, amp);
    rec.amplitude_applied = true;
    rec.amplitude_factor = amp;
  }
  if (cfg.speed && speed_coin) {
    samples = change_speed(samples, speed);
    rec.speed_applied = true;
    rec.speed_factor = speed;
  }
  if (cfg.shift && shift_coin) {
    const long s = std::lround(shift_ms * clip.sample_rate / 1000.0);
    samples = time_shift(samples, s);
    rec.shift_applied = true;
    rec.shift_samples = s;
  }
  if (cfg.noise && noise_coin) {
    if (cfg.noise_bank.empty()) {
      rec.warnings.emplace_back("noise augmentation drawn but noise bank is empty; skipped");
    } else {
      const auto which = std::min(cfg.noise_bank.size() - 1,
                                  static_cast<std::size_t>(noise_pick * static_cast<double>(cfg.noise_bank.size())));
      const auto& bank = cfg.noise_bank[which].samples;
      std::vector<double> segment(samples.size(), 0.0);
      if (!bank.empty()) {
        const std::size_t span = bank.size() > samples.size() ? bank.size() - samples.size() : 0;
        const auto start = static_cast<std::size_t>(noise_offset * static_cast<double>(span));
        for (std::size_t i = 0; i < segment.size(); ++i) segment[i] = bank[(start + i) % bank.size()];
      }
      if (mix_noise(samples, segment, snr)) {
        rec.noise_applied = true;
        rec.snr_db = snr;
      } else {
        rec.warnings.emplace_back("noise augmentation skipped: zero signal or noise power");
      }
    }
  }
  return out;
}

}  // namespace bal::audio
