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
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "bal/audio.hpp"

namespace bal::audio {

Vector MelSpectrogram::flattened() const {
  Vector out(values.size());
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) out[r * values.cols() + c] = values(r, c);
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

MelFilterbank build_filterbank() {
  constexpr std::size_t n_bins = kFftSize / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(kSampleRate / 2.0);
  std::vector<double> edges(kMelBands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / (kMelBands + 1));

  MelFilterbank fb;
  fb.center_hz.assign(edges.begin() + 1, edges.end() - 1);
  fb.weights = Matrix::Zero(kMelBands, n_bins);
  for (std::size_t b = 0; b < kMelBands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / kFftSize;
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      fb.weights(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

const std::vector<double>& hann_window() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kFftSize);
    for (std::size_t n = 0; n < kFftSize; ++n)
      v[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / kFftSize);
    return v;
  }();
  return w;
}

}  // namespace

const MelFilterbank& mel_filterbank() {
  static const MelFilterbank fb = build_filterbank();
  return fb;
}

MelSpectrogram mel_spectrogram(const AudioClip& clip) {
  if (clip.samples.size() != kClipLength || clip.sample_rate != kSampleRate)
    throw InvalidArgument("mel_spectrogram: expected a 16000-sample clip at 16 kHz, got " +
                          std::to_string(clip.samples.size()) + " samples at " + std::to_string(clip.sample_rate));
  constexpr std::size_t pad = kFftSize / 2;
  const std::size_t n = clip.samples.size();
  // Reflect padding (edge sample not repeated).
  std::vector<double> padded(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) padded[i] = clip.samples[pad - i];
  std::copy(clip.samples.begin(), clip.samples.end(), padded.begin() + pad);
  for (std::size_t j = 0; j < pad; ++j) padded[pad + n + j] = clip.samples[n - 2 - j];

  const auto& window = hann_window();
  const auto& fb = mel_filterbank();
  constexpr std::size_t n_bins = kFftSize / 2 + 1;

  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    return f;
  }();
  std::vector<double> frame(kFftSize);
  std::vector<std::complex<double>> spectrum;
  Matrix power(n_bins, kFrames);
  for (std::size_t t = 0; t < kFrames; ++t) {
    for (std::size_t k = 0; k < kFftSize; ++k) frame[k] = padded[t * kHopLength + k] * window[k];
    fft.fwd(spectrum, frame);
    for (std::size_t k = 0; k < n_bins; ++k)
      power(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = std::norm(spectrum[k]);
  }

  MelSpectrogram out;
  out.source_id = clip.source_id;
  out.values = (fb.weights * power).array().unaryExpr([](double s) { return std::log(s + kLogFloor); });
  return out;
}

}  // namespace bal::audio
