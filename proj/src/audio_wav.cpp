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

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "bal/audio.hpp"

namespace bal::audio {
namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}
std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

WavData decode_wav(std::span<const std::uint8_t> bytes, const std::string& name) {
  auto fail = [&](const std::string& why) { return IngestError(name + ": " + why); };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) throw fail("short fmt chunk");
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      if (format == 0xFFFE && size >= 26) format = le16(bytes.data() + body + 24);  // WAVE_FORMAT_EXTENSIBLE
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.subspan(body, std::min<std::size_t>(size, avail));
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (!have_data) throw fail("missing data chunk");
  if (channels == 0 || rate == 0) throw fail("invalid channel count or sample rate");
  const bool pcm = format == 1;
  const bool flt = format == 3;
  if (!(pcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32)) && !(flt && bits == 32))
    throw fail("unsupported sample format " + std::to_string(format) + "/" + std::to_string(bits) + " bit");

  const std::size_t width = bits / 8;
  const std::size_t frames = data.size() / (width * channels);
  WavData out;
  out.sample_rate = static_cast<int>(rate);
  out.channels = channels;
  out.bits_per_sample = bits;
  out.mono.assign(frames, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data.data() + (f * channels + c) * width;
      double v = 0.0;
      if (flt) {
        v = static_cast<double>(std::bit_cast<float>(le32(p)));
      } else if (bits == 8) {
        v = (static_cast<double>(p[0]) - 128.0) / 128.0;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t s = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
        if (s & 0x800000) s |= ~0xFFFFFF;
        v = s / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(le32(p)) / 2147483648.0;
      }
      acc += v;
    }
    out.mono[f] = acc / channels;
  }
  return out;
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestError(path.string() + ": cannot open file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_bytes);
  for (double s : samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(c * 32767.0));
    put16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate) {
  const auto bytes = encode_wav(samples, sample_rate);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IngestError(path.string() + ": cannot open for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> resample(std::span<const double> samples, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw InvalidArgument("resample: rates must be positive");
  if (from_rate == to_rate) return {samples.begin(), samples.end()};
  constexpr int kZeroCrossings = 16;
  const double step = static_cast<double>(from_rate) / to_rate;  // input samples per output sample
  const double cutoff = std::min(1.0, 1.0 / step);
  const double half_width = kZeroCrossings / cutoff;
  const auto n_in = static_cast<long>(samples.size());
  const auto n_out = static_cast<std::size_t>(std::llround(samples.size() / step));
  std::vector<double> out(n_out, 0.0);
  for (std::size_t j = 0; j < n_out; ++j) {
    const double center = j * step;
    const long lo = std::max(0L, static_cast<long>(std::ceil(center - half_width)));
    const long hi = std::min(n_in - 1, static_cast<long>(std::floor(center + half_width)));
    double acc = 0.0;
    for (long k = lo; k <= hi; ++k) {
      const double d = center - k;
      const double window = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half_width);
      acc += samples[static_cast<std::size_t>(k)] * cutoff * sinc(cutoff * d) * window;
    }
    out[j] = acc;
  }
  return out;
}

std::vector<double> resample_linear(std::span<const double> samples, double rate) {
  if (!(rate > 0.0)) throw InvalidArgument("resample_linear: rate must be positive");
  if (samples.empty()) return {};
  const auto n_out = static_cast<std::size_t>(std::llround(samples.size() / rate));
  std::vector<double> out(n_out, 0.0);
  const std::size_t last = samples.size() - 1;
  for (std::size_t j = 0; j < n_out; ++j) {
    const double pos = j * rate;
    const auto i0 = static_cast<std::size_t>(std::floor(pos));
    if (i0 >= last) {
      out[j] = i0 == last ? samples[last] : 0.0;
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    out[j] = (1.0 - frac) * samples[i0] + frac * samples[i0 + 1];
  }
  return out;
}

std::vector<double> fit_length(std::span<const double> samples, std::size_t length) {
  std::vector<double> out(length, 0.0);
  if (samples.size() >= length) {
    const std::size_t start = (samples.size() - length) / 2;
    std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(start), length, out.begin());
  } else {
    const std::size_t lead = (length - samples.size()) / 2;
    std::copy(samples.begin(), samples.end(), out.begin() + static_cast<std::ptrdiff_t>(lead));
  }
  return out;
}

AudioClip ingest_wav(const std::filesystem::path& path, int target_rate) {
  WavData wav = read_wav(path);
  if (wav.mono.empty()) throw IngestError(path.string() + ": zero-length audio");
  for (double v : wav.mono)
    if (!std::isfinite(v)) throw IngestError(path.string() + ": non-finite sample");
  auto resampled = resample(wav.mono, wav.sample_rate, target_rate);
  const auto length = static_cast<std::size_t>(target_rate);  // one second
  AudioClip clip;
  clip.samples = fit_length(resampled, length);
  clip.sample_rate = target_rate;
  clip.source_id = path.filename().string();
  return clip;
}

}  // namespace bal::audio
