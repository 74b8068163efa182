// src/audio_io.cc

// Copyright 2026  The imly Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "imly/audio_io.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

namespace imly {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool has_tag(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct FmtInfo {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

[[noreturn]] void malformed(const std::string& what) {
  throw WavError(WavError::Kind::kMalformedHeader, "malformed WAV: " + what);
}

double blackman(double x, double half_width) {
  const double a = std::numbers::pi * x / half_width;
  return 0.42 + 0.5 * std::cos(a) + 0.08 * std::cos(2.0 * a);
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !has_tag(bytes, 0, "RIFF") ||
      !has_tag(bytes, 8, "WAVE")) {
    malformed("missing RIFF/WAVE signature");
  }
  FmtInfo fmt;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (has_tag(bytes, pos, "fmt ")) {
      if (size < 16 || body + size > bytes.size()) malformed("short fmt chunk");
      fmt.format = read_u16(bytes, body);
      fmt.channels = read_u16(bytes, body + 2);
      fmt.sample_rate = read_u32(bytes, body + 4);
      fmt.bits = read_u16(bytes, body + 14);
      if (fmt.format == kFormatExtensible) {
        if (size < 26) malformed("short extensible fmt chunk");
        fmt.format = read_u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (has_tag(bytes, pos, "data")) {
      if (!have_fmt) malformed("data chunk before fmt chunk");
      if (fmt.channels < 1 || fmt.channels > 2) {
        malformed("unsupported channel count " + std::to_string(fmt.channels));
      }
      if (fmt.sample_rate == 0) malformed("zero sample rate");
      const bool pcm16 = fmt.format == kFormatPcm && fmt.bits == 16;
      const bool f32 = fmt.format == kFormatFloat && fmt.bits == 32;
      if (!pcm16 && !f32) {
        throw WavError(WavError::Kind::kUnsupportedCodec,
                       "unsupported WAV codec: format " +
                           std::to_string(fmt.format) + ", " +
                           std::to_string(fmt.bits) + " bits");
      }
      const std::size_t sample_bytes = pcm16 ? 2 : 4;
      const std::size_t frame_bytes = sample_bytes * fmt.channels;
      if (body + size > bytes.size() || size % frame_bytes != 0) {
        throw WavError(WavError::Kind::kTruncatedData,
                       "truncated WAV data chunk: declared " +
                           std::to_string(size) + " bytes, " +
                           std::to_string(bytes.size() - body) + " available");
      }
      AudioBuffer out;
      out.sample_rate = static_cast<int>(fmt.sample_rate);
      const std::size_t frames = size / frame_bytes;
      out.samples.resize(frames);
      for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < fmt.channels; ++c) {
          const std::size_t at = body + f * frame_bytes + c * sample_bytes;
          if (pcm16) {
            acc += static_cast<std::int16_t>(read_u16(bytes, at)) / 32768.0;
          } else {
            const std::uint32_t raw = read_u32(bytes, at);
            float v;
            std::memcpy(&v, &raw, sizeof(v));
            if (!std::isfinite(v)) malformed("non-finite float sample");
            acc += v;
          }
        }
        out.samples[f] = acc / fmt.channels;
      }
      return out;
    }
    pos = body + size + (size & 1u);
  }
  malformed(have_fmt ? "no data chunk" : "no fmt chunk");
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buf) {
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(buf.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : buf.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    const double scaled = std::clamp(std::round(clamped * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

AudioBuffer resample(const AudioBuffer& buf, int target_rate) {
  if (target_rate <= 0) {
    throw ConfigError("resample: target rate must be positive");
  }
  if (buf.sample_rate <= 0) throw ConfigError("resample: invalid source rate");
  if (target_rate == buf.sample_rate) return buf;

  constexpr int kTaps = 64;
  constexpr double kHalf = kTaps / 2;
  const double ratio = static_cast<double>(buf.sample_rate) / target_rate;
  const double cutoff = std::min(1.0, 1.0 / ratio);
  const std::size_t n_in = buf.samples.size();
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) * target_rate / buf.sample_rate));

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  if (n_in == 0) return out;
  const auto last = static_cast<long long>(n_in) - 1;
  for (std::size_t n = 0; n < n_out; ++n) {
    const double t = static_cast<double>(n) * buf.sample_rate / target_rate;
    const auto base = static_cast<long long>(std::floor(t));
    double acc = 0.0, weight_sum = 0.0;
    for (long long k = base - (kTaps / 2 - 1); k <= base + kTaps / 2; ++k) {
      const double x = t - static_cast<double>(k);
      if (std::abs(x) >= kHalf) continue;
      const double w = cutoff * sinc(cutoff * x) * blackman(x, kHalf);
      const long long idx = std::clamp(k, 0LL, last);
      acc += w * buf.samples[static_cast<std::size_t>(idx)];
      weight_sum += w;
    }
    out.samples[n] = weight_sum != 0.0 ? acc / weight_sum : 0.0;
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path);
}

AudioBuffer read_wav_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return decode_wav(bytes);
}

void write_wav_file(const std::string& path, const AudioBuffer& buf) {
  write_file_bytes(path, encode_wav(buf));
}

}  // namespace imly
