// src/dsp.cc

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

#include "imly/dsp.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace imly {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

void StftConfig::validate() const {
  if (!is_power_of_two(n_fft) || n_fft < 2) {
    throw ConfigError("n_fft must be a power of two, got " + std::to_string(n_fft));
  }
  if (hop <= 0 || hop > n_fft) {
    throw ConfigError("hop must be in (0, n_fft], got hop=" + std::to_string(hop));
  }
}

Fft::Fft(int n) : n_(n) {
  if (!is_power_of_two(n)) throw ConfigError("FFT size must be a power of two");
  twiddles_.resize(n / 2);
  for (int k = 0; k < n / 2; ++k) {
    const double a = -2.0 * std::numbers::pi * k / n;
    twiddles_[k] = Complex(std::cos(a), std::sin(a));
  }
  bit_reverse_.resize(n);
  int bits = 0;
  while ((1 << bits) < n) ++bits;
  for (int i = 0; i < n; ++i) {
    int r = 0;
    for (int b = 0; b < bits; ++b) {
      if (i & (1 << b)) r |= 1 << (bits - 1 - b);
    }
    bit_reverse_[i] = r;
  }
}

void Fft::transform(std::span<Complex> data, bool inverse) const {
  for (int i = 0; i < n_; ++i) {
    if (i < bit_reverse_[i]) std::swap(data[i], data[bit_reverse_[i]]);
  }
  for (int len = 2; len <= n_; len <<= 1) {
    const int half = len / 2;
    const int stride = n_ / len;
    for (int start = 0; start < n_; start += len) {
      for (int k = 0; k < half; ++k) {
        Complex w = twiddles_[k * stride];
        if (inverse) w = std::conj(w);
        const Complex a = data[start + k];
        const Complex b = data[start + k + half] * w;
        data[start + k] = a + b;
        data[start + k + half] = a - b;
      }
    }
  }
}

void Fft::forward(std::span<Complex> data) const { transform(data, false); }

void Fft::inverse(std::span<Complex> data) const {
  transform(data, true);
  const double scale = 1.0 / n_;
  for (auto& v : data) v *= scale;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

Spectrogram stft(const AudioBuffer& buf, const StftConfig& cfg) {
  cfg.validate();
  const std::size_t n_fft = static_cast<std::size_t>(cfg.n_fft);
  const std::size_t pad = n_fft / 2;

  std::vector<double> x = buf.samples;
  if (x.size() < n_fft) x.resize(n_fft, 0.0);
  const std::size_t len = x.size();

  // Reflect padding excludes the edge sample itself (numpy "reflect").
  std::vector<double> padded(len + 2 * pad);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    long long src = static_cast<long long>(i) - static_cast<long long>(pad);
    const long long n = static_cast<long long>(len);
    while (src < 0 || src >= n) {
      if (src < 0) src = -src;
      if (src >= n) src = 2 * (n - 1) - src;
    }
    padded[i] = x[static_cast<std::size_t>(src)];
  }

  const std::size_t frames = 1 + len / static_cast<std::size_t>(cfg.hop);
  Spectrogram sgram;
  sgram.config = cfg;
  sgram.sample_rate = buf.sample_rate;
  sgram.original_length = buf.samples.size();
  sgram.frames = Matrix<Complex>(frames, static_cast<std::size_t>(cfg.num_bins()));

  const Fft fft(cfg.n_fft);
  const auto window = hann_window(cfg.n_fft);
  std::vector<Complex> frame(n_fft);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(cfg.hop);
    for (std::size_t i = 0; i < n_fft; ++i) {
      frame[i] = Complex(padded[start + i] * window[i], 0.0);
    }
    fft.forward(frame);
    auto row = sgram.frames.row(t);
    std::copy(frame.begin(), frame.begin() + row.size(), row.begin());
  }
  return sgram;
}

AudioBuffer istft(const Spectrogram& sgram) {
  const StftConfig& cfg = sgram.config;
  cfg.validate();
  if (cfg.hop > cfg.n_fft / 2 || cfg.n_fft % cfg.hop != 0) {
    throw ConfigError("istft requires a hop dividing n_fft and at most n_fft/2");
  }
  const std::size_t n_fft = static_cast<std::size_t>(cfg.n_fft);
  const std::size_t hop = static_cast<std::size_t>(cfg.hop);
  const std::size_t pad = n_fft / 2;
  const std::size_t frames = sgram.num_frames();

  AudioBuffer out;
  out.sample_rate = sgram.sample_rate;
  if (frames == 0) {
    out.samples.assign(sgram.original_length, 0.0);
    return out;
  }

  const std::size_t total = (frames - 1) * hop + n_fft;
  std::vector<double> acc(total, 0.0), norm(total, 0.0);
  const Fft fft(cfg.n_fft);
  const auto window = hann_window(cfg.n_fft);
  std::vector<Complex> frame(n_fft);
  const std::size_t bins = static_cast<std::size_t>(cfg.num_bins());
  for (std::size_t t = 0; t < frames; ++t) {
    const auto row = sgram.frames.row(t);
    for (std::size_t k = 0; k < bins; ++k) frame[k] = row[k];
    // Hermitian completion; DC and Nyquist imaginary parts are dropped.
    frame[0] = Complex(frame[0].real(), 0.0);
    frame[n_fft / 2] = Complex(frame[n_fft / 2].real(), 0.0);
    for (std::size_t k = 1; k < n_fft / 2; ++k) frame[n_fft - k] = std::conj(row[k]);
    fft.inverse(frame);
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < n_fft; ++i) {
      acc[start + i] += frame[i].real() * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  std::size_t length = sgram.original_length;
  if (length == 0) length = total > 2 * pad ? total - 2 * pad : 0;
  out.samples.assign(length, 0.0);
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t src = i + pad;
    if (src >= total) break;
    out.samples[i] = norm[src] > 1e-12 ? acc[src] / norm[src] : 0.0;
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Matrix<double> mel_filterbank(int sample_rate, int n_fft, int n_mels,
                              double fmin, double fmax) {
  if (n_mels <= 0) throw ConfigError("n_mels must be positive");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw ConfigError("mel band edges must satisfy 0 <= fmin < fmax <= sr/2");
  }
  const int bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }
  Matrix<double> fb(static_cast<std::size_t>(n_mels), static_cast<std::size_t>(bins));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    double row_sum = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double up = (f - lo) / (center - lo);
      const double down = (hi - f) / (hi - center);
      const double w = std::max(0.0, std::min(up, down));
      fb(m, k) = w;
      row_sum += w;
    }
    if (row_sum <= 0.0) {
      throw ConfigError("mel band " + std::to_string(m) +
                        " covers no FFT bin; use fewer bands or a longer FFT");
    }
  }
  return fb;
}

FeatureMatrix log_mel(const Spectrogram& sgram, int n_mels, double fmin,
                      double fmax) {
  const Matrix<double> fb =
      mel_filterbank(sgram.sample_rate, sgram.config.n_fft, n_mels, fmin, fmax);
  const std::size_t frames = sgram.num_frames();
  const std::size_t bins = fb.cols();
  FeatureMatrix out;
  out.frame_hop_seconds = static_cast<double>(sgram.config.hop) / sgram.sample_rate;
  out.values = Matrix<double>(frames, static_cast<std::size_t>(n_mels));
  std::vector<double> power(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto row = sgram.frames.row(t);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(row[k]);
    for (int m = 0; m < n_mels; ++m) {
      const auto w = fb.row(static_cast<std::size_t>(m));
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += w[k] * power[k];
      out.values(t, static_cast<std::size_t>(m)) = std::log(std::max(e, kLogMelFloor));
    }
  }
  return out;
}

}  // namespace imly
