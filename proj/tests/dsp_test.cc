// tests/dsp_test.cc

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

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "imly/dsp.h"
#include "imly/error.h"
#include "imly/rng.h"
#include "oracles.h"

using namespace imly;

namespace {

AudioBuffer noise(std::size_t n, std::uint64_t seed, int rate = 22050) {
  Rng rng(seed);
  AudioBuffer b;
  b.sample_rate = rate;
  for (std::size_t i = 0; i < n; ++i) b.samples.push_back(rng.uniform(-1.0, 1.0));
  return b;
}

}  // namespace

TEST_CASE("fft matches a direct DFT") {
  Rng rng(1);
  const int n = 64;
  std::vector<Complex> x(n), y;
  for (auto& v : x) v = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
  y = x;
  Fft(n).forward(y);
  for (int k = 0; k < n; ++k) {
    Complex acc = 0;
    for (int t = 0; t < n; ++t) acc += x[t] * std::polar(1.0, -2 * std::numbers::pi * k * t / n);
    CHECK(std::abs(acc - y[k]) <= 1e-9);
  }
  Fft(n).inverse(y);
  for (int t = 0; t < n; ++t) CHECK(std::abs(y[t] - x[t]) <= 1e-12);
  CHECK_THROWS_AS(Fft(48), ConfigError);
}

TEST_CASE("stft: exact-bin sine peaks at its bin") {
  const StftConfig cfg{512, 128};
  const int k = 37;
  AudioBuffer b;
  b.sample_rate = 22050;
  for (int i = 0; i < 8192; ++i) b.samples.push_back(std::sin(2 * std::numbers::pi * k * i / 512.0));
  const auto sgram = stft(b, cfg);
  for (std::size_t t = 4; t + 4 < sgram.num_frames(); ++t) {
    std::size_t best = 0;
    for (std::size_t f = 0; f < sgram.frames.cols(); ++f) {
      if (std::norm(sgram.frames(t, f)) > std::norm(sgram.frames(t, best))) best = f;
    }
    CHECK(best == static_cast<std::size_t>(k));
  }
}

TEST_CASE("stft: zeros in, zeros out; frame count and shape") {
  AudioBuffer z{std::vector<double>(5000, 0.0), 22050};
  const auto sgram = stft(z, StftConfig{});
  CHECK(sgram.frames.cols() == 1025);
  CHECK(sgram.num_frames() == 5000 / 512 + 1);
  for (const auto& v : sgram.frames.data()) CHECK(v == Complex(0, 0));
  const auto back = istft(sgram);
  CHECK(back.samples.size() == 5000);
  for (double v : back.samples) CHECK(v == 0.0);
}

TEST_CASE("stft: short input is zero-padded") {
  AudioBuffer b = noise(100, 2);
  const auto sgram = stft(b, StftConfig{});
  CHECK(sgram.num_frames() >= 1);
  CHECK(sgram.original_length == 100);
}

TEST_CASE("stft: Parseval with window power correction") {
  const auto b = noise(22050, 3);
  const StftConfig cfg{};
  const auto sgram = stft(b, cfg);
  const auto w = hann_window(cfg.n_fft);
  double w2 = 0;
  for (double v : w) w2 += v * v;
  double spectral = 0;
  for (std::size_t t = 0; t < sgram.num_frames(); ++t) {
    for (std::size_t f = 0; f < sgram.frames.cols(); ++f) {
      const double c = (f == 0 || f + 1 == sgram.frames.cols()) ? 1.0 : 2.0;
      spectral += c * std::norm(sgram.frames(t, f));
    }
  }
  // each frame carries sum(w^2) of window power; spread over the signal
  const double scaling = static_cast<double>(b.samples.size()) /
                         (cfg.n_fft * w2 * static_cast<double>(sgram.num_frames()));
  double time_energy = 0;
  for (double v : b.samples) time_energy += v * v;
  CHECK(std::abs(spectral * scaling / time_energy - 1.0) <= 0.01);
}

TEST_CASE("istft: round-trip SNR >= 60 dB") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto b = noise(22050, 100 + s);
    const auto back = istft(stft(b, StftConfig{}));
    REQUIRE(back.samples.size() == b.samples.size());
    CHECK(oracle::snr_db(b.samples, back.samples) >= 60.0);
  }
  const auto b = noise(7000, 7);
  const StftConfig small{512, 128};
  CHECK(oracle::snr_db(b.samples, istft(stft(b, small)).samples) >= 60.0);
}

TEST_CASE("istft: DC reconstructs away from the edges") {
  AudioBuffer dc{std::vector<double>(20000, 0.7), 22050};
  const auto back = istft(stft(dc, StftConfig{}));
  for (std::size_t i = 2048; i + 2048 < back.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - 0.7) <= 1e-6);
  }
}

TEST_CASE("istft: rejects non-COLA configs") {
  auto sgram = stft(noise(4096, 8), StftConfig{512, 384});
  CHECK_THROWS_AS(istft(sgram), ConfigError);
  CHECK_THROWS_AS((StftConfig{500, 100}).validate(), ConfigError);
  CHECK_THROWS_AS((StftConfig{512, 0}).validate(), ConfigError);
}

TEST_CASE("stft is linear") {
  const auto x = noise(6000, 9), y = noise(6000, 10);
  AudioBuffer mix = x;
  for (std::size_t i = 0; i < mix.samples.size(); ++i) mix.samples[i] = 0.3 * x.samples[i] - 1.7 * y.samples[i];
  const auto X = stft(x, StftConfig{}), Y = stft(y, StftConfig{}), M = stft(mix, StftConfig{});
  double num = 0, den = 0;
  for (std::size_t i = 0; i < M.frames.data().size(); ++i) {
    const Complex expect = 0.3 * X.frames.data()[i] - 1.7 * Y.frames.data()[i];
    num += std::norm(M.frames.data()[i] - expect);
    den += std::norm(expect);
  }
  CHECK(std::sqrt(num / den) <= 1e-6);
}

TEST_CASE("log_mel: floor on silence") {
  Spectrogram sgram;
  sgram.config = StftConfig{512, 220};
  sgram.sample_rate = 22050;
  sgram.frames = Matrix<Complex>(3, 257);
  const auto fm = log_mel(sgram, 40, 50, 11025);
  CHECK(fm.values.rows() == 3);
  CHECK(fm.values.cols() == 40);
  for (double v : fm.values.data()) CHECK(v == doctest::Approx(std::log(1e-10)));
}

TEST_CASE("log_mel: single-bin impulse touches one or two bands") {
  Spectrogram sgram;
  sgram.config = StftConfig{512, 220};
  sgram.sample_rate = 22050;
  for (int bin : {5, 40, 100, 200}) {
    sgram.frames = Matrix<Complex>(1, 257);
    sgram.frames(0, static_cast<std::size_t>(bin)) = 1.0;
    const auto fm = log_mel(sgram, 40, 50, 11025);
    int touched = 0;
    for (double v : fm.values.data()) touched += v > std::log(1e-10) + 1e-9;
    CHECK(touched >= 1);
    CHECK(touched <= 2);
  }
}

TEST_CASE("mel filterbank rows are positive with contiguous support") {
  const auto fb = mel_filterbank(22050, 512, 40, 50, 11025);
  REQUIRE(fb.rows() == 40);
  for (std::size_t m = 0; m < fb.rows(); ++m) {
    double sum = 0;
    int first = -1, last = -1;
    for (std::size_t k = 0; k < fb.cols(); ++k) {
      CHECK(fb(m, k) >= 0.0);
      sum += fb(m, k);
      if (fb(m, k) > 0) {
        if (first < 0) first = static_cast<int>(k);
        last = static_cast<int>(k);
      }
    }
    CHECK(sum > 0.0);
    for (int k = first; k <= last; ++k) CHECK(fb(m, static_cast<std::size_t>(k)) > 0.0);
  }
  CHECK_THROWS_AS(mel_filterbank(22050, 512, 40, 500, 400), ConfigError);
  CHECK_THROWS_AS(mel_filterbank(22050, 512, 40, 50, 20000), ConfigError);
}

TEST_CASE("log_mel is monotone in bin power") {
  Rng rng(11);
  Spectrogram sgram;
  sgram.config = StftConfig{512, 220};
  sgram.sample_rate = 22050;
  sgram.frames = Matrix<Complex>(1, 257);
  for (auto& v : sgram.frames.data()) v = rng.uniform(0, 1);
  const auto before = log_mel(sgram, 40, 50, 11025);
  sgram.frames(0, 60) *= 3.0;
  const auto after = log_mel(sgram, 40, 50, 11025);
  for (std::size_t i = 0; i < before.values.data().size(); ++i) {
    CHECK(after.values.data()[i] >= before.values.data()[i]);
  }
}

TEST_CASE("mel scale is HTK") {
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));
}
