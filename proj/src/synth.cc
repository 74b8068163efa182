// src/synth.cc

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

#include "imly/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "imly/error.h"

namespace imly {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is(Phoneme p, const char* sym) { return phoneme_symbol(p) == sym; }

double fade(std::size_t i, std::size_t n, std::size_t ramp) {
  if (ramp == 0) return 1.0;
  if (i < ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * i / ramp);
  if (i + ramp >= n) return 0.5 - 0.5 * std::cos(std::numbers::pi * (n - 1 - i) / ramp);
  return 1.0;
}

}  // namespace

PhonemeCode phoneme_code(Phoneme p) {
  if (p < 1 || p > kNumPhonemes) throw ConfigError("invalid phoneme index");
  PhonemeCode c;
  auto noise = [&](double lo, double hi, double gain, double voicing = 0.0) {
    c.kind = PhonemeCode::Kind::kNoise;
    c.band_lo = lo;
    c.band_hi = hi;
    c.gain = gain;
    c.voicing_hz = voicing;
    return c;
  };
  if (is(p, "S")) return noise(6000, 10000, 1.0);
  if (is(p, "SH")) return noise(4200, 7000, 1.0);
  if (is(p, "Z")) return noise(5000, 9000, 0.8, 150);
  if (is(p, "F")) return noise(4000, 10500, 0.5);
  if (is(p, "TH")) return noise(7500, 10500, 0.5);
  if (is(p, "HH")) return noise(500, 3500, 0.6);

  // Remaining phonemes get distinct tone pairs, assigned in alphabet order.
  static constexpr double kLow[] = {300, 520, 740};
  static constexpr double kHigh[] = {950, 1200, 1450, 1700, 1980, 2260,
                                     2550, 2850, 3150, 3450, 3800};
  int ordinal = 0;
  for (Phoneme q = 1; q < p; ++q) {
    const auto s = phoneme_symbol(q);
    if (s != "S" && s != "SH" && s != "Z" && s != "F" && s != "TH" && s != "HH") ++ordinal;
  }
  c.kind = PhonemeCode::Kind::kTones;
  c.f1 = kLow[ordinal % 3];
  c.f2 = kHigh[ordinal / 3];
  c.gain = 1.0;
  return c;
}

std::vector<double> band_noise(std::size_t length, int sample_rate, double lo, double hi,
                               Rng& rng, int components) {
  std::vector<double> out(length, 0.0);
  const double norm = std::sqrt(2.0 / components);
  for (int k = 0; k < components; ++k) {
    const double f = rng.uniform(lo, hi);
    const double phase = rng.uniform(0.0, kTwoPi);
    const double w = kTwoPi * f / sample_rate;
    for (std::size_t i = 0; i < length; ++i) out[i] += norm * std::sin(w * i + phase);
  }
  return out;
}

SynthUtterance render_phonemes(const std::vector<Phoneme>& phonemes, int sample_rate, Rng& rng) {
  auto samples_for = [&](double seconds) {
    return static_cast<std::size_t>(std::lround(seconds * sample_rate));
  };
  std::vector<double> out(samples_for(0.1), 0.0);
  for (Phoneme p : phonemes) {
    const PhonemeCode code = phoneme_code(p);
    const std::size_t n = samples_for(rng.uniform(0.09, 0.13));
    const double level = rng.uniform(0.2, 0.45) * code.gain;
    const std::size_t ramp = samples_for(0.01);
    std::vector<double> seg;
    if (code.kind == PhonemeCode::Kind::kNoise) {
      seg = band_noise(n, sample_rate, code.band_lo, code.band_hi, rng);
      if (code.voicing_hz > 0.0) {
        const double w = kTwoPi * code.voicing_hz / sample_rate;
        for (std::size_t i = 0; i < n; ++i) seg[i] += 0.5 * std::sin(w * i);
      }
    } else {
      seg.assign(n, 0.0);
      const double j1 = rng.uniform(0.99, 1.01), j2 = rng.uniform(0.99, 1.01);
      const double p1 = rng.uniform(0.0, kTwoPi), p2 = rng.uniform(0.0, kTwoPi);
      const double w1 = kTwoPi * code.f1 * j1 / sample_rate;
      const double w2 = kTwoPi * code.f2 * j2 / sample_rate;
      for (std::size_t i = 0; i < n; ++i) {
        seg[i] = 0.6 * std::sin(w1 * i + p1) + 0.6 * std::sin(w2 * i + p2);
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.push_back(level * fade(i, n, ramp) * seg[i]);
    out.resize(out.size() + samples_for(rng.uniform(0.03, 0.06)), 0.0);
  }
  out.resize(out.size() + samples_for(0.1), 0.0);
  for (double& v : out) v += 0.001 * (2.0 * rng.uniform() - 1.0);

  SynthUtterance u;
  u.audio.sample_rate = sample_rate;
  u.audio.samples = std::move(out);
  u.phonemes = phonemes;
  return u;
}

std::vector<SynthUtterance> synthetic_corpus(std::size_t count, std::size_t min_len,
                                             std::size_t max_len, std::uint64_t seed,
                                             int sample_rate) {
  if (min_len == 0 || max_len < min_len) throw ConfigError("invalid utterance length range");
  Rng rng(seed);
  std::vector<Phoneme> pool;
  auto next_symbol = [&]() {
    if (pool.empty()) {
      pool.resize(kNumPhonemes);
      std::iota(pool.begin(), pool.end(), 1);
      rng.shuffle(pool);
    }
    const Phoneme p = pool.back();
    pool.pop_back();
    return p;
  };
  std::vector<SynthUtterance> corpus;
  corpus.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = min_len + static_cast<std::size_t>(rng.below(max_len - min_len + 1));
    std::vector<Phoneme> seq;
    for (std::size_t k = 0; k < len; ++k) seq.push_back(next_symbol());
    corpus.push_back(render_phonemes(seq, sample_rate, rng));
  }
  return corpus;
}

std::vector<TrainingExample> featurize(const std::vector<SynthUtterance>& corpus,
                                       const FrontendConfig& frontend) {
  std::vector<TrainingExample> out;
  out.reserve(corpus.size());
  for (const auto& u : corpus) {
    out.push_back(TrainingExample{compute_features(u.audio, frontend), u.phonemes});
  }
  return out;
}

}  // namespace imly
