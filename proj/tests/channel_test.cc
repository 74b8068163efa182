// tests/channel_test.cc

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
#include <functional>

#include "doctest.h"
#include "imly/channel.h"
#include "imly/error.h"
#include "oracles.h"

using namespace imly;

namespace {

const Phoneme S = *phoneme_index("S");

ChannelParams make(double sub, double del, double ins, int alphabet = kNumPhonemes) {
  ChannelParams ch;
  ch.p_sub = sub;
  ch.p_del = del;
  ch.p_match = 1.0 - sub - del;
  ch.p_ins = ins;
  ch.alphabet_size = alphabet;
  return ch;
}

void all_sequences(std::size_t max_len, int alphabet,
                   const std::function<void(const std::vector<Phoneme>&)>& fn) {
  std::vector<Phoneme> cur;
  std::function<void()> rec = [&]() {
    fn(cur);
    if (cur.size() == max_len) return;
    for (int s = 1; s <= alphabet; ++s) {
      cur.push_back(s);
      rec();
      cur.pop_back();
    }
  };
  rec();
}

}  // namespace

TEST_CASE("corrupt: clean channel is the identity") {
  Rng rng(3);
  const auto seq = oracle::random_phonemes(50, rng);
  CHECK(corrupt(seq, make(0, 0, 0), 11) == seq);
}

TEST_CASE("corrupt: p_del = 1 empties the sequence") {
  Rng rng(4);
  const auto seq = oracle::random_phonemes(50, rng);
  CHECK(corrupt(seq, make(0, 1, 0), 12).empty());
}

TEST_CASE("corrupt: substitution rate is p_sub") {
  Rng rng(5);
  const auto seq = oracle::random_phonemes(100000, rng);
  const auto out = corrupt(seq, make(0.5, 0, 0), 99);
  REQUIRE(out.size() == seq.size());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) changed += out[i] != seq[i];
  CHECK(std::abs(static_cast<double>(changed) / seq.size() - 0.5) <= 0.01);
}

TEST_CASE("corrupt: seeded and reproducible") {
  Rng rng(6);
  const auto seq = oracle::random_phonemes(200, rng);
  const ChannelParams ch;
  CHECK(corrupt(seq, ch, 7) == corrupt(seq, ch, 7));
  CHECK(corrupt(seq, ch, 7) != corrupt(seq, ch, 8));
}

TEST_CASE("corrupt: insertions per gap never exceed the cap") {
  Rng rng(7);
  const auto seq = oracle::random_phonemes(20, rng);
  const auto ch = make(0, 0, 0.9);
  for (std::uint64_t s = 0; s < 50; ++s) {
    CHECK(corrupt(seq, ch, s, 2).size() <= seq.size() + 2 * (seq.size() + 1));
  }
}

TEST_CASE("channel_logprob: worked examples") {
  CHECK(channel_logprob({S}, {S}, make(0, 0, 0)) == doctest::Approx(0.0));
  CHECK(channel_logprob({}, {S}, make(0, 0.1, 0)) == doctest::Approx(std::log(0.1)).epsilon(1e-12));
}

TEST_CASE("gap_logprob: geometric with a cap") {
  CHECK(gap_logprob(0, 0.05, 2) == doctest::Approx(std::log(0.95)));
  CHECK(gap_logprob(1, 0.05, 2) == doctest::Approx(std::log(0.05 * 0.95)));
  CHECK(gap_logprob(2, 0.05, 2) == doctest::Approx(2 * std::log(0.05)));
}

TEST_CASE("channel_logprob matches edit-path enumeration (lengths <= 3, alphabet 3)") {
  const auto ch = make(0.2, 0.1, 0.15, 3);
  double worst = 0;
  all_sequences(3, 3, [&](const std::vector<Phoneme>& canon) {
    all_sequences(3, 3, [&](const std::vector<Phoneme>& obs) {
      const double brute = oracle::channel_path_sum(obs, canon, ch, 2);
      const double dp = std::exp(channel_logprob(obs, canon, ch, 2));
      worst = std::max(worst, std::abs(brute - dp));
      CHECK(channel_logprob(obs, canon, ch, 2) <= 0.0);
    });
  });
  CHECK(worst <= 1e-9);
}

TEST_CASE("channel_logprob agrees with the generative process") {
  const auto ch = make(0.2, 0.1, 0.1, 3);
  const std::vector<Phoneme> canon = {1, 2, 1};
  const auto outputs = oracle::channel_outputs(canon, ch, 2);
  double total = 0;
  for (const auto& [obs, p] : outputs) {
    total += p;
    CHECK(std::abs(std::exp(channel_logprob(obs, canon, ch, 2)) - p) <= 1e-12);
  }
  CHECK(std::abs(total - 1.0) <= 1e-9);
}

TEST_CASE("channel mass over bounded outputs approaches one") {
  const auto ch = make(0.1, 0.05, 0.05, 3);
  const std::vector<Phoneme> canon = {1, 3};
  double mass = 0;
  all_sequences(6, 3, [&](const std::vector<Phoneme>& obs) {
    mass += std::exp(channel_logprob(obs, canon, ch, 2));
  });
  CHECK(mass >= 0.99);
  CHECK(mass <= 1.0 + 1e-12);
}

TEST_CASE("channel_viterbi_logprob matches best single path") {
  Rng rng(8);
  const ChannelParams ch;
  for (int t = 0; t < 200; ++t) {
    const auto canon = oracle::random_phonemes(rng.below(8), rng, 5);
    const auto obs = oracle::random_phonemes(rng.below(8), rng, 5);
    const double a = channel_viterbi_logprob(obs, canon, ch);
    const double b = oracle::channel_best_path(obs, canon, ch, 2);
    if (std::isinf(b)) {
      CHECK(std::isinf(a));
    } else {
      CHECK(std::abs(a - b) <= 1e-9);
    }
    CHECK(a <= channel_logprob(obs, canon, ch) + 1e-12);
  }
}

TEST_CASE("estimate_channel recovers the generating rates") {
  const auto truth = make(0.1, 0.05, 0.05);
  Rng rng(9);
  std::vector<ChannelPair> pairs;
  for (int i = 0; i < 1000; ++i) {
    ChannelPair p;
    p.canonical = oracle::random_phonemes(10, rng);
    p.observed = corrupt(p.canonical, truth, 1000 + i);
    pairs.push_back(p);
  }
  const auto est = estimate_channel(pairs);
  CHECK(std::abs(est.p_sub - 0.1) <= 0.02);
  CHECK(std::abs(est.p_del - 0.05) <= 0.02);
  CHECK(std::abs(est.p_ins - 0.05) <= 0.02);
  CHECK(est.p_match + est.p_sub + est.p_del == doctest::Approx(1.0));
}

TEST_CASE("estimate_channel: identity pairs and floors") {
  Rng rng(10);
  std::vector<ChannelPair> pairs;
  for (int i = 0; i < 100; ++i) {
    const auto s = oracle::random_phonemes(8, rng);
    pairs.push_back({s, s});
  }
  CHECK(estimate_channel(pairs).p_match >= 0.99);

  const auto del = estimate_channel({{{S}, {}}});
  CHECK(del.p_del > 0.99);
  CHECK(del.p_del < 1.0);
  CHECK(del.p_match >= 1e-3);
  CHECK(del.p_sub >= 1e-3);

  CHECK_THROWS_AS(estimate_channel({}), DataError);
}

TEST_CASE("channel file round-trip and validation") {
  const auto ch = make(0.125, 0.0625, 0.03);
  CHECK(parse_channel(format_channel(ch)) == ch);
  CHECK_THROWS_AS(parse_channel("p_match=1\np_sub=0\np_del=0\np_ins=0\nbogus=1\n"), DataError);
  CHECK_THROWS_AS(parse_channel("p_match=0.5\np_sub=0\np_del=0\np_ins=0\n"), DataError);
  CHECK_THROWS_AS(make(0.5, 0.6, 0).validate(), ConfigError);
  CHECK_THROWS_AS(make(0.1, 0.1, 1.0).validate(), ConfigError);
}
