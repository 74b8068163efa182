// tests/word_decoder_test.cc

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

#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "imly/error.h"
#include "imly/lexicon.h"
#include "imly/channel.h"
#include "imly/word_decoder.h"
#include "oracles.h"

using namespace imly;

namespace {

const Phoneme HH = *phoneme_index("HH");
const Phoneme AY = *phoneme_index("AY");

// Random lexicon over a small phoneme subset so words collide often.
Lexicon random_lexicon(std::size_t words, Rng& rng) {
  std::map<std::string, std::vector<std::vector<Phoneme>>> entries;
  for (std::size_t w = 0; w < words; ++w) {
    std::string name = "w";
    name += static_cast<char>('a' + w);
    const int prons = rng.uniform() < 0.2 ? 2 : 1;
    for (int k = 0; k < prons; ++k) {
      entries[name].push_back(oracle::random_phonemes(2 + rng.below(3), rng, 6));
    }
  }
  return Lexicon(entries);
}

NGramLM random_lm(const Lexicon& lex, Rng& rng, int order) {
  std::vector<std::string> lines;
  for (int i = 0; i < 30; ++i) {
    std::string line;
    const std::size_t n = 1 + rng.below(4);
    for (std::size_t k = 0; k < n; ++k) {
      if (k) line += ' ';
      line += lex.word(static_cast<Lexicon::WordId>(rng.below(lex.num_words())));
    }
    lines.push_back(line);
  }
  return train_ngram(lines, order, 0.1);
}

std::vector<Phoneme> spell(const Lexicon& lex, const std::vector<std::string>& words) {
  std::vector<Phoneme> out;
  for (const auto& w : words) {
    const auto& p = lex.find(w)->front();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace

TEST_CASE("decode_words: single clean word") {
  const Lexicon lex({{"hi", {{HH, AY}}}});
  const auto lm = train_ngram({"hi"}, 2, 0.1);
  ChannelParams ch;
  ch.p_match = 0.9;
  ch.p_sub = 0.05;
  ch.p_del = 0.05;
  ch.p_ins = 0.01;
  const auto out = decode_words({HH, AY}, lex, lm, ch, DecoderConfig{});
  REQUIRE(!out.empty());
  CHECK(join_words(out[0].words) == "hi");
  CHECK(std::isfinite(out[0].score));
}

TEST_CASE("decode_words: empty observed ranks the empty sequence first") {
  const Lexicon lex({{"hi", {{HH, AY}}}});
  const auto lm = train_ngram({"hi"}, 2, 0.1);
  ChannelParams ch;
  ch.p_match = 0.95;
  ch.p_sub = 0.05;
  ch.p_del = 0.0;
  ch.p_ins = 0.05;
  const auto out = decode_words({}, lex, lm, ch, DecoderConfig{});
  REQUIRE(!out.empty());
  CHECK(out[0].words.empty());
}

TEST_CASE("decode_words: errors") {
  const auto lm = train_ngram({"hi"}, 2, 0.1);
  CHECK_THROWS_AS(decode_words({HH}, Lexicon{}, lm, ChannelParams{}, DecoderConfig{}), ConfigError);
  const Lexicon lex({{"hi", {{HH, AY}}}});
  CHECK_THROWS_AS(decode_words({0}, lex, lm, ChannelParams{}, DecoderConfig{}), DataError);
  DecoderConfig bad;
  bad.beam_width = 0;
  CHECK_THROWS_AS(decode_words({HH}, lex, lm, ChannelParams{}, bad), ConfigError);
}

TEST_CASE("decode_words: n-best is sorted, distinct, and scores recompute") {
  Rng rng(21);
  const auto lex = random_lexicon(12, rng);
  const auto lm = random_lm(lex, rng, 3);
  const ChannelParams ch;
  DecoderConfig cfg;
  cfg.n_best = 10;
  cfg.word_insertion_penalty = -0.5;
  for (int t = 0; t < 30; ++t) {
    const auto obs = oracle::random_phonemes(1 + rng.below(8), rng, 6);
    const auto out = decode_words(obs, lex, lm, ch, cfg);
    REQUIRE(!out.empty());
    CHECK(out.size() <= 10);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (i) CHECK(out[i - 1].score >= out[i].score);
      for (std::size_t j = 0; j < i; ++j) CHECK(out[i].words != out[j].words);
      const double again = path_score(obs, out[i].words, out[i].canonical, lm, ch, cfg);
      CHECK(std::abs(again - out[i].score) <= 1e-9);
    }
  }
}

TEST_CASE("decode_words: top-1 equals the exhaustive oracle") {
  Rng rng(22);
  for (int t = 0; t < 20; ++t) {
    const auto lex = random_lexicon(8 + rng.below(8), rng);
    const auto lm = random_lm(lex, rng, 1 + static_cast<int>(rng.below(3)));
    ChannelParams ch;
    DecoderConfig cfg;
    cfg.beam_width = 1000000;
    cfg.lm_weight = rng.uniform(0.0, 2.0);
    cfg.word_insertion_penalty = rng.uniform(-1.0, 1.0);
    const auto obs = oracle::random_phonemes(1 + rng.below(6), rng, 6);
    const auto out = decode_words(obs, lex, lm, ch, cfg);
    const auto ref = oracle::exhaustive_decode(obs, lex, lm, ch, cfg, obs.size() + 4);
    REQUIRE(!out.empty());
    CHECK(std::abs(out[0].score - ref.best) <= 1e-9);
    CHECK(std::find(ref.best_sequences.begin(), ref.best_sequences.end(), out[0].words) !=
          ref.best_sequences.end());
  }
}

TEST_CASE("decode_words: lm_weight 0 ranks by channel score alone") {
  Rng rng(23);
  const auto lex = random_lexicon(10, rng);
  const auto lm = random_lm(lex, rng, 2);
  const ChannelParams ch;
  DecoderConfig cfg;
  cfg.lm_weight = 0.0;
  cfg.n_best = 5;
  const auto obs = spell(lex, {"wb", "wc"});
  const auto out = decode_words(obs, lex, lm, ch, cfg);
  for (const auto& h : out) {
    CHECK(std::abs(h.score - channel_viterbi_logprob(obs, h.canonical, ch)) <= 1e-9);
  }
}

TEST_CASE("decode_words: clean input recovers the spoken words") {
  Rng rng(24);
  const auto lex = random_lexicon(10, rng);
  const auto lm = random_lm(lex, rng, 2);
  ChannelParams ch;
  DecoderConfig cfg;
  cfg.lm_weight = 0.0;
  cfg.n_best = 5;
  for (Lexicon::WordId w = 0; w < lex.num_words(); ++w) {
    const auto out = decode_words(lex.pronunciations(w)[0], lex, lm, ch, cfg);
    bool found = false;
    for (const auto& h : out) found = found || (h.words == std::vector<std::string>{lex.word(w)});
    CHECK(found);
  }
}

TEST_CASE("decode_words: wider beams never lower the top-1 score") {
  const auto full = load_lexicon_file(std::string(IMLY_SOURCE_DATA_DIR) + "/lexicon.dict");
  Rng rng(25);
  std::vector<std::string> pool = full.words();
  int violations = 0;
  for (int t = 0; t < 100; ++t) {
    rng.shuffle(pool);
    std::map<std::string, std::vector<std::vector<Phoneme>>> entries;
    for (int i = 0; i < 15; ++i) entries[pool[i]] = *full.find(pool[i]);
    const Lexicon lex(entries);
    const auto lm = random_lm(lex, rng, 3);
    std::vector<std::string> spoken;
    for (int i = 0; i < 3; ++i) spoken.push_back(pool[rng.below(15)]);
    const auto obs = corrupt(spell(lex, spoken), ChannelParams{}, 500 + t);
    double prev = -std::numeric_limits<double>::infinity();
    for (int width : {1, 4, 16, 64}) {
      DecoderConfig cfg;
      cfg.beam_width = width;
      const auto out = decode_words(obs, lex, lm, ChannelParams{}, cfg);
      REQUIRE(!out.empty());
      if (out[0].score < prev - 1e-9) ++violations;
      prev = std::max(prev, out[0].score);
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("decode_words: corrupted words are recovered in the top 5") {
  const auto full = load_lexicon_file(std::string(IMLY_SOURCE_DATA_DIR) + "/lexicon.dict");
  Rng rng(26);
  std::vector<std::string> pool = full.words();
  ChannelParams ch;
  ch.p_sub = 0.1;
  ch.p_del = 0.05;
  ch.p_match = 0.85;
  ch.p_ins = 0.05;
  int hits = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    rng.shuffle(pool);
    std::map<std::string, std::vector<std::vector<Phoneme>>> entries;
    std::vector<std::string> lines;
    for (int i = 0; i < 10; ++i) {
      entries[pool[i]] = *full.find(pool[i]);
      lines.push_back(pool[i]);
    }
    const Lexicon lex(entries);
    const auto lm = train_ngram(lines, 3, 0.1);
    const std::string source = pool[rng.below(10)];
    const auto& prons = *lex.find(source);
    const auto obs = corrupt(prons[rng.below(prons.size())], ch, 9000 + t);
    DecoderConfig cfg;
    cfg.n_best = 5;
    const auto out = decode_words(obs, lex, lm, ch, cfg);
    for (const auto& h : out) {
      if (h.words == std::vector<std::string>{source}) {
        ++hits;
        break;
      }
    }
  }
  MESSAGE("top-5 recall " << hits << "/" << trials);
  CHECK(hits >= 180);
}
