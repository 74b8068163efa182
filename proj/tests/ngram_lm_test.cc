// tests/ngram_lm_test.cc

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

#include "doctest.h"
#include "imly/error.h"
#include "imly/ngram_lm.h"
#include "imly/rng.h"

using namespace imly;

namespace {

std::vector<NGramLM::WordId> ids(const NGramLM& lm, const std::vector<std::string>& words) {
  std::vector<NGramLM::WordId> out;
  for (const auto& w : words) out.push_back(lm.id(w));
  return out;
}

double mass(const NGramLM& lm, const std::vector<NGramLM::WordId>& ctx) {
  double total = 0;
  for (const auto& w : lm.vocabulary()) {
    if (w == kSentenceStart) continue;
    total += lm.prob(ctx, lm.id(w));
  }
  return total;
}

}  // namespace

TEST_CASE("tokenize keeps apostrophes, drops other punctuation") {
  CHECK(tokenize("Don't STOP, me-now!") == std::vector<std::string>{"don't", "stop", "menow"});
  CHECK(tokenize("  ").empty());
}

TEST_CASE("bigram hand counts, k = 0") {
  const auto lm = train_ngram({"a b", "a c"}, 2, 0.0);
  const auto a = ids(lm, {"a"});
  CHECK(lm.prob(a, lm.id("b")) == 0.5);
  CHECK(lm.prob(a, lm.id("c")) == 0.5);
  CHECK(lm.prob(ids(lm, {"<s>"}), lm.id("a")) == 1.0);
  CHECK(lm_score(lm, {"a", "b"}) == doctest::Approx(std::log(1.0 * 0.5 * 1.0)));
}

TEST_CASE("add-k formula and the unseen-word example") {
  const auto lm = train_ngram({"a b", "a c"}, 2, 0.1);
  CHECK(lm.predicted_vocab_size() == 5);
  const auto a = ids(lm, {"a"});
  CHECK(lm.prob(a, lm.id("zebra")) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(lm.prob(a, lm.id("b")) == doctest::Approx(1.1 / 2.5).epsilon(1e-12));
  const double expect = std::log(2.1 / 2.5) + std::log(1.1 / 2.5) + std::log(1.1 / 1.5);
  CHECK(lm_score(lm, {"a", "b"}) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(lm_score(lm, {}) == doctest::Approx(std::log(0.1 / 2.5)).epsilon(1e-12));
}

TEST_CASE("unseen context backs off by 0.4") {
  const auto lm = train_ngram({"a b", "a c"}, 3, 0.1);
  // context (b, a) was never observed; (a) was
  const double bigram = lm.prob(ids(lm, {"a"}), lm.id("b"));
  CHECK(lm.prob(ids(lm, {"b", "a"}), lm.id("b")) == doctest::Approx(0.4 * bigram).epsilon(1e-12));
}

TEST_CASE("normalization over observed contexts") {
  const auto lines = read_lines(std::string(IMLY_SOURCE_DATA_DIR) + "/lyrics.txt");
  const auto lm = train_ngram(lines, 3, 0.1);
  auto contexts = lm.observed_contexts();
  REQUIRE(contexts.size() >= 100);
  Rng rng(1);
  rng.shuffle(contexts);
  for (std::size_t i = 0; i < 100; ++i) CHECK(std::abs(mass(lm, contexts[i]) - 1.0) <= 1e-9);
  for (const auto& w : lm.vocabulary()) {
    if (w != kSentenceStart) CHECK(lm.prob(contexts[0], lm.id(w)) > 0.0);
  }
}

TEST_CASE("appending a word strictly lowers the score") {
  const auto lines = read_lines(std::string(IMLY_SOURCE_DATA_DIR) + "/lyrics.txt");
  const auto lm = train_ngram(lines, 3, 0.1);
  Rng rng(2);
  const auto& vocab = lm.vocabulary();
  for (int t = 0; t < 200; ++t) {
    std::vector<std::string> words;
    double prev = lm_score(lm, words, false);
    for (int i = 0; i < 6; ++i) {
      words.push_back(vocab[rng.below(vocab.size())]);
      if (words.back() == kSentenceStart) words.back() = "zzz";
      const double now = lm_score(lm, words, false);
      CHECK(now < prev);
      prev = now;
    }
  }
}

TEST_CASE("moderation: line removal") {
  std::vector<std::string> corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back("plain line number " + std::to_string(i));
  corpus[3] = "this has a BadWord, in it";
  corpus[7] = "another worse one";
  const auto list = make_moderation_list({"badword", "worse"});
  const auto r = moderate_corpus(corpus, list);
  CHECK(r.removed == 2);
  REQUIRE(r.kept.size() == 8);
  CHECK(r.kept[0] == corpus[0]);
  // substrings do not count
  CHECK(moderate_corpus({"worsening things"}, list).removed == 0);
  CHECK_THROWS_AS(moderate_corpus(corpus, ModerationList{}), ConfigError);
  const auto lm = train_ngram(r.kept, 3, 0.1);
  for (const auto& k : list.keywords) CHECK(!lm.contains(k));
}

TEST_CASE("bundled corpus moderation leaves no keyword in the vocabulary") {
  const auto list = load_moderation_list(std::string(IMLY_SOURCE_DATA_DIR) + "/moderation.txt");
  const auto lines = read_lines(std::string(IMLY_SOURCE_DATA_DIR) + "/lyrics.txt");
  const auto r = moderate_corpus(lines, list);
  CHECK(r.removed > 0);
  const auto lm = train_ngram(r.kept, 3, 0.1);
  for (const auto& k : list.keywords) CHECK(!lm.contains(k));
}

TEST_CASE("persistence round trip") {
  const auto lines = read_lines(std::string(IMLY_SOURCE_DATA_DIR) + "/lyrics.txt");
  const auto lm = train_ngram(lines, 3, 0.1);
  const auto bytes = encode_ngram(lm);
  const auto back = decode_ngram(bytes);
  CHECK(encode_ngram(back) == bytes);
  CHECK(back.vocabulary() == lm.vocabulary());
  CHECK(std::is_sorted(lm.vocabulary().begin(), lm.vocabulary().end()));
  for (int t = 0; t < 20; ++t) {
    const std::vector<std::string> words = tokenize(lines[static_cast<std::size_t>(t) % lines.size()]);
    CHECK(std::abs(lm_score(back, words) - lm_score(lm, words)) <= 1e-6);
  }
  auto cut = bytes;
  cut.resize(cut.size() / 2);
  CHECK_THROWS_AS(decode_ngram(cut), DataError);
}

TEST_CASE("training errors") {
  CHECK_THROWS_AS(train_ngram({}, 3, 0.1), DataError);
  CHECK_THROWS_AS(train_ngram({"a"}, 0, 0.1), ConfigError);
  CHECK_THROWS_AS(train_ngram({"a"}, 2, -1.0), ConfigError);
}
