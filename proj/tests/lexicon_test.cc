// tests/lexicon_test.cc

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

#include "doctest.h"
#include "imly/error.h"
#include "imly/lexicon.h"

using namespace imly;

namespace {

std::vector<Phoneme> ph(const std::string& text) { return parse_phonemes(text); }

}  // namespace

TEST_CASE("phoneme alphabet is a bijection with blank at 0") {
  for (Phoneme p = 1; p <= kNumPhonemes; ++p) CHECK(*phoneme_index(phoneme_symbol(p)) == p);
  CHECK(!phoneme_index("XX").has_value());
  CHECK(*phoneme_from_arpabet("AH0") == *phoneme_index("AH"));
  CHECK(*phoneme_from_arpabet("ow1") == *phoneme_index("OW"));
}

TEST_CASE("parse_lexicon: stress stripping, comments, alternates") {
  const auto lex = parse_lexicon_text(
      ";;; header comment\n"
      "HELLO  HH AH0 L OW1\n"
      "READ  R IY1 D\n"
      "READ(2)  R EH1 D\n"
      "READ(3)  R EH1 D\n");
  CHECK(lex.num_words() == 2);
  REQUIRE(lex.find("hello"));
  CHECK(*lex.find("hello") == std::vector<std::vector<Phoneme>>{ph("HH AH L OW")});
  REQUIRE(lex.find("read"));
  CHECK(*lex.find("read") == std::vector<std::vector<Phoneme>>{ph("R IY D"), ph("R EH D")});
  CHECK(!lex.contains("HELLO"));
}

TEST_CASE("parse_lexicon: unknown symbol reports the line") {
  try {
    parse_lexicon_text("A  AH0\nB  B QQ1\n");
    FAIL("no error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("trie and map hold the same entries") {
  const auto lex = load_lexicon_file(std::string(IMLY_SOURCE_DATA_DIR) + "/lexicon.dict");
  REQUIRE(lex.num_words() > 50);
  std::size_t pairs = 0;
  for (Lexicon::WordId w = 0; w < lex.num_words(); ++w) {
    for (const auto& p : lex.pronunciations(w)) {
      const auto hits = lex.lookup(p);
      CHECK(std::find(hits.begin(), hits.end(), w) != hits.end());
      ++pairs;
    }
  }
  // every word label in the trie is backed by a real pronunciation
  std::size_t labels = 0;
  for (const auto& node : lex.trie()) labels += node.words.size();
  CHECK(labels == pairs);
  CHECK(lex.lookup(ph("ZH ZH ZH ZH")).empty());
}

TEST_CASE("words are lowercase and keep apostrophes") {
  const auto lex = parse_lexicon_text("DON'T  D OW1 N T\n");
  CHECK(lex.contains("don't"));
}
