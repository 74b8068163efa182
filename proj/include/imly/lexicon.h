// include/imly/lexicon.h

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

#ifndef IMLY_LEXICON_H_
#define IMLY_LEXICON_H_

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "imly/phonemes.h"

namespace imly {

/// Pronunciation dictionary plus a prefix tree over pronunciations. Word ids
/// index the lexicographically sorted word list, so comparing id sequences
/// compares word sequences.
class Lexicon {
 public:
  using WordId = std::uint32_t;

  struct TrieNode {
    std::vector<std::pair<Phoneme, std::uint32_t>> children;  // sorted by phoneme
    std::vector<WordId> words;  // words whose pronunciation ends here
  };

  static constexpr std::uint32_t kRoot = 0;

  Lexicon() = default;
  explicit Lexicon(std::map<std::string, std::vector<std::vector<Phoneme>>> entries);

  std::size_t num_words() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const std::string& word(WordId id) const { return words_[id]; }
  const std::vector<std::string>& words() const { return words_; }
  /// Pronunciations in insertion order, duplicates removed.
  const std::vector<std::vector<Phoneme>>& pronunciations(WordId id) const {
    return prons_[id];
  }
  const std::vector<std::vector<Phoneme>>* find(const std::string& word) const;
  bool contains(const std::string& word) const { return find(word) != nullptr; }

  const std::vector<TrieNode>& trie() const { return trie_; }
  const TrieNode& node(std::uint32_t id) const { return trie_[id]; }
  /// Child of `node` along `p`, or -1.
  long long child(std::uint32_t node, Phoneme p) const;
  /// Words spelled exactly by `pron` according to the trie.
  std::vector<WordId> lookup(const std::vector<Phoneme>& pron) const;

 private:
  std::vector<std::string> words_;
  std::vector<std::vector<std::vector<Phoneme>>> prons_;
  std::vector<TrieNode> trie_;
};

/// Parses CMUdict text: `WORD  PH1 PH2 ...`, alternates as `WORD(2)`,
/// comment lines starting with `;;;`. Stress digits are stripped and words
/// lowercased. An unknown phoneme raises DataError naming the line.
Lexicon parse_lexicon(std::istream& in);
Lexicon parse_lexicon_text(const std::string& text);
Lexicon load_lexicon_file(const std::string& path);

}  // namespace imly

#endif  // IMLY_LEXICON_H_
