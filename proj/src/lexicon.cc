// src/lexicon.cc

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

#include "imly/lexicon.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "imly/error.h"

namespace imly {

Lexicon::Lexicon(std::map<std::string, std::vector<std::vector<Phoneme>>> entries) {
  trie_.emplace_back();
  for (auto& [word, prons] : entries) {
    if (prons.empty()) continue;
    const WordId id = static_cast<WordId>(words_.size());
    words_.push_back(word);
    std::vector<std::vector<Phoneme>> unique;
    for (auto& p : prons) {
      if (p.empty()) throw DataError("word '" + word + "' has an empty pronunciation");
      for (Phoneme ph : p) {
        if (ph < 1 || ph > kNumPhonemes) {
          throw DataError("word '" + word + "' has an invalid phoneme");
        }
      }
      if (std::find(unique.begin(), unique.end(), p) == unique.end()) unique.push_back(p);
    }
    for (const auto& p : unique) {
      std::uint32_t node = kRoot;
      for (Phoneme ph : p) {
        const long long next = child(node, ph);
        if (next >= 0) {
          node = static_cast<std::uint32_t>(next);
          continue;
        }
        const auto created = static_cast<std::uint32_t>(trie_.size());
        trie_.emplace_back();
        auto& kids = trie_[node].children;
        kids.insert(std::lower_bound(kids.begin(), kids.end(), std::make_pair(ph, 0u)),
                    {ph, created});
        node = created;
      }
      trie_[node].words.push_back(id);
    }
    prons_.push_back(std::move(unique));
  }
}

const std::vector<std::vector<Phoneme>>* Lexicon::find(const std::string& word) const {
  const auto it = std::lower_bound(words_.begin(), words_.end(), word);
  if (it == words_.end() || *it != word) return nullptr;
  return &prons_[static_cast<std::size_t>(it - words_.begin())];
}

long long Lexicon::child(std::uint32_t node, Phoneme p) const {
  const auto& kids = trie_[node].children;
  const auto it = std::lower_bound(kids.begin(), kids.end(), std::make_pair(p, 0u));
  if (it == kids.end() || it->first != p) return -1;
  return it->second;
}

std::vector<Lexicon::WordId> Lexicon::lookup(const std::vector<Phoneme>& pron) const {
  if (trie_.empty()) return {};
  std::uint32_t node = kRoot;
  for (Phoneme p : pron) {
    const long long next = child(node, p);
    if (next < 0) return {};
    node = static_cast<std::uint32_t>(next);
  }
  return trie_[node].words;
}

Lexicon parse_lexicon(std::istream& in) {
  std::map<std::string, std::vector<std::vector<Phoneme>>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(";;;", 0) == 0) continue;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    // WORD(2) -> WORD
    if (word.size() > 3 && word.back() == ')') {
      const auto open = word.rfind('(');
      if (open != std::string::npos && open > 0 &&
          std::all_of(word.begin() + static_cast<long>(open) + 1, word.end() - 1,
                      [](unsigned char c) { return std::isdigit(c); })) {
        word.resize(open);
      }
    }
    for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::vector<Phoneme> pron;
    std::string sym;
    while (fields >> sym) {
      const auto p = phoneme_from_arpabet(sym);
      if (!p) {
        throw DataError("lexicon line " + std::to_string(line_no) + ": unknown phoneme '" +
                        sym + "'");
      }
      pron.push_back(*p);
    }
    if (pron.empty()) {
      throw DataError("lexicon line " + std::to_string(line_no) + ": no pronunciation for '" +
                      word + "'");
    }
    entries[word].push_back(std::move(pron));
  }
  return Lexicon(std::move(entries));
}

Lexicon parse_lexicon_text(const std::string& text) {
  std::istringstream in(text);
  return parse_lexicon(in);
}

Lexicon load_lexicon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon " + path);
  return parse_lexicon(in);
}

}  // namespace imly
