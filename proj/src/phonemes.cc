// src/phonemes.cc

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

#include "imly/phonemes.h"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "imly/error.h"

namespace imly {

std::optional<Phoneme> phoneme_index(std::string_view symbol) {
  for (int i = 0; i < kNumPhonemes; ++i) {
    if (kPhonemeSymbols[i] == symbol) return i + 1;
  }
  return std::nullopt;
}

std::optional<Phoneme> phoneme_from_arpabet(std::string_view symbol) {
  while (!symbol.empty() &&
         std::isdigit(static_cast<unsigned char>(symbol.back()))) {
    symbol.remove_suffix(1);
  }
  std::string upper(symbol);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return phoneme_index(upper);
}

std::string_view phoneme_symbol(Phoneme p) {
  if (p == kBlank) return "<b>";
  if (p < 1 || p > kNumPhonemes) return "?";
  return kPhonemeSymbols[static_cast<std::size_t>(p - 1)];
}

std::string to_string(const std::vector<Phoneme>& symbols) {
  std::string out;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i) out += ' ';
    out += phoneme_symbol(symbols[i]);
  }
  return out;
}

std::vector<Phoneme> parse_phonemes(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<Phoneme> out;
  std::string tok;
  while (in >> tok) {
    const auto p = phoneme_from_arpabet(tok);
    if (!p) throw DataError("unknown phoneme symbol '" + tok + "'");
    out.push_back(*p);
  }
  return out;
}

std::size_t edit_distance(const std::vector<Phoneme>& a, const std::vector<Phoneme>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double token_accuracy(const std::vector<std::vector<Phoneme>>& refs,
                      const std::vector<std::vector<Phoneme>>& hyps) {
  std::size_t errors = 0, total = 0;
  for (std::size_t i = 0; i < refs.size() && i < hyps.size(); ++i) {
    errors += edit_distance(refs[i], hyps[i]);
    total += refs[i].size();
  }
  return total ? 1.0 - static_cast<double>(errors) / static_cast<double>(total) : 1.0;
}

}  // namespace imly
