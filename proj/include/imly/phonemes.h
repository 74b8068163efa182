// include/imly/phonemes.h

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

#ifndef IMLY_PHONEMES_H_
#define IMLY_PHONEMES_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace imly {

/// Stress-free ARPAbet phone set. Index 0 is the CTC blank; phonemes occupy
/// 1..39 in the order below.
inline constexpr int kNumPhonemes = 39;
inline constexpr int kNumClasses = kNumPhonemes + 1;
inline constexpr int kBlank = 0;

inline constexpr std::array<std::string_view, kNumPhonemes> kPhonemeSymbols = {
    "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH",
    "EH", "ER", "EY", "F",  "G",  "HH", "IH", "IY", "JH", "K",
    "L",  "M",  "N",  "NG", "OW", "OY", "P",  "R",  "S",  "SH",
    "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"};

using Phoneme = int;

/// Looks up a stress-free symbol ("AH"), returning its 1-based index.
std::optional<Phoneme> phoneme_index(std::string_view symbol);

/// Like phoneme_index but first strips trailing stress digits ("AH0").
std::optional<Phoneme> phoneme_from_arpabet(std::string_view symbol);

std::string_view phoneme_symbol(Phoneme p);

struct FrameSpan {
  int begin = 0;  // first frame
  int end = 0;    // one past the last frame
  bool operator==(const FrameSpan&) const = default;
};

/// Decoded phoneme string. Never contains the blank.
struct PhonemeSequence {
  std::vector<Phoneme> symbols;
  std::vector<FrameSpan> spans;  // empty, or one per symbol

  std::size_t size() const { return symbols.size(); }
  bool empty() const { return symbols.empty(); }
  bool operator==(const PhonemeSequence& o) const { return symbols == o.symbols; }
};

/// Space-separated symbols, e.g. "HH AH L OW".
std::string to_string(const std::vector<Phoneme>& symbols);

/// Levenshtein distance (unit costs).
std::size_t edit_distance(const std::vector<Phoneme>& a, const std::vector<Phoneme>& b);

/// Token accuracy 1 - sum(edit distance) / sum(reference length) over pairs.
double token_accuracy(const std::vector<std::vector<Phoneme>>& refs,
                      const std::vector<std::vector<Phoneme>>& hyps);

/// Parses space-separated symbols (stress digits allowed). Throws DataError
/// on an unknown symbol.
std::vector<Phoneme> parse_phonemes(std::string_view text);

}  // namespace imly

#endif  // IMLY_PHONEMES_H_
