// include/imly/channel.h

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

#ifndef IMLY_CHANNEL_H_
#define IMLY_CHANNEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "imly/phonemes.h"

namespace imly {

/// Corruption model linking canonical pronunciations to recognizer output.
///
/// Each canonical symbol is kept (p_match), replaced by one of the other
/// alphabet_size - 1 symbols uniformly (p_sub) or dropped (p_del). There is a
/// gap before the first symbol, between symbols and after the last one; in
/// every gap symbols drawn uniformly from the alphabet are inserted while a
/// p_ins coin keeps succeeding, up to a per-gap cap.
struct ChannelParams {
  double p_match = 0.85;
  double p_sub = 0.10;
  double p_del = 0.05;
  double p_ins = 0.05;
  int alphabet_size = kNumPhonemes;

  /// Throws ConfigError unless all rates are in [0, 1], p_ins < 1,
  /// p_match + p_sub + p_del = 1 (within 1e-6) and alphabet_size >= 2.
  void validate() const;
  bool operator==(const ChannelParams&) const = default;
};

inline constexpr int kDefaultMaxInsertions = 2;

/// Samples corrupt(seq). Symbols are 1..alphabet_size.
std::vector<Phoneme> corrupt(const std::vector<Phoneme>& canonical, const ChannelParams& ch,
                             std::uint64_t seed, int max_insertions = kDefaultMaxInsertions);

/// log P(observed | canonical), summed over every edit path.
double channel_logprob(const std::vector<Phoneme>& observed,
                       const std::vector<Phoneme>& canonical, const ChannelParams& ch,
                       int max_insertions = kDefaultMaxInsertions);

/// Log-probability of the single best edit path.
double channel_viterbi_logprob(const std::vector<Phoneme>& observed,
                               const std::vector<Phoneme>& canonical,
                               const ChannelParams& ch,
                               int max_insertions = kDefaultMaxInsertions);

/// Log-probability of inserting exactly m symbols into one gap, not counting
/// the choice of symbols.
double gap_logprob(int m, double p_ins, int max_insertions);

struct ChannelPair {
  std::vector<Phoneme> canonical;
  std::vector<Phoneme> observed;
};

/// Ten EM iterations from p_match 0.7, p_sub = p_del = p_ins = 0.15, with
/// expected edit counts from forward-backward over channel_logprob's
/// lattice. Rates are floored: each of match/sub/del becomes
/// 1e-3 + (1 - 3e-3) * raw and p_ins becomes 1e-3 + (1 - 2e-3) * raw.
/// The alphabet size is taken from `alphabet`. Throws DataError on empty input.
ChannelParams estimate_channel(const std::vector<ChannelPair>& pairs,
                               int max_insertions = kDefaultMaxInsertions,
                               int alphabet = kNumPhonemes, int iterations = 10);

/// key=value text with p_match, p_sub, p_del, p_ins.
std::string format_channel(const ChannelParams& ch);
ChannelParams parse_channel(const std::string& text);
ChannelParams load_channel_file(const std::string& path);
void save_channel_file(const std::string& path, const ChannelParams& ch);

}  // namespace imly

#endif  // IMLY_CHANNEL_H_
