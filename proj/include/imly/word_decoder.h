// include/imly/word_decoder.h

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

#ifndef IMLY_WORD_DECODER_H_
#define IMLY_WORD_DECODER_H_

#include <string>
#include <vector>

#include "imly/channel.h"
#include "imly/lexicon.h"
#include "imly/ngram_lm.h"
#include "imly/phonemes.h"

namespace imly {

struct DecoderConfig {
  int beam_width = 64;
  double lm_weight = 1.0;
  double word_insertion_penalty = 0.0;  // added once per emitted word
  int n_best = 5;
  int max_insertions_per_gap = kDefaultMaxInsertions;
  // Hypotheses may spell at most len(observed) + max_net_deletions canonical
  // phonemes in total.
  int max_net_deletions = 4;

  void validate() const;
  bool operator==(const DecoderConfig&) const = default;
};

struct WordSequenceScore {
  std::vector<std::string> words;
  double score = 0.0;
  // Pronunciation chosen for each word along the best path, concatenated.
  std::vector<Phoneme> canonical;
};

/// Beam search over (word history, trie node, observed index) states.
///
/// Transitions, in log probability:
///   consume observed[j] and advance one trie edge: log p_match, or
///     log(p_sub / (A - 1)) if the symbols differ
///   advance a trie edge without consuming: log p_del
///   consume observed[j] in place: log p_ins - log A, at most
///     max_insertions_per_gap times per gap
///   at a word-final node: emit the word, add
///     lm_weight * log P(word | history) + word_insertion_penalty, back to root
/// Leaving a gap with fewer than the maximum insertions adds log(1 - p_ins),
/// so a path's channel part equals its probability under corrupt(). A
/// hypothesis is complete at the root once every observed symbol is consumed,
/// adding lm_weight * log P(</s> | history).
///
/// Paths reaching the same state are merged keeping the best score. States
/// are expanded level by level within each observed index (a level is the
/// number of canonical symbols spelled so far); each level, and the set
/// carried to the next observed index, keeps at most beam_width states.
/// Returns up to n_best distinct word sequences by descending score, ties
/// going to the lexicographically smaller sequence. Throws ConfigError on
/// an empty lexicon.
std::vector<WordSequenceScore> decode_words(const std::vector<Phoneme>& observed,
                                            const Lexicon& lex, const NGramLM& lm,
                                            const ChannelParams& ch,
                                            const DecoderConfig& cfg);

/// Score the decoder assigns to a fixed word sequence spelled by `canonical`:
/// best-path channel log-probability plus lm_weight * lm_score (with </s>)
/// plus one penalty per word.
double path_score(const std::vector<Phoneme>& observed, const std::vector<std::string>& words,
                  const std::vector<Phoneme>& canonical, const NGramLM& lm,
                  const ChannelParams& ch, const DecoderConfig& cfg);

std::string join_words(const std::vector<std::string>& words);

}  // namespace imly

#endif  // IMLY_WORD_DECODER_H_
