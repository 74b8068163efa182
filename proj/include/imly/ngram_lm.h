// include/imly/ngram_lm.h

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

#ifndef IMLY_NGRAM_LM_H_
#define IMLY_NGRAM_LM_H_

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace imly {

inline constexpr std::string_view kSentenceStart = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";
inline constexpr std::string_view kUnknownWord = "<unk>";

/// Lowercases ASCII, splits on whitespace and removes punctuation other than
/// apostrophes from each token. Empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view line);

struct ModerationList {
  std::set<std::string> keywords;  // lowercase, punctuation stripped
};

ModerationList load_moderation_list(const std::string& path);
ModerationList make_moderation_list(const std::vector<std::string>& words);

struct ModerationResult {
  std::vector<std::string> kept;
  std::size_t removed = 0;
};

/// Drops every line containing a token equal to a keyword. Lines are removed
/// whole, never edited. An empty list is a configuration error.
ModerationResult moderate_corpus(const std::vector<std::string>& lines,
                                 const ModerationList& list);

/// Add-k smoothed n-gram model with stupid backoff to shorter contexts that
/// were never observed.
///
///   P(w | ctx) = (count(ctx, w) + k) / (count(ctx) + k |V|)
///
/// where V is every vocabulary entry that can be predicted (all words plus
/// </s> and <unk>, excluding <s>). When count(ctx) is zero, or the smoothed
/// value is zero (k = 0 and w unseen after ctx), the model returns
/// 0.4 * P(w | shorter ctx).
class NGramLM {
 public:
  using WordId = std::uint32_t;

  static constexpr double kBackoff = 0.4;

  int order() const { return order_; }
  double k() const { return k_; }

  const std::vector<std::string>& vocabulary() const { return vocab_; }
  std::size_t predicted_vocab_size() const { return vocab_.size() - 1; }
  /// Id of `word`, or the <unk> id.
  WordId id(std::string_view word) const;
  bool contains(std::string_view word) const;
  WordId start_id() const { return start_; }
  WordId end_id() const { return end_; }
  WordId unk_id() const { return unk_; }

  /// Context is given oldest-first; only the last order-1 entries are used.
  double prob(std::span<const WordId> context, WordId word) const;
  double log_prob(std::span<const WordId> context, WordId word) const;

  /// Context of order-1 sentence-start markers.
  std::vector<WordId> initial_context() const;

  /// Count of ctx followed by w, and of ctx as a context. Zero if unseen.
  double ngram_count(std::span<const WordId> context, WordId word) const;
  double context_count(std::span<const WordId> context) const;
  /// Contexts observed in training, each oldest-first.
  std::vector<std::vector<WordId>> observed_contexts() const;

  friend NGramLM train_ngram(const std::vector<std::string>& lines, int order, double k);
  friend NGramLM decode_ngram(std::span<const std::uint8_t> bytes);
  friend std::vector<std::uint8_t> encode_ngram(const NGramLM& lm);

 private:
  struct ContextStats {
    double total = 0.0;
    std::unordered_map<WordId, double> counts;
  };
  struct KeyHash {
    std::size_t operator()(const std::vector<WordId>& v) const;
  };

  void build_index();
  const ContextStats* stats(std::span<const WordId> context) const;

  int order_ = 3;
  double k_ = 0.1;
  std::vector<std::string> vocab_;  // sorted
  std::unordered_map<std::string, WordId> index_;
  WordId start_ = 0, end_ = 0, unk_ = 0;
  std::unordered_map<std::vector<WordId>, ContextStats, KeyHash> contexts_;
};

/// Tokenizes each line, wraps it in order-1 <s> markers and one </s>, and
/// counts every n-gram of length 1..order. Throws DataError on an empty
/// corpus and ConfigError on order < 1 or k < 0.
NGramLM train_ngram(const std::vector<std::string>& lines, int order = 3, double k = 0.1);

/// Sum of natural-log probabilities of `words` (tokens outside the
/// vocabulary map to <unk>), starting from the sentence-start context and,
/// when include_end is set, ending with </s>.
double lm_score(const NGramLM& lm, const std::vector<std::string>& words,
                bool include_end = true);

// Persistence: an IMLY container holding "lm.config" = [order, k, backoff]
// and, for each n = 1..order, "lm.counts.<n>" with one row per observed
// n-gram: n word ids followed by its count. A vocabulary block follows the
// container: "VOCB", u32 entry count, then per entry u16 byte length and
// UTF-8 bytes, in lexicographic (byte) order; ids are positions in it.
std::vector<std::uint8_t> encode_ngram(const NGramLM& lm);
NGramLM decode_ngram(std::span<const std::uint8_t> bytes);
NGramLM load_ngram_file(const std::string& path);

std::vector<std::string> read_lines(const std::string& path);

}  // namespace imly

#endif  // IMLY_NGRAM_LM_H_
