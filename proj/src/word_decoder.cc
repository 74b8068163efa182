// src/word_decoder.cc

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

#include "imly/word_decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <tuple>
#include <unordered_map>
#include <utility>

#include "imly/error.h"

namespace imly {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint32_t kEmptyHistory = 0;

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

struct StateKey {
  std::uint32_t hist;  // interned word history
  std::uint32_t node;  // trie node
  int c;               // canonical symbols spelled so far

  bool operator==(const StateKey&) const = default;
  bool operator<(const StateKey& o) const {
    return std::tie(hist, node, c) < std::tie(o.hist, o.node, o.c);
  }
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const {
    std::uint64_t h = k.hist;
    h = h * 0x9E3779B97F4A7C15ull + k.node;
    h = h * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(k.c);
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

struct Entry {
  double score;
  std::uint32_t prons;  // pronunciation history (payload, not part of the key)
};

using Scored = std::pair<StateKey, Entry>;

// Open-addressing map from state to best entry. Iteration follows slot
// order, which depends only on the insertion sequence.
class StateMap {
 public:
  void relax(const StateKey& k, double score, std::uint32_t prons) {
    if (!std::isfinite(score)) return;
    if (2 * (count_ + 1) > slots_.size()) grow();
    Slot& s = find_slot(slots_, k);
    if (!s.used) {
      s = Slot{k, Entry{score, prons}, true};
      ++count_;
    } else if (score > s.entry.score) {
      s.entry = Entry{score, prons};
    }
  }

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

  std::vector<Scored> items() const {
    std::vector<Scored> out;
    out.reserve(count_);
    for (const Slot& s : slots_) {
      if (s.used) out.emplace_back(s.key, s.entry);
    }
    return out;
  }

 private:
  struct Slot {
    StateKey key{};
    Entry entry{};
    bool used = false;
  };

  static Slot& find_slot(std::vector<Slot>& slots, const StateKey& k) {
    const std::size_t mask = slots.size() - 1;
    std::size_t i = StateKeyHash{}(k) & mask;
    while (slots[i].used && !(slots[i].key == k)) i = (i + 1) & mask;
    return slots[i];
  }

  void grow() {
    std::vector<Slot> bigger(slots_.empty() ? 16 : 2 * slots_.size());
    for (const Slot& s : slots_) {
      if (s.used) find_slot(bigger, s.key) = s;
    }
    slots_ = std::move(bigger);
  }

  std::vector<Slot> slots_;
  std::size_t count_ = 0;
};

// The `keep` best states; equal scores are ordered by key so the kept set
// is reproducible.
std::vector<Scored> ranked(std::vector<Scored> v, std::size_t keep) {
  if (v.size() <= keep) return v;
  auto better = [](const Scored& a, const Scored& b) {
    if (a.second.score != b.second.score) return a.second.score > b.second.score;
    return a.first < b.first;
  };
  std::nth_element(v.begin(), v.begin() + static_cast<long>(keep), v.end(), better);
  v.resize(keep);
  return v;
}

// Prefix tree of emitted words. Node 0 is the empty history.
class HistoryTree {
 public:
  HistoryTree() : nodes_(1) {}

  std::uint32_t extend(std::uint32_t parent, std::uint32_t label) {
    const std::uint64_t key = (static_cast<std::uint64_t>(parent) << 32) | label;
    const auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({parent, label});
    index_.emplace(key, id);
    return id;
  }

  // Labels from the oldest to the newest.
  std::vector<std::uint32_t> labels(std::uint32_t id) const {
    std::vector<std::uint32_t> out;
    for (; id != kEmptyHistory; id = nodes_[id].parent) out.push_back(nodes_[id].label);
    std::reverse(out.begin(), out.end());
    return out;
  }

  std::uint32_t parent(std::uint32_t id) const { return nodes_[id].parent; }
  std::uint32_t label(std::uint32_t id) const { return nodes_[id].label; }

 private:
  struct Node {
    std::uint32_t parent;
    std::uint32_t label;
  };
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
};

class Search {
 public:
  Search(const std::vector<Phoneme>& obs, const Lexicon& lex, const NGramLM& lm,
         const ChannelParams& ch, const DecoderConfig& cfg)
      : obs_(obs), lex_(lex), lm_(lm), ch_(ch), cfg_(cfg) {
    const double a = ch.alphabet_size;
    match_ = safe_log(ch.p_match);
    sub_ = safe_log(ch.p_sub / (a - 1.0));
    del_ = safe_log(ch.p_del);
    // m insertions in one gap, symbols included
    for (int m = 0; m <= cfg.max_insertions_per_gap; ++m) {
      gap_.push_back(gap_logprob(m, ch.p_ins, cfg.max_insertions_per_gap) - m * std::log(a));
    }
    monotone_ = cfg.lm_weight >= 0.0 && cfg.word_insertion_penalty <= 0.0;
    for (const auto& w : lex.words()) lm_ids_.push_back(lm.id(w));
    trie_parent_.assign(lex.trie().size(), {0u, 0});
    for (std::uint32_t n = 0; n < lex.trie().size(); ++n) {
      for (const auto& [ph, child] : lex.node(n).children) trie_parent_[child] = {n, ph};
    }
  }

  std::vector<WordSequenceScore> run() {
    const int len = static_cast<int>(obs_.size());
    const int cap = cfg_.max_insertions_per_gap;
    const int c_max = len + cfg_.max_net_deletions;
    const auto beam = static_cast<std::size_t>(cfg_.beam_width);
    const auto level_of = [](int c, bool root) { return static_cast<std::size_t>(2 * c + root); };

    // States sit at the start of a gap, before its insertions. A gap with m
    // insertions followed by a canonical step is a single transition that
    // moves m (delete) or m + 1 (match/sub) observed positions ahead.
    const std::size_t num_levels = level_of(c_max, true) + 1;
    std::vector<std::vector<StateMap>> pending(static_cast<std::size_t>(len) + 1,
                                               std::vector<StateMap>(num_levels));
    pending[0][level_of(0, true)].relax(StateKey{kEmptyHistory, Lexicon::kRoot, 0}, 0.0,
                                        kEmptyHistory);
    std::map<std::uint32_t, Entry> complete;
    auto accept = [&](const StateKey& k, const Entry& e, int m) {
      const double s = e.score + gap_[static_cast<std::size_t>(m)] + end_term(k.hist);
      if (!std::isfinite(s)) return;
      auto [it, inserted] = complete.try_emplace(k.hist, Entry{s, e.prons});
      if (!inserted && s > it->second.score) it->second = Entry{s, e.prons};
    };

    for (int j = 0; j <= len; ++j) {
      // Levels ordered by (c, at_root): same-position deletions raise c and
      // word emissions move to the root at the same c, so this is topological.
      std::vector<StateMap> levels = std::move(pending[static_cast<std::size_t>(j)]);

      std::vector<Scored> done;
      // Scores of the `beam` best states seen at this position. Anything
      // strictly below the worst of them cannot be carried, and when word
      // emission never raises a score neither can anything it leads to.
      std::priority_queue<double, std::vector<double>, std::greater<double>> best;
      for (std::size_t li = 0; li < levels.size(); ++li) {
        if (levels[li].empty()) continue;
        pruned_ = pruned_ || levels[li].size() > beam;
        const auto level = ranked(levels[li].items(), beam);
        levels[li] = StateMap{};
        for (const auto& [k, e] : level) {
          if (monotone_ && best.size() == beam && e.score < best.top()) {
            pruned_ = true;
            continue;
          }
          best.push(e.score);
          if (best.size() > beam) best.pop();
          done.emplace_back(k, e);
          const auto& tn = lex_.node(k.node);
          if (k.c < c_max) {
            const double base = e.score + gap_[0] + del_;
            auto& dst = levels[level_of(k.c + 1, false)];
            for (const auto& [ph, child] : tn.children) {
              dst.relax(StateKey{k.hist, child, k.c + 1}, base, e.prons);
            }
          }
          for (Lexicon::WordId w : tn.words) {
            const double lm = lm_term(k.hist, w);
            levels[level_of(k.c, true)].relax(
                StateKey{histories_.extend(k.hist, w), Lexicon::kRoot, k.c},
                e.score + lm + cfg_.word_insertion_penalty, prons_.extend(e.prons, k.node));
          }
        }
      }

      if (j < len) pruned_ = pruned_ || done.size() > beam;
      const std::vector<Scored> alive = j == len ? std::move(done) : ranked(std::move(done), beam);
      const int room = std::min(cap, len - j);
      for (const auto& [k, e] : alive) {
        if (k.node == Lexicon::kRoot && len - j <= cap) accept(k, e, len - j);
        if (k.c >= c_max) continue;
        const auto& children = lex_.node(k.node).children;
        for (int m = 0; m <= room; ++m) {
          const double base = e.score + gap_[static_cast<std::size_t>(m)];
          if (m >= 1) {
            auto& dst = pending[static_cast<std::size_t>(j + m)][level_of(k.c + 1, false)];
            for (const auto& [ph, child] : children) {
              dst.relax(StateKey{k.hist, child, k.c + 1}, base + del_, e.prons);
            }
          }
          if (j + m < len) {
            const Phoneme o = obs_[static_cast<std::size_t>(j + m)];
            auto& dst = pending[static_cast<std::size_t>(j + m + 1)][level_of(k.c + 1, false)];
            for (const auto& [ph, child] : children) {
              dst.relax(StateKey{k.hist, child, k.c + 1}, base + (ph == o ? match_ : sub_), e.prons);
            }
          }
        }
      }
    }
    return collect(complete);
  }

 private:

  std::vector<NGramLM::WordId> context(std::uint32_t hist) const {
    std::vector<NGramLM::WordId> ctx;
    const std::size_t want = static_cast<std::size_t>(lm_.order() - 1);
    for (std::uint32_t h = hist; h != kEmptyHistory && ctx.size() < want; h = histories_.parent(h)) {
      ctx.push_back(lm_ids_[histories_.label(h)]);
    }
    while (ctx.size() < want) ctx.push_back(lm_.start_id());
    std::reverse(ctx.begin(), ctx.end());
    return ctx;
  }

  double weighted(double logp) const {
    if (cfg_.lm_weight == 0.0) return 0.0;
    return cfg_.lm_weight * logp;
  }

  double lm_term(std::uint32_t hist, Lexicon::WordId w) {
    const std::uint64_t key = (static_cast<std::uint64_t>(hist) << 32) | w;
    const auto it = lm_cache_.find(key);
    if (it != lm_cache_.end()) return it->second;
    const double v = weighted(lm_.log_prob(context(hist), lm_ids_[w]));
    lm_cache_.emplace(key, v);
    return v;
  }

  double end_term(std::uint32_t hist) const {
    return weighted(lm_.log_prob(context(hist), lm_.end_id()));
  }

  std::vector<Phoneme> spelled(std::uint32_t prons) const {
    std::vector<Phoneme> out;
    for (std::uint32_t terminal : prons_.labels(prons)) {
      std::vector<Phoneme> word;
      for (std::uint32_t n = terminal; n != Lexicon::kRoot; n = trie_parent_[n].first) {
        word.push_back(trie_parent_[n].second);
      }
      out.insert(out.end(), word.rbegin(), word.rend());
    }
    return out;
  }

  std::vector<WordSequenceScore> collect(const std::map<std::uint32_t, Entry>& complete) const {
    std::vector<WordSequenceScore> out;
    for (const auto& [hist, e] : complete) {
      WordSequenceScore ws;
      for (std::uint32_t w : histories_.labels(hist)) ws.words.push_back(lex_.word(w));
      ws.canonical = spelled(e.prons);
      // The surviving alignment can be worse than the best one for the same
      // spelling once pruning kicks in; report the exact path score.
      ws.score = std::max(e.score, path_score(obs_, ws.words, ws.canonical, lm_, ch_, cfg_));
      out.push_back(std::move(ws));
    }
    return out;
  }

 public:
  bool pruned() const { return pruned_; }

 private:
  bool pruned_ = false;

  const std::vector<Phoneme>& obs_;
  const Lexicon& lex_;
  const NGramLM& lm_;
  const ChannelParams& ch_;
  const DecoderConfig& cfg_;
  double match_, sub_, del_;
  bool monotone_ = false;
  std::vector<double> gap_;
  std::vector<NGramLM::WordId> lm_ids_;
  std::vector<std::pair<std::uint32_t, Phoneme>> trie_parent_;
  HistoryTree histories_;  // labels are lexicon word ids
  HistoryTree prons_;      // labels are word-final trie nodes
  std::unordered_map<std::uint64_t, double> lm_cache_;
};

}  // namespace

void DecoderConfig::validate() const {
  if (beam_width < 1) throw ConfigError("beam_width must be >= 1");
  if (n_best < 1) throw ConfigError("n_best must be >= 1");
  if (max_insertions_per_gap < 0) throw ConfigError("max_insertions_per_gap must be >= 0");
  if (max_net_deletions < 0) throw ConfigError("max_net_deletions must be >= 0");
  if (!std::isfinite(lm_weight)) throw ConfigError("lm_weight must be finite");
  if (!std::isfinite(word_insertion_penalty)) {
    throw ConfigError("word_insertion_penalty must be finite");
  }
}

std::vector<WordSequenceScore> decode_words(const std::vector<Phoneme>& observed,
                                            const Lexicon& lex, const NGramLM& lm,
                                            const ChannelParams& ch,
                                            const DecoderConfig& cfg) {
  cfg.validate();
  ch.validate();
  if (lex.empty()) throw ConfigError("cannot decode words with an empty lexicon");
  for (Phoneme p : observed) {
    if (p < 1 || p > ch.alphabet_size) throw DataError("observed phoneme out of range");
  }
  // Results at width W merge the runs at widths 1, 2, 4, ... below W, so a
  // wider power-of-two beam never loses a sequence a narrower one found. A
  // run that prunes nothing is exact and dominates every narrower run, so
  // the ladder is skipped then. While nothing completes, widen past W.
  std::map<std::vector<std::string>, WordSequenceScore> merged;
  auto run_at = [&](long long width) {
    DecoderConfig attempt = cfg;
    attempt.beam_width = static_cast<int>(width);
    Search search(observed, lex, lm, ch, attempt);
    for (auto& ws : search.run()) {
      auto it = merged.find(ws.words);
      if (it == merged.end()) {
        merged.emplace(ws.words, std::move(ws));
      } else if (ws.score > it->second.score) {
        it->second = std::move(ws);
      }
    }
    return search.pruned();
  };
  const long long target = cfg.beam_width;
  if (run_at(target)) {
    for (long long width = 1; width < target; width *= 2) {
      if (!run_at(width)) break;
    }
    for (long long width = 2 * target; merged.empty() && width <= (1 << 24); width *= 2) {
      if (!run_at(width)) break;
    }
  }
  std::vector<WordSequenceScore> out;
  for (auto& [words, ws] : merged) out.push_back(std::move(ws));
  std::sort(out.begin(), out.end(), [](const WordSequenceScore& a, const WordSequenceScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.words < b.words;
  });
  if (out.size() > static_cast<std::size_t>(cfg.n_best)) out.resize(static_cast<std::size_t>(cfg.n_best));
  return out;
}

double path_score(const std::vector<Phoneme>& observed, const std::vector<std::string>& words,
                  const std::vector<Phoneme>& canonical, const NGramLM& lm,
                  const ChannelParams& ch, const DecoderConfig& cfg) {
  const double channel =
      channel_viterbi_logprob(observed, canonical, ch, cfg.max_insertions_per_gap);
  const double lm_part = cfg.lm_weight == 0.0 ? 0.0 : cfg.lm_weight * lm_score(lm, words, true);
  return channel + lm_part + cfg.word_insertion_penalty * static_cast<double>(words.size());
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

}  // namespace imly
