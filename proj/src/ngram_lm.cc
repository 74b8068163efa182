// src/ngram_lm.cc

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

#include "imly/ngram_lm.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "imly/audio_io.h"
#include "imly/error.h"
#include "imly/tensor_file.h"

namespace imly {

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : line) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c) && c != '\'') {
      continue;
    } else {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  flush();
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

ModerationList make_moderation_list(const std::vector<std::string>& words) {
  ModerationList list;
  for (const auto& w : words) {
    for (auto& tok : tokenize(w)) list.keywords.insert(std::move(tok));
  }
  return list;
}

ModerationList load_moderation_list(const std::string& path) {
  return make_moderation_list(read_lines(path));
}

ModerationResult moderate_corpus(const std::vector<std::string>& lines,
                                 const ModerationList& list) {
  if (list.keywords.empty()) {
    throw ConfigError("moderation is enabled but the keyword list is empty");
  }
  ModerationResult out;
  for (const auto& line : lines) {
    const auto tokens = tokenize(line);
    const bool flagged = std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
      return list.keywords.count(t) > 0;
    });
    if (flagged) {
      ++out.removed;
    } else {
      out.kept.push_back(line);
    }
  }
  return out;
}

std::size_t NGramLM::KeyHash::operator()(const std::vector<WordId>& v) const {
  std::uint64_t h = 1469598103934665603ull;
  for (WordId w : v) {
    h ^= w + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

void NGramLM::build_index() {
  index_.clear();
  for (WordId i = 0; i < vocab_.size(); ++i) index_[vocab_[i]] = i;
  auto need = [&](std::string_view w) {
    const auto it = index_.find(std::string(w));
    if (it == index_.end()) throw DataError("LM vocabulary lacks " + std::string(w));
    return it->second;
  };
  start_ = need(kSentenceStart);
  end_ = need(kSentenceEnd);
  unk_ = need(kUnknownWord);
}

NGramLM::WordId NGramLM::id(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  return it == index_.end() ? unk_ : it->second;
}

bool NGramLM::contains(std::string_view word) const {
  return index_.count(std::string(word)) > 0;
}

std::vector<NGramLM::WordId> NGramLM::initial_context() const {
  return std::vector<WordId>(static_cast<std::size_t>(order_ - 1), start_);
}

const NGramLM::ContextStats* NGramLM::stats(std::span<const WordId> context) const {
  const std::vector<WordId> key(context.begin(), context.end());
  const auto it = contexts_.find(key);
  return it == contexts_.end() ? nullptr : &it->second;
}

double NGramLM::ngram_count(std::span<const WordId> context, WordId word) const {
  const ContextStats* s = stats(context);
  if (!s) return 0.0;
  const auto it = s->counts.find(word);
  return it == s->counts.end() ? 0.0 : it->second;
}

double NGramLM::context_count(std::span<const WordId> context) const {
  const ContextStats* s = stats(context);
  return s ? s->total : 0.0;
}

std::vector<std::vector<NGramLM::WordId>> NGramLM::observed_contexts() const {
  std::vector<std::vector<WordId>> out;
  for (const auto& [ctx, s] : contexts_) {
    if (s.total > 0.0) out.push_back(ctx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double NGramLM::prob(std::span<const WordId> context, WordId word) const {
  const std::size_t max_ctx = static_cast<std::size_t>(order_ - 1);
  if (context.size() > max_ctx) context = context.subspan(context.size() - max_ctx);
  const double v = static_cast<double>(predicted_vocab_size());
  double factor = 1.0;
  for (std::size_t m = context.size() + 1; m-- > 0;) {
    const auto ctx = context.subspan(context.size() - m);
    const ContextStats* s = stats(ctx);
    if (s && s->total > 0.0) {
      const auto it = s->counts.find(word);
      const double c = it == s->counts.end() ? 0.0 : it->second;
      const double p = (c + k_) / (s->total + k_ * v);
      if (p > 0.0) return factor * p;
    }
    factor *= kBackoff;
  }
  return 0.0;
}

double NGramLM::log_prob(std::span<const WordId> context, WordId word) const {
  const double p = prob(context, word);
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

NGramLM train_ngram(const std::vector<std::string>& lines, int order, double k) {
  if (order < 1) throw ConfigError("n-gram order must be >= 1");
  if (!(k >= 0.0)) throw ConfigError("add-k constant must be >= 0");
  if (lines.empty()) throw DataError("cannot train a language model on an empty corpus");

  std::vector<std::vector<std::string>> tokenized;
  std::set<std::string> words{std::string(kSentenceStart), std::string(kSentenceEnd),
                              std::string(kUnknownWord)};
  for (const auto& line : lines) {
    tokenized.push_back(tokenize(line));
    words.insert(tokenized.back().begin(), tokenized.back().end());
  }

  NGramLM lm;
  lm.order_ = order;
  lm.k_ = k;
  lm.vocab_.assign(words.begin(), words.end());
  lm.build_index();

  const std::size_t n = static_cast<std::size_t>(order);
  for (const auto& toks : tokenized) {
    std::vector<NGramLM::WordId> seq(n - 1, lm.start_);
    for (const auto& t : toks) seq.push_back(lm.index_.at(t));
    seq.push_back(lm.end_);
    for (std::size_t i = n - 1; i < seq.size(); ++i) {
      for (std::size_t m = 0; m < n; ++m) {
        std::vector<NGramLM::WordId> ctx(seq.begin() + static_cast<long>(i - m),
                                         seq.begin() + static_cast<long>(i));
        auto& s = lm.contexts_[ctx];
        s.total += 1.0;
        s.counts[seq[i]] += 1.0;
      }
    }
  }
  return lm;
}

double lm_score(const NGramLM& lm, const std::vector<std::string>& words, bool include_end) {
  std::vector<NGramLM::WordId> ctx = lm.initial_context();
  double total = 0.0;
  auto step = [&](NGramLM::WordId w) {
    total += lm.log_prob(ctx, w);
    ctx.push_back(w);
  };
  for (const auto& w : words) step(lm.id(w));
  if (include_end) step(lm.end_id());
  return total;
}

std::vector<std::uint8_t> encode_ngram(const NGramLM& lm) {
  TensorSet set;
  set.tensors.push_back(Tensor{"lm.config",
                               {3},
                               {static_cast<float>(lm.order_), static_cast<float>(lm.k_),
                                static_cast<float>(NGramLM::kBackoff)}});
  for (int len = 1; len <= lm.order_; ++len) {
    std::vector<std::vector<float>> rows;
    for (const auto& [ctx, s] : lm.contexts_) {
      if (ctx.size() + 1 != static_cast<std::size_t>(len)) continue;
      for (const auto& [w, c] : s.counts) {
        std::vector<float> row(ctx.begin(), ctx.end());
        row.push_back(static_cast<float>(w));
        row.push_back(static_cast<float>(c));
        rows.push_back(std::move(row));
      }
    }
    std::sort(rows.begin(), rows.end());
    Tensor t{"lm.counts." + std::to_string(len),
             {static_cast<std::uint32_t>(rows.size()), static_cast<std::uint32_t>(len + 1)},
             {}};
    for (const auto& r : rows) t.data.insert(t.data.end(), r.begin(), r.end());
    set.tensors.push_back(std::move(t));
  }
  std::vector<std::uint8_t> out = encode_tensors(set);
  out.insert(out.end(), {'V', 'O', 'C', 'B'});
  put_le32(out, static_cast<std::uint32_t>(lm.vocab_.size()));
  for (const auto& w : lm.vocab_) {
    put_le16(out, static_cast<std::uint16_t>(w.size()));
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

NGramLM decode_ngram(std::span<const std::uint8_t> bytes) {
  const DecodedTensors decoded = decode_tensors(bytes);
  std::size_t pos = decoded.bytes_used;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw DataError("truncated LM vocabulary block");
  };
  need(8);
  if (std::memcmp(bytes.data() + pos, "VOCB", 4) != 0) {
    throw DataError("LM file lacks its vocabulary block");
  }
  pos += 4;
  auto u32 = [&] {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  };
  const std::uint32_t count = u32();
  NGramLM lm;
  for (std::uint32_t i = 0; i < count; ++i) {
    need(2);
    const std::size_t len = bytes[pos] | (bytes[pos + 1] << 8);
    pos += 2;
    need(len);
    lm.vocab_.emplace_back(reinterpret_cast<const char*>(bytes.data() + pos), len);
    pos += len;
  }
  if (!std::is_sorted(lm.vocab_.begin(), lm.vocab_.end())) {
    throw DataError("LM vocabulary block is not sorted");
  }
  lm.build_index();

  const Tensor& cfg = decoded.set.get("lm.config");
  if (cfg.data.size() < 2 || !(cfg.data[0] >= 1.0f)) throw DataError("bad lm.config tensor");
  lm.order_ = static_cast<int>(cfg.data[0]);
  lm.k_ = cfg.data[1];
  for (int len = 1; len <= lm.order_; ++len) {
    const Tensor& t = decoded.set.get("lm.counts." + std::to_string(len));
    const std::size_t cols = static_cast<std::size_t>(len + 1);
    if (t.dims.size() != 2 || t.dims[1] != cols) throw DataError("bad " + t.name + " shape");
    for (std::size_t r = 0; r < t.dims[0]; ++r) {
      const float* row = t.data.data() + r * cols;
      std::vector<NGramLM::WordId> ctx;
      for (int i = 0; i + 1 < len; ++i) ctx.push_back(static_cast<NGramLM::WordId>(row[i]));
      const auto w = static_cast<NGramLM::WordId>(row[len - 1]);
      if (w >= count) throw DataError("LM count refers to an unknown word id");
      auto& s = lm.contexts_[ctx];
      s.counts[w] += row[len];
      s.total += row[len];
    }
  }
  return lm;
}

NGramLM load_ngram_file(const std::string& path) {
  return decode_ngram(read_file_bytes(path));
}

}  // namespace imly
