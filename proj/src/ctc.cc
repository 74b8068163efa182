// src/ctc.cc

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

#include "imly/ctc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "imly/error.h"

namespace imly {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log3(double a, double b, double c) { return log_sum_exp(log_sum_exp(a, b), c); }

// Blank-interleaved label sequence: blank, y1, blank, y2, ..., blank.
std::vector<int> extended_labels(const std::vector<Phoneme>& target) {
  std::vector<int> ext(2 * target.size() + 1, kBlank);
  for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  return ext;
}

void check_target(const Posteriorgram& post, const std::vector<Phoneme>& target) {
  if (post.probs.cols() != static_cast<std::size_t>(kNumClasses)) {
    throw ConfigError("posteriorgram must have " + std::to_string(kNumClasses) + " columns");
  }
  if (target.empty()) throw DataError("CTC target must be nonempty");
  for (Phoneme p : target) {
    if (p < 1 || p > kNumPhonemes) throw DataError("CTC target contains an invalid symbol");
  }
  const std::size_t need = ctc_min_frames(target);
  if (post.num_frames() < need) {
    throw DataError("CTC target infeasible: needs " + std::to_string(need) +
                    " frames, have " + std::to_string(post.num_frames()));
  }
}

Matrix<double> log_probs(const Posteriorgram& post) {
  Matrix<double> lp(post.probs.rows(), post.probs.cols());
  for (std::size_t i = 0; i < lp.data().size(); ++i) {
    const double p = post.probs.data()[i];
    lp.data()[i] = p > 0.0 ? std::log(p) : kNegInf;
  }
  return lp;
}

Matrix<double> forward_vars(const Matrix<double>& lp, const std::vector<int>& ext) {
  const std::size_t T = lp.rows(), S = ext.size();
  Matrix<double> alpha(T, S, kNegInf);
  alpha(0, 0) = lp(0, ext[0]);
  if (S > 1) alpha(0, 1) = lp(0, ext[1]);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      const double b = s >= 1 ? alpha(t - 1, s - 1) : kNegInf;
      const double c = (s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2])
                           ? alpha(t - 1, s - 2)
                           : kNegInf;
      a = log3(a, b, c);
      alpha(t, s) = a == kNegInf ? kNegInf : a + lp(t, ext[s]);
    }
  }
  return alpha;
}

Matrix<double> backward_vars(const Matrix<double>& lp, const std::vector<int>& ext) {
  const std::size_t T = lp.rows(), S = ext.size();
  Matrix<double> beta(T, S, kNegInf);
  beta(T - 1, S - 1) = lp(T - 1, ext[S - 1]);
  if (S > 1) beta(T - 1, S - 2) = lp(T - 1, ext[S - 2]);
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = beta(t + 1, s);
      const double b = s + 1 < S ? beta(t + 1, s + 1) : kNegInf;
      const double c = (s + 2 < S && ext[s] != kBlank && ext[s] != ext[s + 2])
                           ? beta(t + 1, s + 2)
                           : kNegInf;
      a = log3(a, b, c);
      beta(t, s) = a == kNegInf ? kNegInf : a + lp(t, ext[s]);
    }
  }
  return beta;
}

double total_log_prob(const Matrix<double>& alpha) {
  const std::size_t T = alpha.rows(), S = alpha.cols();
  return log_sum_exp(alpha(T - 1, S - 1), S > 1 ? alpha(T - 1, S - 2) : kNegInf);
}

}  // namespace

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

Posteriorgram Posteriorgram::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, num_frames());
  begin = std::min(begin, end);
  Posteriorgram out;
  out.frame_hop_seconds = frame_hop_seconds;
  out.probs = Matrix<double>(end - begin, probs.cols());
  for (std::size_t t = begin; t < end; ++t) {
    std::copy(probs.row(t).begin(), probs.row(t).end(), out.probs.row(t - begin).begin());
  }
  return out;
}

std::size_t ctc_min_frames(const std::vector<Phoneme>& target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (target[i] == target[i - 1]) ++n;
  }
  return n;
}

double ctc_loss(const Posteriorgram& post, const std::vector<Phoneme>& target) {
  check_target(post, target);
  const auto ext = extended_labels(target);
  const auto lp = log_probs(post);
  const double logp = total_log_prob(forward_vars(lp, ext));
  // Probabilities are at most one, so the loss is nonnegative; the clamp
  // only removes rounding noise around zero.
  return std::max(0.0, -logp);
}

CtcGradient ctc_grad(const Posteriorgram& post, const std::vector<Phoneme>& target) {
  check_target(post, target);
  const auto ext = extended_labels(target);
  const auto lp = log_probs(post);
  const auto alpha = forward_vars(lp, ext);
  const auto beta = backward_vars(lp, ext);
  const double logp = total_log_prob(alpha);

  const std::size_t T = lp.rows(), S = ext.size();
  CtcGradient out;
  out.loss = std::max(0.0, -logp);
  out.logits_grad = post.probs;
  std::vector<double> occ(kNumClasses);
  for (std::size_t t = 0; t < T; ++t) {
    std::fill(occ.begin(), occ.end(), kNegInf);
    for (std::size_t s = 0; s < S; ++s) {
      const double v = alpha(t, s) + beta(t, s) - lp(t, ext[s]);
      occ[ext[s]] = log_sum_exp(occ[ext[s]], v);
    }
    for (int k = 0; k < kNumClasses; ++k) {
      if (occ[k] != kNegInf) out.logits_grad(t, k) -= std::exp(occ[k] - logp);
    }
  }
  return out;
}

PhonemeSequence greedy_decode(const Posteriorgram& post) {
  PhonemeSequence out;
  int prev = kBlank;
  for (std::size_t t = 0; t < post.num_frames(); ++t) {
    const auto row = post.probs.row(t);
    const int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    const int frame = static_cast<int>(t);
    if (best != kBlank && best == prev) {
      out.spans.back().end = frame + 1;
    } else if (best != kBlank) {
      out.symbols.push_back(best);
      out.spans.push_back({frame, frame + 1});
    }
    prev = best;
  }
  return out;
}

std::vector<PhonemeHypothesis> beam_decode(const Posteriorgram& post, int width) {
  if (width < 1) throw ConfigError("beam width must be >= 1");
  struct Score {
    double blank = kNegInf;
    double non_blank = kNegInf;
    double total() const { return log_sum_exp(blank, non_blank); }
  };
  using Beam = std::map<std::vector<Phoneme>, Score>;

  auto prune = [width](const Beam& beam) {
    std::vector<std::pair<std::vector<Phoneme>, Score>> items(beam.begin(), beam.end());
    // std::map iteration is lexicographic, so a stable sort on score keeps
    // the lexicographic tie-break.
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
      return a.second.total() > b.second.total();
    });
    if (items.size() > static_cast<std::size_t>(width)) items.resize(static_cast<std::size_t>(width));
    return items;
  };

  Beam beam;
  beam[{}] = Score{0.0, kNegInf};
  const auto lp = log_probs(post);
  for (std::size_t t = 0; t < post.num_frames(); ++t) {
    Beam next;
    for (const auto& [prefix, score] : prune(beam)) {
      const double total = score.total();
      auto& same = next[prefix];
      same.blank = log_sum_exp(same.blank, total + lp(t, kBlank));
      const int last = prefix.empty() ? kBlank : prefix.back();
      if (last != kBlank) {
        same.non_blank = log_sum_exp(same.non_blank, score.non_blank + lp(t, last));
      }
      for (int c = 1; c < kNumClasses; ++c) {
        if (lp(t, c) == kNegInf) continue;
        std::vector<Phoneme> extended = prefix;
        extended.push_back(c);
        auto& ext = next[extended];
        const double from = (c == last) ? score.blank : total;
        ext.non_blank = log_sum_exp(ext.non_blank, from + lp(t, c));
      }
    }
    beam = std::move(next);
  }

  std::vector<PhonemeHypothesis> out;
  for (const auto& [prefix, score] : prune(beam)) {
    PhonemeHypothesis h;
    h.sequence.symbols = prefix;
    h.log_prob = score.total();
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace imly
