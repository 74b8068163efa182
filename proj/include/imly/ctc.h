// include/imly/ctc.h

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

#ifndef IMLY_CTC_H_
#define IMLY_CTC_H_

#include <vector>

#include "imly/matrix.h"
#include "imly/phonemes.h"

namespace imly {

/// Per-frame class distributions over {blank} + 39 phonemes.
struct Posteriorgram {
  Matrix<double> probs;  // T x kNumClasses, rows sum to 1
  double frame_hop_seconds = 0.0;

  std::size_t num_frames() const { return probs.rows(); }
  /// Rows [begin, end) as a new posteriorgram.
  Posteriorgram slice(std::size_t begin, std::size_t end) const;
};

double log_sum_exp(double a, double b);

/// Frames needed to emit `target`: its length plus one blank between each
/// pair of adjacent repeated symbols.
std::size_t ctc_min_frames(const std::vector<Phoneme>& target);

/// Negative log-likelihood of `target` summed over all blank-augmented
/// alignments (log-space forward recursion). Throws DataError if the target
/// is empty or cannot fit in the available frames.
double ctc_loss(const Posteriorgram& post, const std::vector<Phoneme>& target);

struct CtcGradient {
  double loss = 0.0;
  Matrix<double> logits_grad;  // T x kNumClasses: softmax - occupancy
};

/// Loss and its gradient with respect to the pre-softmax logits, assuming
/// `post` is the softmax of those logits.
CtcGradient ctc_grad(const Posteriorgram& post, const std::vector<Phoneme>& target);

/// Frame-wise argmax (ties to the lower class), repeats collapsed, blanks
/// removed. Spans cover the frames each symbol was read from.
PhonemeSequence greedy_decode(const Posteriorgram& post);

struct PhonemeHypothesis {
  PhonemeSequence sequence;
  double log_prob = 0.0;
};

/// CTC prefix beam search. Hypotheses are merged by collapsed prefix with
/// separate blank / non-blank ending probabilities. Results are sorted by
/// descending probability, ties broken lexicographically on symbols.
std::vector<PhonemeHypothesis> beam_decode(const Posteriorgram& post, int width);

}  // namespace imly

#endif  // IMLY_CTC_H_
