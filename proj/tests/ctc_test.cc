// tests/ctc_test.cc

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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "imly/ctc.h"
#include "imly/error.h"
#include "oracles.h"

using namespace imly;

namespace {

const Phoneme S = *phoneme_index("S");

Posteriorgram two_way(std::size_t frames, double p_s) {
  Posteriorgram post;
  post.probs = Matrix<double>(frames, kNumClasses, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    post.probs(t, S) = p_s;
    post.probs(t, kBlank) = 1.0 - p_s;
  }
  return post;
}

Posteriorgram softmax_rows(const Matrix<double>& logits) {
  Posteriorgram post;
  post.probs = Matrix<double>(logits.rows(), logits.cols());
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    double mx = -1e300, sum = 0;
    for (double v : logits.row(t)) mx = std::max(mx, v);
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      post.probs(t, c) = std::exp(logits(t, c) - mx);
      sum += post.probs(t, c);
    }
    for (std::size_t c = 0; c < logits.cols(); ++c) post.probs(t, c) /= sum;
  }
  return post;
}

// classes: blank plus `alphabet` phonemes picked at random
std::vector<int> pick_classes(int alphabet, Rng& rng) {
  std::vector<int> all(kNumPhonemes);
  std::iota(all.begin(), all.end(), 1);
  rng.shuffle(all);
  std::vector<int> out{kBlank};
  out.insert(out.end(), all.begin(), all.begin() + alphabet);
  return out;
}

}  // namespace

TEST_CASE("ctc_loss: hand examples") {
  CHECK(ctc_loss(two_way(1, 0.5), {S}) == doctest::Approx(-std::log(0.5)).epsilon(1e-12));
  CHECK(ctc_loss(two_way(2, 0.5), {S}) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("ctc_loss: infeasible targets rejected") {
  CHECK(ctc_min_frames({S, S}) == 3);
  CHECK(ctc_min_frames({1, 2, 2, 3}) == 5);
  CHECK_THROWS_AS(ctc_loss(two_way(2, 0.5), {S, S}), DataError);
  CHECK_THROWS_AS(ctc_loss(two_way(2, 0.5), {}), DataError);
  CHECK_NOTHROW(ctc_loss(two_way(3, 0.5), {S, S}));
}

TEST_CASE("ctc_loss equals exhaustive path enumeration") {
  Rng rng(1);
  int cases = 0;
  while (cases < 600) {
    const int alphabet = 1 + static_cast<int>(rng.below(4));
    const auto classes = pick_classes(alphabet, rng);
    const std::size_t T = 1 + rng.below(6);
    const std::size_t len = 1 + rng.below(3);
    std::vector<Phoneme> target;
    for (std::size_t i = 0; i < len; ++i) target.push_back(classes[1 + rng.below(alphabet)]);
    if (ctc_min_frames(target) > T) continue;
    const auto post = oracle::random_restricted_post(T, classes, rng);
    const double brute = oracle::ctc_path_sum(post, target, classes);
    const double loss = ctc_loss(post, target);
    CHECK(loss >= 0.0);
    CHECK(std::abs(std::exp(-loss) - brute) <= 1e-9);
    ++cases;
  }
}

TEST_CASE("ctc_grad: T=1 is softmax minus one-hot") {
  const auto post = two_way(1, 0.3);
  const auto g = ctc_grad(post, {S});
  CHECK(g.loss == doctest::Approx(-std::log(0.3)));
  for (int c = 0; c < kNumClasses; ++c) {
    const double expect = post.probs(0, c) - (c == S ? 1.0 : 0.0);
    CHECK(std::abs(g.logits_grad(0, c) - expect) <= 1e-12);
  }
}

TEST_CASE("ctc_grad matches central finite differences") {
  Rng rng(2);
  const double h = 1e-4;
  int cases = 0;
  while (cases < 100) {
    const std::size_t T = 1 + rng.below(5);
    std::vector<Phoneme> target;
    for (std::size_t i = 0, n = 1 + rng.below(3); i < n; ++i) target.push_back(1 + rng.below(4));
    if (ctc_min_frames(target) > T) continue;
    Matrix<double> z(T, kNumClasses);
    for (auto& v : z.data()) v = rng.uniform(-2.0, 2.0);
    const auto g = ctc_grad(softmax_rows(z), target);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < z.data().size(); ++i) {
      const double keep = z.data()[i];
      z.data()[i] = keep + h;
      const double up = ctc_loss(softmax_rows(z), target);
      z.data()[i] = keep - h;
      const double down = ctc_loss(softmax_rows(z), target);
      z.data()[i] = keep;
      const double fd = (up - down) / (2 * h);
      num += (fd - g.logits_grad.data()[i]) * (fd - g.logits_grad.data()[i]);
      den += fd * fd;
    }
    CHECK(std::sqrt(num / den) <= 1e-4);
    for (std::size_t t = 0; t < T; ++t) {
      double row = 0;
      for (double v : g.logits_grad.row(t)) row += v;
      CHECK(std::abs(row) <= 1e-6);
    }
    ++cases;
  }
}

TEST_CASE("greedy_decode: collapse rule") {
  Posteriorgram post;
  post.probs = Matrix<double>(4, kNumClasses, 0.0);
  for (int t : {0, 1, 3}) post.probs(t, S) = 1.0;
  post.probs(2, kBlank) = 1.0;
  const auto out = greedy_decode(post);
  CHECK(out.symbols == std::vector<Phoneme>{S, S});
  REQUIRE(out.spans.size() == 2);
  CHECK(out.spans[0] == FrameSpan{0, 2});
  CHECK(out.spans[1] == FrameSpan{3, 4});

  Posteriorgram blank;
  blank.probs = Matrix<double>(5, kNumClasses, 0.0);
  for (int t = 0; t < 5; ++t) blank.probs(t, kBlank) = 1.0;
  CHECK(greedy_decode(blank).empty());

  // exact tie picks the lower index
  Posteriorgram tie;
  tie.probs = Matrix<double>(1, kNumClasses, 0.0);
  tie.probs(0, 3) = 0.5;
  tie.probs(0, 7) = 0.5;
  CHECK(greedy_decode(tie).symbols == std::vector<Phoneme>{3});
}

TEST_CASE("greedy_decode: never emits blank, never longer than T") {
  Rng rng(3);
  std::vector<int> all(kNumClasses);
  std::iota(all.begin(), all.end(), 0);
  for (int i = 0; i < 1000; ++i) {
    const auto post = oracle::random_restricted_post(1 + rng.below(30), all, rng);
    const auto out = greedy_decode(post);
    CHECK(out.size() <= post.num_frames());
    for (Phoneme p : out.symbols) CHECK(p != kBlank);
  }
}

TEST_CASE("beam_decode: zero frames") {
  Posteriorgram empty;
  empty.probs = Matrix<double>(0, kNumClasses);
  const auto out = beam_decode(empty, 5);
  REQUIRE(out.size() == 1);
  CHECK(out[0].sequence.empty());
  CHECK(out[0].log_prob == 0.0);
  CHECK_THROWS_AS(beam_decode(empty, 0), ConfigError);
}

TEST_CASE("beam_decode: wide beam top-1 equals the exhaustive best") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto classes = pick_classes(1 + static_cast<int>(rng.below(3)), rng);
    const auto post = oracle::random_restricted_post(1 + rng.below(4), classes, rng);
    const auto out = beam_decode(post, 100000);
    const auto ref = oracle::ctc_best_collapsed(post, classes);
    REQUIRE(!out.empty());
    CHECK(out[0].sequence.symbols == ref.sequence);
    CHECK(std::abs(std::exp(out[0].log_prob) - ref.prob) <= 1e-9);
    for (std::size_t k = 1; k < out.size(); ++k) {
      CHECK(out[k - 1].log_prob >= out[k].log_prob);
      for (std::size_t j = 0; j < k; ++j) CHECK(!(out[k].sequence == out[j].sequence));
    }
  }
}

TEST_CASE("beam_decode: width 1 on a dominant path equals greedy") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const std::size_t T = 2 + rng.below(20);
    Posteriorgram post;
    post.probs = Matrix<double>(T, kNumClasses, 0.02 / (kNumClasses - 1));
    for (std::size_t t = 0; t < T; ++t) post.probs(t, rng.below(kNumClasses)) = 0.98;
    const auto out = beam_decode(post, 1);
    REQUIRE(!out.empty());
    CHECK(out[0].sequence.symbols == greedy_decode(post).symbols);
  }
}
