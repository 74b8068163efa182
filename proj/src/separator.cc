// src/separator.cc

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

#include "imly/separator.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace imly {

namespace {

constexpr std::size_t kBlock = 256;
constexpr double kMaskEpsilon = 1e-10;

std::vector<double> row_norms(const Matrix<double>& mag) {
  std::vector<double> norms(mag.rows());
  for (std::size_t i = 0; i < mag.rows(); ++i) {
    double s = 0.0;
    for (double v : mag.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
  }
  return norms;
}

double cosine(const Matrix<double>& mag, const std::vector<double>& norms,
              std::size_t i, std::size_t j) {
  if (norms[i] == 0.0 || norms[j] == 0.0) return i == j ? 1.0 : 0.0;
  if (i == j) return 1.0;
  const auto a = mag.row(i);
  const auto b = mag.row(j);
  double dot = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) dot += a[f] * b[f];
  return std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
}

// Similarities of rows [r0, r1) against all rows, filled block by block.
Matrix<double> similarity_rows(const Matrix<double>& mag,
                               const std::vector<double>& norms,
                               std::size_t r0, std::size_t r1) {
  const std::size_t n = mag.rows();
  Matrix<double> out(r1 - r0, n);
  for (std::size_t jb = 0; jb < n; jb += kBlock) {
    const std::size_t je = std::min(n, jb + kBlock);
    for (std::size_t i = r0; i < r1; ++i) {
      for (std::size_t j = jb; j < je; ++j) out(i - r0, j) = cosine(mag, norms, i, j);
    }
  }
  return out;
}

void repeating_row(const Matrix<double>& mag, std::span<const double> sim,
                   std::size_t j, int k_neighbors, int min_spacing,
                   std::vector<std::size_t>& order,
                   std::vector<std::size_t>& picked,
                   std::vector<double>& column, std::span<double> out) {
  const std::size_t n = mag.rows();
  order.resize(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sim[a] != sim[b]) return sim[a] > sim[b];
    return a < b;
  });
  picked.clear();
  picked.push_back(j);
  const long long spacing = min_spacing;
  for (std::size_t idx : order) {
    if (picked.size() >= static_cast<std::size_t>(k_neighbors)) break;
    if (idx == j) continue;
    bool ok = true;
    for (std::size_t p : picked) {
      const long long d = static_cast<long long>(idx) - static_cast<long long>(p);
      if (std::llabs(d) < spacing) {
        ok = false;
        break;
      }
    }
    if (ok) picked.push_back(idx);
  }

  const std::size_t m = picked.size();
  column.resize(m);
  for (std::size_t f = 0; f < mag.cols(); ++f) {
    for (std::size_t q = 0; q < m; ++q) column[q] = mag(picked[q], f);
    const std::size_t mid = m / 2;
    std::nth_element(column.begin(), column.begin() + mid, column.end());
    double median = column[mid];
    if (m % 2 == 0) {
      const double lower = *std::max_element(column.begin(), column.begin() + mid);
      median = 0.5 * (lower + median);
    }
    out[f] = median;
  }
}

}  // namespace

void SeparatorConfig::validate() const {
  if (k_neighbors < 1) throw ConfigError("k_neighbors must be >= 1");
  if (!(min_spacing_seconds >= 0.0)) throw ConfigError("min_spacing must be >= 0");
  if (!(mask_exponent >= 0.0)) throw ConfigError("mask exponent must be >= 0");
  if (!(max_duration_seconds > 0.0)) throw ConfigError("max_duration must be > 0");
  stft.validate();
}

int spacing_frames(const SeparatorConfig& cfg, int sample_rate) {
  return static_cast<int>(
      std::lround(cfg.min_spacing_seconds * sample_rate / cfg.stft.hop));
}

Matrix<double> similarity_matrix(const Matrix<double>& mag) {
  const auto norms = row_norms(mag);
  const std::size_t n = mag.rows();
  Matrix<double> s(n, n);
  // Upper-triangular blocks, mirrored.
  for (std::size_t ib = 0; ib < n; ib += kBlock) {
    const std::size_t ie = std::min(n, ib + kBlock);
    for (std::size_t jb = ib; jb < n; jb += kBlock) {
      const std::size_t je = std::min(n, jb + kBlock);
      for (std::size_t i = ib; i < ie; ++i) {
        for (std::size_t j = std::max(i, jb); j < je; ++j) {
          const double v = cosine(mag, norms, i, j);
          s(i, j) = v;
          s(j, i) = v;
        }
      }
    }
  }
  return s;
}

Matrix<double> repeating_model(const Matrix<double>& mag,
                               const Matrix<double>& similarity,
                               int k_neighbors, int min_spacing_frames) {
  if (similarity.rows() != mag.rows() || similarity.cols() != mag.rows()) {
    throw ConfigError("similarity matrix shape does not match magnitudes");
  }
  if (k_neighbors < 1) throw ConfigError("k_neighbors must be >= 1");
  Matrix<double> out(mag.rows(), mag.cols());
  std::vector<std::size_t> order, picked;
  std::vector<double> column;
  for (std::size_t j = 0; j < mag.rows(); ++j) {
    repeating_row(mag, similarity.row(j), j, k_neighbors, min_spacing_frames,
                  order, picked, column, out.row(j));
  }
  return out;
}

Matrix<double> repeating_model(const Matrix<double>& mag,
                               const Matrix<double>& similarity,
                               const SeparatorConfig& cfg, int sample_rate) {
  return repeating_model(mag, similarity, cfg.k_neighbors,
                         spacing_frames(cfg, sample_rate));
}

Matrix<double> soft_mask(const Matrix<double>& mag,
                         const Matrix<double>& repeating, double exponent) {
  if (mag.rows() != repeating.rows() || mag.cols() != repeating.cols()) {
    throw ConfigError("soft_mask: shape mismatch");
  }
  Matrix<double> mask(mag.rows(), mag.cols());
  auto& m = mask.data();
  const auto& x = mag.data();
  const auto& r = repeating.data();
  for (std::size_t i = 0; i < m.size(); ++i) {
    double ratio = std::min(r[i], x[i]) / std::max(x[i], kMaskEpsilon);
    ratio = std::clamp(ratio, 0.0, 1.0);
    m[i] = exponent == 1.0 ? ratio : std::pow(ratio, exponent);
  }
  return mask;
}

Separation separate(const AudioBuffer& buf, const SeparatorConfig& cfg) {
  cfg.validate();
  if (buf.samples.size() < static_cast<std::size_t>(cfg.stft.n_fft)) {
    throw DataError("audio too short for separation: " +
                    std::to_string(buf.samples.size()) + " samples < n_fft " +
                    std::to_string(cfg.stft.n_fft));
  }
  if (buf.duration_seconds() > cfg.max_duration_seconds) {
    throw DataError("audio longer than max_duration (" +
                    std::to_string(cfg.max_duration_seconds) + " s)");
  }

  const Spectrogram sgram = stft(buf, cfg.stft);
  const std::size_t frames = sgram.num_frames();
  const std::size_t bins = sgram.frames.cols();
  Matrix<double> mag(frames, bins);
  for (std::size_t i = 0; i < mag.data().size(); ++i) {
    mag.data()[i] = std::abs(sgram.frames.data()[i]);
  }

  // Similarity is produced one block of rows at a time so memory stays at
  // O(block * T) instead of O(T^2).
  const auto norms = row_norms(mag);
  const int spacing = spacing_frames(cfg, buf.sample_rate);
  Matrix<double> repeating(frames, bins);
  std::vector<std::size_t> order, picked;
  std::vector<double> column;
  for (std::size_t r0 = 0; r0 < frames; r0 += kBlock) {
    const std::size_t r1 = std::min(frames, r0 + kBlock);
    const Matrix<double> rows = similarity_rows(mag, norms, r0, r1);
    for (std::size_t j = r0; j < r1; ++j) {
      repeating_row(mag, rows.row(j - r0), j, cfg.k_neighbors, spacing, order,
                    picked, column, repeating.row(j));
    }
  }

  Separation out;
  out.background_mask = soft_mask(mag, repeating, cfg.mask_exponent);
  Spectrogram fg = sgram, bg = sgram;
  for (std::size_t i = 0; i < sgram.frames.data().size(); ++i) {
    const double m = out.background_mask.data()[i];
    bg.frames.data()[i] = sgram.frames.data()[i] * m;
    fg.frames.data()[i] = sgram.frames.data()[i] * (1.0 - m);
  }
  out.foreground = istft(fg);
  out.background = istft(bg);
  return out;
}

double energy(const AudioBuffer& buf) {
  double e = 0.0;
  for (double s : buf.samples) e += s * s;
  return e;
}

}  // namespace imly
