// include/imly/separator.h

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

#ifndef IMLY_SEPARATOR_H_
#define IMLY_SEPARATOR_H_

#include <cstddef>

#include "imly/audio_io.h"
#include "imly/dsp.h"
#include "imly/matrix.h"

namespace imly {

// Similarity-matrix repeating-pattern separation. The background is modeled
// per frame as the median of its most similar frames; whatever does not
// repeat ends up in the foreground.

struct SeparatorConfig {
  int k_neighbors = 30;
  double min_spacing_seconds = 1.0;
  double mask_exponent = 1.0;  // "mask hardness"
  double max_duration_seconds = 120.0;
  StftConfig stft{2048, 512};

  void validate() const;
};

/// T x T cosine similarities between rows of `mag`. Zero rows have
/// similarity 0 to every other row and 1 to themselves.
Matrix<double> similarity_matrix(const Matrix<double>& mag);

/// Row j of the result is the element-wise median of up to k_neighbors rows
/// of `mag`, picked greedily in descending similarity to row j (ties to the
/// lower index) while keeping picks at least `min_spacing_frames` apart.
/// Row j itself is always picked first.
Matrix<double> repeating_model(const Matrix<double>& mag,
                               const Matrix<double>& similarity,
                               int k_neighbors, int min_spacing_frames);

/// Convenience overload deriving the spacing in frames from the config.
Matrix<double> repeating_model(const Matrix<double>& mag,
                               const Matrix<double>& similarity,
                               const SeparatorConfig& cfg, int sample_rate);

/// Background mask (min(repeating, mag) / max(mag, 1e-10))^p. The foreground
/// mask is its complement.
Matrix<double> soft_mask(const Matrix<double>& mag,
                         const Matrix<double>& repeating, double exponent);

int spacing_frames(const SeparatorConfig& cfg, int sample_rate);

struct Separation {
  AudioBuffer foreground;
  AudioBuffer background;
  Matrix<double> background_mask;
};

/// Full separation. The mask scales the complex STFT (original phase kept)
/// and both stems are resynthesized with istft.
Separation separate(const AudioBuffer& buf, const SeparatorConfig& cfg);

double energy(const AudioBuffer& buf);

}  // namespace imly

#endif  // IMLY_SEPARATOR_H_
