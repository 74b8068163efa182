// include/imly/acoustic_model.h

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

#ifndef IMLY_ACOUSTIC_MODEL_H_
#define IMLY_ACOUSTIC_MODEL_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "imly/ctc.h"
#include "imly/dsp.h"
#include "imly/matrix.h"
#include "imly/phonemes.h"

namespace imly {

inline constexpr int kFeatureDim = 40;

/// Single-layer GRU over normalized log-mel frames with an affine softmax
/// output over the CTC classes.
///
///   z = sigmoid(Wz x + Uz h + bz)          update gate
///   r = sigmoid(Wr x + Ur h + br)          reset gate
///   n = tanh(Wn x + Un (r * h) + bn)       candidate
///   h' = (1 - z) * h + z * n
///   y = softmax(Wo h' + bo)
///
/// Input frames are standardized with feature_mean / feature_std before
/// entering the recurrence. The statistics are fixed when training starts
/// and are not updated by gradient descent.
struct AcousticModel {
  int hidden = 128;
  Matrix<double> w_update, w_reset, w_cand;  // hidden x kFeatureDim
  Matrix<double> u_update, u_reset, u_cand;  // hidden x hidden
  std::vector<double> b_update, b_reset, b_cand;
  Matrix<double> w_out;  // kNumClasses x hidden
  std::vector<double> b_out;
  std::vector<double> feature_mean, feature_std;

  /// All weights and biases zero, identity normalization.
  static AcousticModel zeros(int hidden);
  /// Uniform(-1/sqrt(hidden), 1/sqrt(hidden)) weights, zero biases.
  static AcousticModel random(int hidden, std::uint64_t seed);

  /// Visits every trainable tensor as (name, flat storage). Normalization
  /// statistics are excluded.
  void for_each_trainable(const std::function<void(const std::string&, std::vector<double>&)>& fn);
  void for_each_trainable(
      const std::function<void(const std::string&, const std::vector<double>&)>& fn) const;

  bool operator==(const AcousticModel&) const = default;
};

/// Posteriorgram for a feature sequence. Throws ConfigError if the feature
/// width is not kFeatureDim.
Posteriorgram forward(const FeatureMatrix& features, const AcousticModel& model);

/// CTC loss for one example and its gradient with respect to every
/// trainable parameter (backpropagation through time). `grad` must have the
/// same shapes as `model`; it is overwritten.
double loss_and_gradient(const AcousticModel& model, const FeatureMatrix& features,
                         const std::vector<Phoneme>& target, AcousticModel& grad);

struct TrainingExample {
  FeatureMatrix features;
  std::vector<Phoneme> target;
};

struct TrainConfig {
  int epochs = 60;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double clip_norm = 5.0;
  int hidden = 128;
  std::uint64_t seed = 1;
};

inline constexpr std::size_t kMinTrainingPhonemes = 5;

/// Per-epoch mean training loss, reported to `on_epoch` as training runs.
using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Per-example SGD with momentum and global gradient-norm clipping, in a
/// seeded shuffled order. Every target must have at least five phonemes;
/// otherwise DataError names the offending example.
AcousticModel train(const std::vector<TrainingExample>& dataset,
                    const TrainConfig& cfg,
                    std::vector<double>* epoch_losses = nullptr,
                    const EpochCallback& on_epoch = {});

/// Continues training from `initial` (its normalization statistics kept).
AcousticModel train_from(AcousticModel initial,
                         const std::vector<TrainingExample>& dataset,
                         const TrainConfig& cfg,
                         std::vector<double>* epoch_losses = nullptr,
                         const EpochCallback& on_epoch = {});

/// Computes per-dimension mean and standard deviation over all frames.
void set_feature_statistics(AcousticModel& model,
                            const std::vector<TrainingExample>& dataset);

std::vector<std::uint8_t> save_model(const AcousticModel& model);
AcousticModel load_model(std::span<const std::uint8_t> bytes);
AcousticModel load_model_file(const std::string& path);

/// Feature frontend shared by training and inference: n_fft 512, hop 220,
/// 40 mel bands between 50 Hz and min(11025, sr/2).
struct FrontendConfig {
  StftConfig stft{512, 220};
  int n_mels = kFeatureDim;
  double fmin = 50.0;
  double fmax = 11025.0;
};

FeatureMatrix compute_features(const AudioBuffer& buf,
                               const FrontendConfig& cfg = FrontendConfig{});

}  // namespace imly

#endif  // IMLY_ACOUSTIC_MODEL_H_
