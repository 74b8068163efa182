// src/acoustic_model.cc

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

#include "imly/acoustic_model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "imly/error.h"
#include "imly/rng.h"
#include "imly/tensor_file.h"

namespace imly {

namespace {

constexpr double kMinStd = 1e-3;
constexpr double kProbFloor = 1e-30;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y += M x
void mat_vec_acc(const Matrix<double>& m, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * x[j];
    y[i] += s;
  }
}

// y += M^T g
void mat_t_vec_acc(const Matrix<double>& m, std::span<const double> g, std::span<double> y) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    const auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) y[j] += row[j] * gi;
  }
}

// M += g x^T
void outer_acc(Matrix<double>& m, std::span<const double> g, std::span<const double> x) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += gi * x[j];
  }
}

struct ForwardCache {
  Matrix<double> x;       // normalized input, T x D
  Matrix<double> h_prev;  // T x H
  Matrix<double> z, r, n, h;
  Matrix<double> probs;   // T x C
};

void check_shapes(const AcousticModel& m) {
  const std::size_t H = static_cast<std::size_t>(m.hidden);
  auto ok = [&](const Matrix<double>& a, std::size_t r, std::size_t c) {
    return a.rows() == r && a.cols() == c;
  };
  if (m.hidden <= 0 || !ok(m.w_update, H, kFeatureDim) || !ok(m.w_reset, H, kFeatureDim) ||
      !ok(m.w_cand, H, kFeatureDim) || !ok(m.u_update, H, H) || !ok(m.u_reset, H, H) ||
      !ok(m.u_cand, H, H) || m.b_update.size() != H || m.b_reset.size() != H ||
      m.b_cand.size() != H || !ok(m.w_out, kNumClasses, H) ||
      m.b_out.size() != static_cast<std::size_t>(kNumClasses) ||
      m.feature_mean.size() != static_cast<std::size_t>(kFeatureDim) ||
      m.feature_std.size() != static_cast<std::size_t>(kFeatureDim)) {
    throw DataError("acoustic model tensors have inconsistent shapes");
  }
}

ForwardCache run_forward(const AcousticModel& m, const FeatureMatrix& features) {
  if (features.values.cols() != static_cast<std::size_t>(kFeatureDim) &&
      features.num_frames() > 0) {
    throw ConfigError("acoustic model expects " + std::to_string(kFeatureDim) +
                      "-dimensional features, got " + std::to_string(features.values.cols()));
  }
  const std::size_t T = features.num_frames();
  const std::size_t H = static_cast<std::size_t>(m.hidden);
  ForwardCache c;
  c.x = Matrix<double>(T, kFeatureDim);
  c.h_prev = Matrix<double>(T, H);
  c.z = Matrix<double>(T, H);
  c.r = Matrix<double>(T, H);
  c.n = Matrix<double>(T, H);
  c.h = Matrix<double>(T, H);
  c.probs = Matrix<double>(T, kNumClasses);

  std::vector<double> h(H, 0.0), a_z(H), a_r(H), a_n(H), rh(H);
  std::vector<double> logits(kNumClasses);
  for (std::size_t t = 0; t < T; ++t) {
    auto x = c.x.row(t);
    for (std::size_t d = 0; d < static_cast<std::size_t>(kFeatureDim); ++d) {
      x[d] = (features.values(t, d) - m.feature_mean[d]) / m.feature_std[d];
    }
    std::copy(h.begin(), h.end(), c.h_prev.row(t).begin());

    std::copy(m.b_update.begin(), m.b_update.end(), a_z.begin());
    std::copy(m.b_reset.begin(), m.b_reset.end(), a_r.begin());
    std::copy(m.b_cand.begin(), m.b_cand.end(), a_n.begin());
    mat_vec_acc(m.w_update, x, a_z);
    mat_vec_acc(m.u_update, h, a_z);
    mat_vec_acc(m.w_reset, x, a_r);
    mat_vec_acc(m.u_reset, h, a_r);
    auto z = c.z.row(t);
    auto r = c.r.row(t);
    for (std::size_t i = 0; i < H; ++i) {
      z[i] = sigmoid(a_z[i]);
      r[i] = sigmoid(a_r[i]);
      rh[i] = r[i] * h[i];
    }
    mat_vec_acc(m.w_cand, x, a_n);
    mat_vec_acc(m.u_cand, rh, a_n);
    auto n = c.n.row(t);
    auto h_new = c.h.row(t);
    for (std::size_t i = 0; i < H; ++i) {
      n[i] = std::tanh(a_n[i]);
      h_new[i] = (1.0 - z[i]) * h[i] + z[i] * n[i];
      h[i] = h_new[i];
    }

    std::copy(m.b_out.begin(), m.b_out.end(), logits.begin());
    mat_vec_acc(m.w_out, h, logits);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    auto p = c.probs.row(t);
    for (int k = 0; k < kNumClasses; ++k) {
      p[k] = std::exp(logits[k] - mx);
      sum += p[k];
    }
    for (int k = 0; k < kNumClasses; ++k) p[k] = std::max(p[k] / sum, kProbFloor);
  }
  return c;
}

AcousticModel shaped_like(int hidden) {
  const std::size_t H = static_cast<std::size_t>(hidden);
  AcousticModel m;
  m.hidden = hidden;
  m.w_update = m.w_reset = m.w_cand = Matrix<double>(H, kFeatureDim);
  m.u_update = m.u_reset = m.u_cand = Matrix<double>(H, H);
  m.b_update = m.b_reset = m.b_cand = std::vector<double>(H, 0.0);
  m.w_out = Matrix<double>(kNumClasses, H);
  m.b_out = std::vector<double>(kNumClasses, 0.0);
  m.feature_mean = std::vector<double>(kFeatureDim, 0.0);
  m.feature_std = std::vector<double>(kFeatureDim, 1.0);
  return m;
}

void validate_dataset(const std::vector<TrainingExample>& dataset) {
  if (dataset.empty()) throw DataError("training dataset is empty");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& ex = dataset[i];
    if (ex.target.size() < kMinTrainingPhonemes) {
      throw DataError("training example " + std::to_string(i) + " has " +
                      std::to_string(ex.target.size()) + " phonemes; at least " +
                      std::to_string(kMinTrainingPhonemes) + " are required");
    }
    if (ex.features.num_frames() < ctc_min_frames(ex.target)) {
      throw DataError("training example " + std::to_string(i) +
                      " has too few frames for its target");
    }
  }
}

}  // namespace

AcousticModel AcousticModel::zeros(int hidden) {
  if (hidden <= 0) throw ConfigError("hidden size must be positive");
  return shaped_like(hidden);
}

AcousticModel AcousticModel::random(int hidden, std::uint64_t seed) {
  AcousticModel m = zeros(hidden);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Matrix<double>* w : {&m.w_update, &m.w_reset, &m.w_cand, &m.u_update, &m.u_reset,
                            &m.u_cand, &m.w_out}) {
    for (double& v : w->data()) v = rng.uniform(-scale, scale);
  }
  return m;
}

void AcousticModel::for_each_trainable(
    const std::function<void(const std::string&, std::vector<double>&)>& fn) {
  fn("gru.w_update", w_update.data());
  fn("gru.w_reset", w_reset.data());
  fn("gru.w_cand", w_cand.data());
  fn("gru.u_update", u_update.data());
  fn("gru.u_reset", u_reset.data());
  fn("gru.u_cand", u_cand.data());
  fn("gru.b_update", b_update);
  fn("gru.b_reset", b_reset);
  fn("gru.b_cand", b_cand);
  fn("out.weight", w_out.data());
  fn("out.bias", b_out);
}

void AcousticModel::for_each_trainable(
    const std::function<void(const std::string&, const std::vector<double>&)>& fn) const {
  const_cast<AcousticModel*>(this)->for_each_trainable(
      [&](const std::string& name, std::vector<double>& v) { fn(name, v); });
}

Posteriorgram forward(const FeatureMatrix& features, const AcousticModel& model) {
  check_shapes(model);
  ForwardCache c = run_forward(model, features);
  Posteriorgram out;
  out.probs = std::move(c.probs);
  out.frame_hop_seconds = features.frame_hop_seconds;
  return out;
}

double loss_and_gradient(const AcousticModel& m, const FeatureMatrix& features,
                         const std::vector<Phoneme>& target, AcousticModel& g) {
  check_shapes(m);
  const ForwardCache c = run_forward(m, features);
  Posteriorgram post;
  post.probs = c.probs;
  const CtcGradient ctc = ctc_grad(post, target);

  g = shaped_like(m.hidden);
  g.feature_mean = m.feature_mean;
  g.feature_std = m.feature_std;
  const std::size_t T = features.num_frames();
  const std::size_t H = static_cast<std::size_t>(m.hidden);
  std::vector<double> dh(H), dh_next(H, 0.0), da_z(H), da_r(H), da_n(H), d_rh(H);
  for (std::size_t t = T; t-- > 0;) {
    const auto gl = ctc.logits_grad.row(t);
    const auto h = c.h.row(t);
    const auto hp = c.h_prev.row(t);
    const auto z = c.z.row(t);
    const auto r = c.r.row(t);
    const auto n = c.n.row(t);
    const auto x = c.x.row(t);

    outer_acc(g.w_out, gl, h);
    for (int k = 0; k < kNumClasses; ++k) g.b_out[k] += gl[k];
    std::copy(dh_next.begin(), dh_next.end(), dh.begin());
    mat_t_vec_acc(m.w_out, gl, dh);

    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    std::vector<double> rh(H);
    for (std::size_t i = 0; i < H; ++i) {
      const double dz = dh[i] * (n[i] - hp[i]);
      const double dn = dh[i] * z[i];
      dh_next[i] = dh[i] * (1.0 - z[i]);
      da_n[i] = dn * (1.0 - n[i] * n[i]);
      da_z[i] = dz * z[i] * (1.0 - z[i]);
      rh[i] = r[i] * hp[i];
    }
    outer_acc(g.w_cand, da_n, x);
    outer_acc(g.u_cand, da_n, rh);
    for (std::size_t i = 0; i < H; ++i) g.b_cand[i] += da_n[i];
    std::fill(d_rh.begin(), d_rh.end(), 0.0);
    mat_t_vec_acc(m.u_cand, da_n, d_rh);
    for (std::size_t i = 0; i < H; ++i) {
      const double dr = d_rh[i] * hp[i];
      dh_next[i] += d_rh[i] * r[i];
      da_r[i] = dr * r[i] * (1.0 - r[i]);
    }
    outer_acc(g.w_reset, da_r, x);
    outer_acc(g.u_reset, da_r, hp);
    outer_acc(g.w_update, da_z, x);
    outer_acc(g.u_update, da_z, hp);
    for (std::size_t i = 0; i < H; ++i) {
      g.b_reset[i] += da_r[i];
      g.b_update[i] += da_z[i];
    }
    mat_t_vec_acc(m.u_reset, da_r, dh_next);
    mat_t_vec_acc(m.u_update, da_z, dh_next);
  }
  return ctc.loss;
}

void set_feature_statistics(AcousticModel& model,
                            const std::vector<TrainingExample>& dataset) {
  std::vector<double> sum(kFeatureDim, 0.0), sq(kFeatureDim, 0.0);
  std::size_t frames = 0;
  for (const auto& ex : dataset) {
    for (std::size_t t = 0; t < ex.features.num_frames(); ++t) {
      for (std::size_t d = 0; d < static_cast<std::size_t>(kFeatureDim); ++d) {
        const double v = ex.features.values(t, d);
        sum[d] += v;
        sq[d] += v * v;
      }
      ++frames;
    }
  }
  if (frames == 0) return;
  for (std::size_t d = 0; d < static_cast<std::size_t>(kFeatureDim); ++d) {
    const double mean = sum[d] / static_cast<double>(frames);
    const double var = std::max(0.0, sq[d] / static_cast<double>(frames) - mean * mean);
    model.feature_mean[d] = mean;
    model.feature_std[d] = std::max(std::sqrt(var), kMinStd);
  }
}

AcousticModel train(const std::vector<TrainingExample>& dataset, const TrainConfig& cfg,
                    std::vector<double>* epoch_losses, const EpochCallback& on_epoch) {
  validate_dataset(dataset);
  AcousticModel model = AcousticModel::random(cfg.hidden, cfg.seed);
  set_feature_statistics(model, dataset);
  return train_from(std::move(model), dataset, cfg, epoch_losses, on_epoch);
}

AcousticModel train_from(AcousticModel model, const std::vector<TrainingExample>& dataset,
                         const TrainConfig& cfg, std::vector<double>* epoch_losses,
                         const EpochCallback& on_epoch) {
  validate_dataset(dataset);
  check_shapes(model);
  if (cfg.epochs < 0 || !(cfg.learning_rate > 0.0) || cfg.momentum < 0.0 ||
      !(cfg.clip_norm > 0.0)) {
    throw ConfigError("invalid training configuration");
  }
  // Shuffling draws from a stream separate from initialization.
  Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
  AcousticModel grad = shaped_like(model.hidden);
  AcousticModel velocity = shaped_like(model.hidden);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t idx : order) {
      total += loss_and_gradient(model, dataset[idx].features, dataset[idx].target, grad);
      double norm_sq = 0.0;
      grad.for_each_trainable([&](const std::string&, std::vector<double>& g) {
        for (double v : g) norm_sq += v * v;
      });
      const double norm = std::sqrt(norm_sq);
      const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;

      std::vector<std::vector<double>*> gs, vs;
      grad.for_each_trainable([&](const std::string&, std::vector<double>& g) { gs.push_back(&g); });
      velocity.for_each_trainable([&](const std::string&, std::vector<double>& v) { vs.push_back(&v); });
      std::size_t k = 0;
      model.for_each_trainable([&](const std::string&, std::vector<double>& p) {
        auto& g = *gs[k];
        auto& v = *vs[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
          v[i] = cfg.momentum * v[i] + scale * g[i];
          p[i] -= cfg.learning_rate * v[i];
        }
        ++k;
      });
    }
    const double mean = total / static_cast<double>(dataset.size());
    if (epoch_losses) epoch_losses->push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return model;
}

std::vector<std::uint8_t> save_model(const AcousticModel& model) {
  check_shapes(model);
  TensorSet set;
  set.tensors.push_back(Tensor{"gru.hidden", {1}, {static_cast<float>(model.hidden)}});
  set.tensors.push_back(vector_tensor("frontend.mean", model.feature_mean));
  set.tensors.push_back(vector_tensor("frontend.std", model.feature_std));
  auto add_matrix = [&](const std::string& name, const Matrix<double>& m) {
    set.tensors.push_back(matrix_tensor(name, m));
  };
  add_matrix("gru.w_update", model.w_update);
  add_matrix("gru.w_reset", model.w_reset);
  add_matrix("gru.w_cand", model.w_cand);
  add_matrix("gru.u_update", model.u_update);
  add_matrix("gru.u_reset", model.u_reset);
  add_matrix("gru.u_cand", model.u_cand);
  set.tensors.push_back(vector_tensor("gru.b_update", model.b_update));
  set.tensors.push_back(vector_tensor("gru.b_reset", model.b_reset));
  set.tensors.push_back(vector_tensor("gru.b_cand", model.b_cand));
  add_matrix("out.weight", model.w_out);
  set.tensors.push_back(vector_tensor("out.bias", model.b_out));
  return encode_tensors(set);
}

AcousticModel load_model(std::span<const std::uint8_t> bytes) {
  const TensorSet set = decode_tensors(bytes).set;
  const Tensor& hidden = set.get("gru.hidden");
  if (hidden.data.size() != 1 || !(hidden.data[0] >= 1.0f)) {
    throw DataError("acoustic model has an invalid hidden size");
  }
  AcousticModel m;
  m.hidden = static_cast<int>(hidden.data[0]);
  m.feature_mean = tensor_vector(set.get("frontend.mean"));
  m.feature_std = tensor_vector(set.get("frontend.std"));
  m.w_update = tensor_matrix(set.get("gru.w_update"));
  m.w_reset = tensor_matrix(set.get("gru.w_reset"));
  m.w_cand = tensor_matrix(set.get("gru.w_cand"));
  m.u_update = tensor_matrix(set.get("gru.u_update"));
  m.u_reset = tensor_matrix(set.get("gru.u_reset"));
  m.u_cand = tensor_matrix(set.get("gru.u_cand"));
  m.b_update = tensor_vector(set.get("gru.b_update"));
  m.b_reset = tensor_vector(set.get("gru.b_reset"));
  m.b_cand = tensor_vector(set.get("gru.b_cand"));
  m.w_out = tensor_matrix(set.get("out.weight"));
  m.b_out = tensor_vector(set.get("out.bias"));
  check_shapes(m);
  for (double s : m.feature_std) {
    if (!(s > 0.0)) throw DataError("acoustic model has a non-positive feature std");
  }
  return m;
}

AcousticModel load_model_file(const std::string& path) {
  return load_model(read_file_bytes(path));
}

FeatureMatrix compute_features(const AudioBuffer& buf, const FrontendConfig& cfg) {
  const Spectrogram sgram = stft(buf, cfg.stft);
  const double fmax = std::min(cfg.fmax, buf.sample_rate / 2.0);
  return log_mel(sgram, cfg.n_mels, cfg.fmin, fmax);
}

}  // namespace imly
