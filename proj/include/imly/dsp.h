// include/imly/dsp.h

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

#ifndef IMLY_DSP_H_
#define IMLY_DSP_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "imly/audio_io.h"
#include "imly/matrix.h"

namespace imly {

using Complex = std::complex<double>;

/// Frame layout for STFT analysis. The window is always a periodic Hann.
struct StftConfig {
  int n_fft = 2048;
  int hop = 512;

  int num_bins() const { return n_fft / 2 + 1; }
  /// Throws ConfigError unless n_fft is a power of two and 0 < hop <= n_fft.
  /// Resynthesis additionally needs hop | n_fft and hop <= n_fft/2.
  void validate() const;
  bool operator==(const StftConfig&) const = default;
};

struct Spectrogram {
  Matrix<Complex> frames;  // T x (n_fft/2 + 1)
  StftConfig config;
  int sample_rate = 0;
  std::size_t original_length = 0;  // samples before padding; istft trims to it

  std::size_t num_frames() const { return frames.rows(); }
};

struct FeatureMatrix {
  Matrix<double> values;  // T x n_mels
  double frame_hop_seconds = 0.0;

  std::size_t num_frames() const { return values.rows(); }
};

/// Radix-2 complex FFT with precomputed twiddles. Summation order is fixed,
/// so results are reproducible bit-for-bit.
class Fft {
 public:
  explicit Fft(int n);
  int size() const { return n_; }
  void forward(std::span<Complex> data) const;
  void inverse(std::span<Complex> data) const;  // includes the 1/n factor

 private:
  void transform(std::span<Complex> data, bool inverse) const;

  int n_;
  std::vector<Complex> twiddles_;
  std::vector<int> bit_reverse_;
};

std::vector<double> hann_window(int n);

/// Center-padded (reflect, n_fft/2 each side), Hann-windowed one-sided STFT.
/// Frame t is centered on sample t*hop. Inputs shorter than n_fft are
/// zero-padded to n_fft first.
Spectrogram stft(const AudioBuffer& buf, const StftConfig& cfg);

/// Weighted overlap-add with a Hann synthesis window, normalized by the
/// summed squared window. Requires hop | n_fft and hop <= n_fft/2.
AudioBuffer istft(const Spectrogram& sgram);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// n_mels x n_bins triangular filterbank on the HTK mel scale.
Matrix<double> mel_filterbank(int sample_rate, int n_fft, int n_mels,
                              double fmin, double fmax);

inline constexpr double kLogMelFloor = 1e-10;

/// log(max(filterbank * |X|^2, 1e-10)) per frame.
FeatureMatrix log_mel(const Spectrogram& sgram, int n_mels, double fmin,
                      double fmax);

}  // namespace imly

#endif  // IMLY_DSP_H_
