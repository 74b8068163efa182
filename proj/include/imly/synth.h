// include/imly/synth.h

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

#ifndef IMLY_SYNTH_H_
#define IMLY_SYNTH_H_

#include <cstdint>
#include <vector>

#include "imly/acoustic_model.h"
#include "imly/audio_io.h"
#include "imly/phonemes.h"
#include "imly/rng.h"

namespace imly {

// Phoneme-coded audio: every phoneme is rendered as a fixed acoustic code so
// a small recognizer can be trained and checked in minutes. Fricatives are
// band-limited noise (S, SH, Z above 4 kHz; F and TH high and faint; HH
// mid-band); every other phoneme is a pair of steady tones below 4 kHz.

struct PhonemeCode {
  enum class Kind { kTones, kNoise } kind = Kind::kTones;
  double f1 = 0.0, f2 = 0.0;        // tone frequencies (Hz)
  double band_lo = 0.0, band_hi = 0.0;  // noise band (Hz)
  double voicing_hz = 0.0;          // optional low tone under noise
  double gain = 1.0;
};

PhonemeCode phoneme_code(Phoneme p);

struct SynthUtterance {
  AudioBuffer audio;
  std::vector<Phoneme> phonemes;
};

/// Renders `phonemes` with per-occurrence variation (duration, level, small
/// frequency jitter, noise phases) drawn from `rng`, separated by short
/// pauses over a faint noise floor.
SynthUtterance render_phonemes(const std::vector<Phoneme>& phonemes, int sample_rate, Rng& rng);

/// `count` utterances of min_len..max_len phonemes. Symbols are drawn by
/// cycling through shuffled copies of the alphabet so that every phoneme
/// appears as evenly as the corpus size allows.
std::vector<SynthUtterance> synthetic_corpus(std::size_t count, std::size_t min_len,
                                             std::size_t max_len, std::uint64_t seed,
                                             int sample_rate = 22050);

std::vector<TrainingExample> featurize(const std::vector<SynthUtterance>& corpus,
                                       const FrontendConfig& frontend = FrontendConfig{});

/// Band-limited noise built from many random-phase sinusoids in [lo, hi].
std::vector<double> band_noise(std::size_t length, int sample_rate, double lo, double hi,
                               Rng& rng, int components = 64);

}  // namespace imly

#endif  // IMLY_SYNTH_H_
