// include/imly/audio_io.h

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

#ifndef IMLY_AUDIO_IO_H_
#define IMLY_AUDIO_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "imly/error.h"

namespace imly {

/// Mono audio at a fixed sample rate.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

class WavError : public DataError {
 public:
  enum class Kind { kMalformedHeader, kUnsupportedCodec, kTruncatedData };

  WavError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Decodes RIFF/WAVE with PCM16 (format 1) or float32 (format 3) samples and
/// one or two channels. Channels are averaged to mono; PCM16 is scaled by
/// 1/32768.
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);

/// Encodes a mono PCM16 WAV. Samples are clamped to [-1, 1] and scaled by
/// 32768 with round-to-nearest, then saturated to the int16 range, so that
/// decode_wav(encode_wav(b)) reproduces b within one quantization step.
std::vector<std::uint8_t> encode_wav(const AudioBuffer& buf);

/// Band-limited resampling with a 64-tap Blackman-windowed sinc kernel.
/// Output length is round(len * target / source).
AudioBuffer resample(const AudioBuffer& buf, int target_rate);

AudioBuffer read_wav_file(const std::string& path);
void write_wav_file(const std::string& path, const AudioBuffer& buf);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace imly

#endif  // IMLY_AUDIO_IO_H_
