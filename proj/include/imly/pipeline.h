// include/imly/pipeline.h

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

#ifndef IMLY_PIPELINE_H_
#define IMLY_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "imly/acoustic_model.h"
#include "imly/channel.h"
#include "imly/config_file.h"
#include "imly/ctc.h"
#include "imly/lexicon.h"
#include "imly/ngram_lm.h"
#include "imly/separator.h"
#include "imly/word_decoder.h"

namespace imly {

struct SegmentConfig {
  double frame_seconds = 0.025;
  double rms_threshold_factor = 0.5;  // of the median frame RMS
  double min_gap_seconds = 0.3;
  double min_segment_seconds = 0.5;
  double max_segment_seconds = 10.0;

  void validate() const;
};

struct TimeSpan {
  double start_s = 0.0;
  double end_s = 0.0;
  bool operator==(const TimeSpan&) const = default;
};

/// Splits audio into line-sized regions by frame RMS. Frames are
/// non-overlapping; a frame is active when its RMS exceeds factor * median.
/// Active runs closer than min_gap are merged, runs shorter than
/// min_segment dropped, and runs longer than max_segment split (repeatedly)
/// at the quietest frame in their middle third; ties go to the frame
/// nearest the middle, then the earlier one.
std::vector<TimeSpan> segment(const AudioBuffer& buf, const SegmentConfig& cfg);

struct PipelineConfig {
  int sample_rate = 22050;
  bool use_separation = true;  // false: recognize the unseparated mix
  SeparatorConfig separator;
  FrontendConfig frontend;
  SegmentConfig segmentation;
  int phoneme_beam = 16;
  int phoneme_n_best = 1;  // phoneme hypotheses decoded per segment
  double am_weight = 0.0;  // weight of the phoneme log-prob in candidate scores
  DecoderConfig decoder;
  ChannelParams channel;  // used when channel_path is empty
  std::string am_path, lexicon_path, lm_path, channel_path;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Fills PipelineConfig from key=value pairs. Unknown keys raise ConfigError.
void apply_config(PipelineConfig& cfg, const KeyValues& kv);

/// Stage-3 knobs that can change without recomputing posteriors.
struct DecoderOverrides {
  std::optional<double> lm_weight;
  std::optional<int> beam_width;
  std::optional<double> word_penalty;
  std::optional<int> n_best;
  std::optional<double> p_sub, p_del, p_ins;

  /// p_match is recomputed as 1 - p_sub - p_del.
  void apply(DecoderConfig& dec, ChannelParams& ch) const;
};

struct Candidate {
  std::string text;
  double score = 0.0;
  std::vector<Phoneme> phonemes;  // recognizer output this candidate decodes
};

struct SegmentResult {
  TimeSpan span;
  std::vector<Phoneme> phonemes;  // best recognizer hypothesis
  std::vector<Candidate> candidates;
  std::string error;  // decode failure, if any
};

struct LyricResult {
  std::vector<SegmentResult> segments;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> fingerprints;
  std::map<std::string, std::string> config;  // echo of effective settings
};

/// Serialized JSON with sorted keys, scores rounded to 1e-6.
std::string to_json(const LyricResult& result);
LyricResult result_from_json(const std::string& text);

/// Immutable model bundle with content fingerprints.
struct Models {
  AcousticModel am;
  Lexicon lexicon;
  NGramLM lm;
  ChannelParams channel;
  std::map<std::string, std::string> fingerprints;  // SHA-256 per component

  static Models from_bytes(std::span<const std::uint8_t> am_bytes, const std::string& lexicon_text,
                           std::span<const std::uint8_t> lm_bytes,
                           const std::optional<std::string>& channel_text,
                           const ChannelParams& fallback_channel);
  /// Reads the files named in cfg. Empty paths fall back to `data_dir`
  /// (am.imly, lexicon.dict, lyrics.lm, channel.txt). A missing channel file
  /// is allowed and selects cfg.channel.
  static Models load(const PipelineConfig& cfg, const std::string& data_dir);
};

/// Default model directory: $IMLY_DATA_DIR, else the build-time default.
std::string default_data_dir();

class CacheMiss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Stage { kSeparating, kRecognizing, kDecoding };
using StageCallback = std::function<void(Stage)>;

/// Stages 1-2 output for one input: everything stage 3 needs.
struct Analysis {
  std::string key;
  std::vector<TimeSpan> spans;
  std::vector<std::vector<PhonemeHypothesis>> hypotheses;  // per segment
  Posteriorgram posteriors;
};

class Pipeline {
 public:
  Pipeline(std::shared_ptr<const Models> models, PipelineConfig cfg,
           std::size_t cache_capacity = 64);

  const PipelineConfig& config() const { return cfg_; }
  const Models& models() const { return *models_; }

  /// Separation (optional), features, posteriors, segmentation and phoneme
  /// decoding, cached by (audio hash, analysis settings).
  std::shared_ptr<const Analysis> analyze(const AudioBuffer& buf, const StageCallback& on_stage = {});

  /// analyze + decode with the configured decoder settings.
  LyricResult imagine(const AudioBuffer& buf, const StageCallback& on_stage = {});

  /// Reruns stage 3 on a cached analysis. Throws CacheMiss if evicted.
  LyricResult redecode(const std::string& analysis_key, const DecoderOverrides& overrides) const;

  LyricResult decode(const Analysis& analysis, const DecoderConfig& dec,
                     const ChannelParams& ch) const;

  std::shared_ptr<const Analysis> cached(const std::string& key) const;

 private:
  std::string analysis_settings() const;

  std::shared_ptr<const Models> models_;
  PipelineConfig cfg_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  mutable std::list<std::string> lru_;  // most recent first
  std::unordered_map<std::string, std::pair<std::shared_ptr<const Analysis>,
                                            std::list<std::string>::iterator>>
      cache_;
};

}  // namespace imly

#endif  // IMLY_PIPELINE_H_
