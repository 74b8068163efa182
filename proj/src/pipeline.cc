// src/pipeline.cc

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

#include "imly/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "imly/audio_io.h"
#include "imly/error.h"
#include "imly/hash.h"
#include "imly/tensor_file.h"

#ifndef IMLY_DEFAULT_DATA_DIR
#define IMLY_DEFAULT_DATA_DIR "data"
#endif

namespace imly {

namespace {

// Frames whose RMS is within this fraction of the quietest one are treated
// as equally quiet when choosing a split point.
constexpr double kSplitTolerance = 0.05;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(long long v) { return std::to_string(v); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

using FrameRun = std::pair<std::size_t, std::size_t>;  // [begin, end) in frames

void split_run(const FrameRun& run, const std::vector<double>& rms, std::size_t max_frames,
               std::vector<FrameRun>& out) {
  const std::size_t n = run.second - run.first;
  if (n <= max_frames || n < 3) {
    out.push_back(run);
    return;
  }
  const std::size_t lo = run.first + n / 3;
  const std::size_t hi = run.second - n / 3;
  double quietest = rms[lo];
  for (std::size_t f = lo; f < hi; ++f) quietest = std::min(quietest, rms[f]);
  const double limit = quietest * (1.0 + kSplitTolerance);
  const long long twice_mid = static_cast<long long>(run.first + run.second);
  std::size_t best = lo;
  long long best_dist = -1;
  for (std::size_t f = lo; f < hi; ++f) {
    if (rms[f] > limit) continue;
    const long long dist = std::llabs(2 * static_cast<long long>(f) + 1 - twice_mid);
    if (best_dist < 0 || dist < best_dist) {
      best = f;
      best_dist = dist;
    }
  }
  split_run({run.first, best}, rms, max_frames, out);
  split_run({best, run.second}, rms, max_frames, out);
}

std::string audio_digest(const AudioBuffer& buf) {
  std::vector<std::uint8_t> bytes;
  put_le32(bytes, static_cast<std::uint32_t>(buf.sample_rate));
  const auto* raw = reinterpret_cast<const std::uint8_t*>(buf.samples.data());
  bytes.insert(bytes.end(), raw, raw + buf.samples.size() * sizeof(double));
  return sha256_hex(bytes);
}

std::map<std::string, std::string> echo(const PipelineConfig& cfg, const DecoderConfig& dec,
                                        const ChannelParams& ch) {
  std::map<std::string, std::string> m;
  m["sample_rate"] = fmt(static_cast<long long>(cfg.sample_rate));
  m["use_separation"] = cfg.use_separation ? "true" : "false";
  m["separator.k_neighbors"] = fmt(static_cast<long long>(cfg.separator.k_neighbors));
  m["separator.min_spacing"] = fmt(cfg.separator.min_spacing_seconds);
  m["separator.mask_exponent"] = fmt(cfg.separator.mask_exponent);
  m["separator.max_duration"] = fmt(cfg.separator.max_duration_seconds);
  m["separator.n_fft"] = fmt(static_cast<long long>(cfg.separator.stft.n_fft));
  m["separator.hop"] = fmt(static_cast<long long>(cfg.separator.stft.hop));
  m["segment.rms_threshold_factor"] = fmt(cfg.segmentation.rms_threshold_factor);
  m["segment.min_gap"] = fmt(cfg.segmentation.min_gap_seconds);
  m["segment.min_segment"] = fmt(cfg.segmentation.min_segment_seconds);
  m["segment.max_segment"] = fmt(cfg.segmentation.max_segment_seconds);
  m["phoneme_beam"] = fmt(static_cast<long long>(cfg.phoneme_beam));
  m["phoneme_n_best"] = fmt(static_cast<long long>(cfg.phoneme_n_best));
  m["am_weight"] = fmt(cfg.am_weight);
  m["decoder.beam_width"] = fmt(static_cast<long long>(dec.beam_width));
  m["decoder.lm_weight"] = fmt(dec.lm_weight);
  m["decoder.word_penalty"] = fmt(dec.word_insertion_penalty);
  m["decoder.n_best"] = fmt(static_cast<long long>(dec.n_best));
  m["decoder.max_insertions"] = fmt(static_cast<long long>(dec.max_insertions_per_gap));
  m["decoder.max_net_deletions"] = fmt(static_cast<long long>(dec.max_net_deletions));
  m["channel.p_match"] = fmt(ch.p_match);
  m["channel.p_sub"] = fmt(ch.p_sub);
  m["channel.p_del"] = fmt(ch.p_del);
  m["channel.p_ins"] = fmt(ch.p_ins);
  return m;
}

std::string hash_pairs(const std::map<std::string, std::string>& m) {
  std::string text;
  for (const auto& [k, v] : m) text += k + "=" + v + "\n";
  return sha256_hex(text);
}

}  // namespace

void SegmentConfig::validate() const {
  if (!(frame_seconds > 0.0)) throw ConfigError("segment frame length must be positive");
  if (!(rms_threshold_factor > 0.0)) throw ConfigError("rms_threshold_factor must be positive");
  if (!(min_gap_seconds >= 0.0)) throw ConfigError("min_gap must be >= 0");
  if (!(min_segment_seconds >= 0.0)) throw ConfigError("min_segment must be >= 0");
  if (!(max_segment_seconds > 0.0)) throw ConfigError("max_segment must be positive");
}

std::vector<TimeSpan> segment(const AudioBuffer& buf, const SegmentConfig& cfg) {
  cfg.validate();
  if (buf.sample_rate <= 0) throw DataError("invalid sample rate");
  const double sr = buf.sample_rate;
  const std::size_t len = buf.samples.size();
  const std::size_t frame =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.frame_seconds * sr)));
  const std::size_t n_frames = (len + frame - 1) / frame;
  std::vector<double> rms(n_frames, 0.0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t b = f * frame, e = std::min(len, b + frame);
    double acc = 0.0;
    for (std::size_t i = b; i < e; ++i) acc += buf.samples[i] * buf.samples[i];
    rms[f] = std::sqrt(acc / static_cast<double>(e - b));
  }
  const double threshold = cfg.rms_threshold_factor * median(rms);

  std::vector<FrameRun> runs;
  for (std::size_t f = 0; f < n_frames;) {
    if (!(rms[f] > threshold)) {
      ++f;
      continue;
    }
    std::size_t e = f;
    while (e < n_frames && rms[e] > threshold) ++e;
    runs.push_back({f, e});
    f = e;
  }
  auto seconds = [&](std::size_t frames) { return static_cast<double>(frames * frame) / sr; };

  std::vector<FrameRun> merged;
  for (const auto& r : runs) {
    if (!merged.empty() && seconds(r.first - merged.back().second) < cfg.min_gap_seconds) {
      merged.back().second = r.second;
    } else {
      merged.push_back(r);
    }
  }
  const auto max_frames =
      static_cast<std::size_t>(std::floor(cfg.max_segment_seconds * sr / static_cast<double>(frame)));
  std::vector<FrameRun> pieces;
  for (const auto& r : merged) {
    const double dur = static_cast<double>(std::min(len, r.second * frame) - r.first * frame) / sr;
    if (dur < cfg.min_segment_seconds) continue;
    split_run(r, rms, std::max<std::size_t>(1, max_frames), pieces);
  }
  std::vector<TimeSpan> out;
  for (const auto& p : pieces) {
    out.push_back({static_cast<double>(p.first * frame) / sr,
                   static_cast<double>(std::min(len, p.second * frame)) / sr});
  }
  return out;
}

void PipelineConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  separator.validate();
  segmentation.validate();
  decoder.validate();
  channel.validate();
  frontend.stft.validate();
  if (phoneme_beam < 1) throw ConfigError("phoneme_beam must be >= 1");
  if (phoneme_n_best < 1) throw ConfigError("phoneme_n_best must be >= 1");
  if (!std::isfinite(am_weight)) throw ConfigError("am_weight must be finite");
}

void apply_config(PipelineConfig& cfg, const KeyValues& kv) {
  bool channel_touched = false;
  for (const auto& [k, v] : kv) {
    auto num = [&] { return parse_double(v, k); };
    auto integer = [&] { return static_cast<int>(parse_int(v, k)); };
    if (k == "sample_rate") cfg.sample_rate = integer();
    else if (k == "use_separation") cfg.use_separation = parse_bool(v, k);
    else if (k == "separator.k_neighbors") cfg.separator.k_neighbors = integer();
    else if (k == "separator.min_spacing") cfg.separator.min_spacing_seconds = num();
    else if (k == "separator.mask_exponent") cfg.separator.mask_exponent = num();
    else if (k == "separator.max_duration") cfg.separator.max_duration_seconds = num();
    else if (k == "separator.n_fft") cfg.separator.stft.n_fft = integer();
    else if (k == "separator.hop") cfg.separator.stft.hop = integer();
    else if (k == "segment.rms_threshold_factor") cfg.segmentation.rms_threshold_factor = num();
    else if (k == "segment.min_gap") cfg.segmentation.min_gap_seconds = num();
    else if (k == "segment.min_segment") cfg.segmentation.min_segment_seconds = num();
    else if (k == "segment.max_segment") cfg.segmentation.max_segment_seconds = num();
    else if (k == "phoneme_beam") cfg.phoneme_beam = integer();
    else if (k == "phoneme_n_best") cfg.phoneme_n_best = integer();
    else if (k == "am_weight") cfg.am_weight = num();
    else if (k == "decoder.beam_width") cfg.decoder.beam_width = integer();
    else if (k == "decoder.lm_weight") cfg.decoder.lm_weight = num();
    else if (k == "decoder.word_penalty") cfg.decoder.word_insertion_penalty = num();
    else if (k == "decoder.n_best") cfg.decoder.n_best = integer();
    else if (k == "decoder.max_insertions") cfg.decoder.max_insertions_per_gap = integer();
    else if (k == "decoder.max_net_deletions") cfg.decoder.max_net_deletions = integer();
    else if (k == "channel.p_sub") { cfg.channel.p_sub = num(); channel_touched = true; }
    else if (k == "channel.p_del") { cfg.channel.p_del = num(); channel_touched = true; }
    else if (k == "channel.p_ins") cfg.channel.p_ins = num();
    else if (k == "am") cfg.am_path = v;
    else if (k == "lexicon") cfg.lexicon_path = v;
    else if (k == "lm") cfg.lm_path = v;
    else if (k == "channel") cfg.channel_path = v;
    else if (k == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(v, k));
    else throw ConfigError("unknown config key '" + k + "'");
  }
  if (channel_touched) cfg.channel.p_match = 1.0 - cfg.channel.p_sub - cfg.channel.p_del;
  cfg.validate();
}

void DecoderOverrides::apply(DecoderConfig& dec, ChannelParams& ch) const {
  if (lm_weight) dec.lm_weight = *lm_weight;
  if (beam_width) dec.beam_width = *beam_width;
  if (word_penalty) dec.word_insertion_penalty = *word_penalty;
  if (n_best) dec.n_best = *n_best;
  if (p_sub) ch.p_sub = *p_sub;
  if (p_del) ch.p_del = *p_del;
  if (p_ins) ch.p_ins = *p_ins;
  if (p_sub || p_del) ch.p_match = 1.0 - ch.p_sub - ch.p_del;
  dec.validate();
  ch.validate();
}

Models Models::from_bytes(std::span<const std::uint8_t> am_bytes, const std::string& lexicon_text,
                          std::span<const std::uint8_t> lm_bytes,
                          const std::optional<std::string>& channel_text,
                          const ChannelParams& fallback_channel) {
  Models m;
  m.am = load_model(am_bytes);
  m.lexicon = parse_lexicon_text(lexicon_text);
  if (m.lexicon.empty()) throw DataError("lexicon has no entries");
  m.lm = decode_ngram(lm_bytes);
  m.channel = channel_text ? parse_channel(*channel_text) : fallback_channel;
  m.channel.validate();
  m.fingerprints["am"] = sha256_hex(am_bytes);
  m.fingerprints["lexicon"] = sha256_hex(lexicon_text);
  m.fingerprints["lm"] = sha256_hex(lm_bytes);
  m.fingerprints["channel"] = sha256_hex(format_channel(m.channel));
  return m;
}

Models Models::load(const PipelineConfig& cfg, const std::string& data_dir) {
  auto resolve = [&](const std::string& given, const char* name) {
    const std::string path = given.empty() ? data_dir + "/" + name : given;
    if (!std::filesystem::exists(path)) throw DataError("missing model file " + path);
    return path;
  };
  const auto am = read_file_bytes(resolve(cfg.am_path, "am.imly"));
  const auto lex_bytes = read_file_bytes(resolve(cfg.lexicon_path, "lexicon.dict"));
  const auto lm = read_file_bytes(resolve(cfg.lm_path, "lyrics.lm"));
  std::optional<std::string> channel;
  if (!cfg.channel_path.empty()) {
    const auto bytes = read_file_bytes(resolve(cfg.channel_path, "channel.txt"));
    channel = std::string(bytes.begin(), bytes.end());
  }
  return from_bytes(am, std::string(lex_bytes.begin(), lex_bytes.end()), lm, channel, cfg.channel);
}

std::string default_data_dir() {
  if (const char* env = std::getenv("IMLY_DATA_DIR"); env && *env) return env;
  return IMLY_DEFAULT_DATA_DIR;
}

Pipeline::Pipeline(std::shared_ptr<const Models> models, PipelineConfig cfg,
                   std::size_t cache_capacity)
    : models_(std::move(models)), cfg_(std::move(cfg)), capacity_(std::max<std::size_t>(1, cache_capacity)) {
  cfg_.validate();
}

std::string Pipeline::analysis_settings() const {
  const auto all = echo(cfg_, cfg_.decoder, models_->channel);
  std::string text = "am=" + models_->fingerprints.at("am") + "\n";
  for (const auto& [k, v] : all) {
    if (k.rfind("decoder.", 0) == 0 || k.rfind("channel.", 0) == 0 || k == "am_weight") continue;
    text += k + "=" + v + "\n";
  }
  return text;
}

std::shared_ptr<const Analysis> Pipeline::cached(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = cache_.find(key);
  if (it == cache_.end()) return nullptr;
  lru_.splice(lru_.begin(), lru_, it->second.second);
  return it->second.first;
}

std::shared_ptr<const Analysis> Pipeline::analyze(const AudioBuffer& input,
                                                  const StageCallback& on_stage) {
  if (input.sample_rate <= 0) throw DataError("invalid sample rate");
  for (double s : input.samples) {
    if (!std::isfinite(s)) throw DataError("audio contains non-finite samples");
  }
  if (input.duration_seconds() < 0.5) {
    throw DataError("audio too short: need at least 0.5 s");
  }
  const AudioBuffer buf =
      input.sample_rate == cfg_.sample_rate ? input : resample(input, cfg_.sample_rate);
  const std::string key = audio_digest(buf) + ":" + sha256_hex(analysis_settings());
  if (auto hit = cached(key)) return hit;

  auto notify = [&](Stage s) {
    if (on_stage) on_stage(s);
  };
  notify(Stage::kSeparating);
  const AudioBuffer fg = cfg_.use_separation ? separate(buf, cfg_.separator).foreground : buf;

  notify(Stage::kRecognizing);
  auto analysis = std::make_shared<Analysis>();
  analysis->key = key;
  analysis->posteriors = forward(compute_features(fg, cfg_.frontend), models_->am);
  analysis->spans = segment(fg, cfg_.segmentation);
  const double frames_per_second = static_cast<double>(fg.sample_rate) / cfg_.frontend.stft.hop;
  const std::size_t total = analysis->posteriors.num_frames();
  for (const auto& span : analysis->spans) {
    auto to_frame = [&](double t) {
      const double f = std::ceil(t * frames_per_second - 1e-9);
      return std::min(total, static_cast<std::size_t>(std::max(0.0, f)));
    };
    const std::size_t b = to_frame(span.start_s), e = std::max(b, to_frame(span.end_s));
    auto hyps = beam_decode(analysis->posteriors.slice(b, e), cfg_.phoneme_beam);
    if (hyps.size() > static_cast<std::size_t>(cfg_.phoneme_n_best)) {
      hyps.resize(static_cast<std::size_t>(cfg_.phoneme_n_best));
    }
    analysis->hypotheses.push_back(std::move(hyps));
  }

  std::lock_guard<std::mutex> lock(mu_);
  if (const auto it = cache_.find(key); it != cache_.end()) return it->second.first;
  lru_.push_front(key);
  cache_[key] = {analysis, lru_.begin()};
  while (cache_.size() > capacity_) {
    cache_.erase(lru_.back());
    lru_.pop_back();
  }
  return analysis;
}

LyricResult Pipeline::decode(const Analysis& analysis, const DecoderConfig& dec,
                             const ChannelParams& ch) const {
  const Models& m = *models_;
  LyricResult result;
  result.seed = cfg_.seed;
  result.fingerprints = m.fingerprints;
  result.config = echo(cfg_, dec, ch);
  result.config_hash = hash_pairs(result.config);
  for (std::size_t s = 0; s < analysis.spans.size(); ++s) {
    SegmentResult seg;
    seg.span = analysis.spans[s];
    const auto& hyps = analysis.hypotheses[s];
    if (!hyps.empty()) seg.phonemes = hyps.front().sequence.symbols;
    try {
      std::map<std::string, Candidate> by_text;
      for (const auto& h : hyps) {
        if (h.sequence.empty()) continue;
        for (const auto& ws : decode_words(h.sequence.symbols, m.lexicon, m.lm, ch, dec)) {
          Candidate c;
          c.text = join_words(ws.words);
          c.score = ws.score + (cfg_.am_weight == 0.0 ? 0.0 : cfg_.am_weight * h.log_prob);
          c.phonemes = h.sequence.symbols;
          auto [it, inserted] = by_text.try_emplace(c.text, c);
          if (!inserted && c.score > it->second.score) it->second = c;
        }
      }
      for (auto& [text, c] : by_text) seg.candidates.push_back(std::move(c));
      std::sort(seg.candidates.begin(), seg.candidates.end(),
                [](const Candidate& a, const Candidate& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.text < b.text;
                });
      if (seg.candidates.size() > static_cast<std::size_t>(dec.n_best)) {
        seg.candidates.resize(static_cast<std::size_t>(dec.n_best));
      }
    } catch (const std::exception& e) {
      seg.candidates.clear();
      seg.error = e.what();
    }
    result.segments.push_back(std::move(seg));
  }
  return result;
}

LyricResult Pipeline::imagine(const AudioBuffer& buf, const StageCallback& on_stage) {
  const auto analysis = analyze(buf, on_stage);
  if (on_stage) on_stage(Stage::kDecoding);
  return decode(*analysis, cfg_.decoder, models_->channel);
}

LyricResult Pipeline::redecode(const std::string& analysis_key,
                               const DecoderOverrides& overrides) const {
  const auto analysis = cached(analysis_key);
  if (!analysis) throw CacheMiss("no cached analysis for this input; resubmit the audio");
  DecoderConfig dec = cfg_.decoder;
  ChannelParams ch = models_->channel;
  overrides.apply(dec, ch);
  return decode(*analysis, dec, ch);
}

}  // namespace imly
