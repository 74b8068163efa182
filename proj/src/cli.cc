// src/cli.cc

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

#include "imly/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "imly/acoustic_model.h"
#include "imly/audio_io.h"
#include "imly/channel.h"
#include "imly/ctc.h"
#include "imly/error.h"
#include "imly/ngram_lm.h"
#include "imly/pipeline.h"
#include "imly/separator.h"
#include "imly/service.h"
#include "imly/synth.h"
#include "imly/tensor_file.h"

namespace imly {

namespace {

struct ModelFlags {
  std::string config, am, lexicon, lm, channel;
  std::uint64_t seed = 0;
  int beam = 64;
  double lm_weight = 1.0;
  bool no_separation = false;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--config", f.config, "key=value config file; flags override it");
  cmd->add_option("--seed", f.seed, "seed echoed into the result");
  cmd->add_option("--am", f.am, "acoustic model (default $IMLY_DATA_DIR/am.imly)");
  cmd->add_option("--lexicon", f.lexicon, "CMUdict lexicon (default $IMLY_DATA_DIR/lexicon.dict)");
  cmd->add_option("--lm", f.lm, "n-gram LM (default $IMLY_DATA_DIR/lyrics.lm)");
  cmd->add_option("--channel", f.channel, "channel key=value file (default: built-in rates)");
  cmd->add_option("--beam", f.beam, "word decoder beam width");
  cmd->add_option("--lm-weight", f.lm_weight, "LM weight");
  cmd->add_flag("--no-separation", f.no_separation, "recognize the unseparated input");
}

bool given(const CLI::App* cmd, const std::string& name) { return cmd->count(name) > 0; }

PipelineConfig pipeline_config(const CLI::App* cmd, const ModelFlags& f) {
  PipelineConfig cfg;
  if (!f.config.empty()) apply_config(cfg, load_key_values_file(f.config));
  if (given(cmd, "--am")) cfg.am_path = f.am;
  if (given(cmd, "--lexicon")) cfg.lexicon_path = f.lexicon;
  if (given(cmd, "--lm")) cfg.lm_path = f.lm;
  if (given(cmd, "--channel")) cfg.channel_path = f.channel;
  if (given(cmd, "--seed")) cfg.seed = f.seed;
  if (given(cmd, "--beam")) cfg.decoder.beam_width = f.beam;
  if (given(cmd, "--lm-weight")) cfg.decoder.lm_weight = f.lm_weight;
  if (f.no_separation) cfg.use_separation = false;
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << text;
  if (!f) throw DataError("write failed for " + path);
}

AudioBuffer load_input(const std::string& path, int rate) {
  AudioBuffer buf = read_wav_file(path);
  return buf.sample_rate == rate ? buf : resample(buf, rate);
}

// Manifest lines: <wav path> TAB <phonemes>. Relative paths are resolved
// against the manifest's directory.
std::vector<TrainingExample> load_manifest(const std::string& path, int rate) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  const auto dir = std::filesystem::path(path).parent_path();
  std::vector<TrainingExample> data;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("manifest line " + std::to_string(line_no) + ": expected <wav>\\t<phonemes>");
    }
    std::filesystem::path wav(line.substr(0, tab));
    if (wav.is_relative()) wav = dir / wav;
    data.push_back({compute_features(load_input(wav.string(), rate)), parse_phonemes(line.substr(tab + 1))});
  }
  if (data.empty()) throw DataError("manifest has no examples");
  return data;
}

std::vector<ChannelPair> load_pairs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<ChannelPair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto bar = line.find('|');
    if (bar == std::string::npos) {
      throw DataError("pairs line " + std::to_string(line_no) + ": expected 'canonical | observed'");
    }
    pairs.push_back({parse_phonemes(line.substr(0, bar)), parse_phonemes(line.substr(bar + 1))});
  }
  return pairs;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"imly: imagine lyrics in music and environmental sounds"};
  app.name("imly");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  // separate
  std::string sep_in, sep_fg, sep_bg, sep_mask;
  SeparatorConfig sep_cfg;
  int sep_rate = 22050;
  auto* separate_cmd = app.add_subcommand("separate", "split a WAV into foreground and background");
  separate_cmd->add_option("input", sep_in, "input WAV")->required();
  separate_cmd->add_option("--fg", sep_fg, "foreground WAV output");
  separate_cmd->add_option("--bg", sep_bg, "background WAV output");
  separate_cmd->add_option("--mask", sep_mask, "background mask output (IMLY container)");
  separate_cmd->add_option("--k-neighbors", sep_cfg.k_neighbors, "similar frames per median");
  separate_cmd->add_option("--min-spacing", sep_cfg.min_spacing_seconds, "seconds between neighbors");
  separate_cmd->add_option("--mask-exponent", sep_cfg.mask_exponent, "mask hardness");
  separate_cmd->add_option("--rate", sep_rate, "working sample rate");

  // features
  std::string feat_in, feat_out;
  auto* features_cmd = app.add_subcommand("features", "log-mel features of a WAV");
  features_cmd->add_option("input", feat_in, "input WAV")->required();
  features_cmd->add_option("--out", feat_out, "features output (IMLY container)");

  // train-am
  std::string am_manifest, am_out;
  std::size_t am_synthetic = 0, am_min_len = 5, am_max_len = 8;
  TrainConfig train_cfg;
  train_cfg.epochs = 40;
  train_cfg.seed = 42;
  auto* train_am_cmd = app.add_subcommand("train-am", "train the acoustic model");
  train_am_cmd->add_option("--manifest", am_manifest, "lines of <wav>\\t<phonemes>");
  train_am_cmd->add_option("--synthetic", am_synthetic, "train on N synthetic phoneme-coded utterances");
  train_am_cmd->add_option("--min-len", am_min_len, "synthetic utterance min phonemes");
  train_am_cmd->add_option("--max-len", am_max_len, "synthetic utterance max phonemes");
  train_am_cmd->add_option("--epochs", train_cfg.epochs, "training epochs");
  train_am_cmd->add_option("--hidden", train_cfg.hidden, "GRU hidden size");
  train_am_cmd->add_option("--lr", train_cfg.learning_rate, "learning rate");
  train_am_cmd->add_option("--momentum", train_cfg.momentum, "momentum");
  train_am_cmd->add_option("--seed", train_cfg.seed, "seed for init, shuffling and synthesis");
  train_am_cmd->add_option("--out", am_out, "model output")->required();

  // transcribe
  std::string tr_in, tr_out;
  int tr_beam = 16;
  ModelFlags tr_flags;
  auto* transcribe_cmd = app.add_subcommand("transcribe", "WAV to phonemes");
  transcribe_cmd->add_option("input", tr_in, "input WAV")->required();
  transcribe_cmd->add_option("--config", tr_flags.config, "key=value config file");
  transcribe_cmd->add_option("--am", tr_flags.am, "acoustic model (default $IMLY_DATA_DIR/am.imly)");
  transcribe_cmd->add_option("--beam", tr_beam, "CTC prefix beam width");
  transcribe_cmd->add_flag("--no-separation", tr_flags.no_separation, "recognize the unseparated input");
  transcribe_cmd->add_option("--out", tr_out, "output text file");

  // train-lm
  std::string lm_corpus, lm_out, lm_moderation;
  int lm_order = 3;
  double lm_k = 0.1;
  auto* train_lm_cmd = app.add_subcommand("train-lm", "train the n-gram lyrics LM");
  train_lm_cmd->add_option("corpus", lm_corpus, "one lyric line per row")->required();
  train_lm_cmd->add_option("--order", lm_order, "n-gram order");
  train_lm_cmd->add_option("--k", lm_k, "add-k constant");
  train_lm_cmd->add_option("--moderation", lm_moderation, "keyword list; lines containing one are dropped");
  train_lm_cmd->add_option("--out", lm_out, "LM output")->required();

  // estimate-channel
  std::string ch_pairs, ch_out;
  auto* channel_cmd = app.add_subcommand("estimate-channel", "fit channel rates by EM");
  channel_cmd->add_option("pairs", ch_pairs, "lines of 'canonical | observed' phonemes")->required();
  channel_cmd->add_option("--out", ch_out, "channel output file");

  // imagine
  std::string im_in, im_out;
  ModelFlags im_flags;
  auto* imagine_cmd = app.add_subcommand("imagine", "WAV to ranked lyric lines (JSON)");
  imagine_cmd->add_option("input", im_in, "input WAV")->required();
  add_model_flags(imagine_cmd, im_flags);
  imagine_cmd->add_option("--out", im_out, "result JSON output");

  // serve
  ModelFlags sv_flags;
  int sv_port = 8080;
  std::string sv_host = "127.0.0.1", sv_static;
  std::size_t sv_workers = 0;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP job service");
  add_model_flags(serve_cmd, sv_flags);
  serve_cmd->add_option("--port", sv_port, "listen port");
  serve_cmd->add_option("--host", sv_host, "listen address");
  serve_cmd->add_option("--static-dir", sv_static, "UI assets served at /");
  serve_cmd->add_option("--workers", sv_workers, "worker threads (0: one per CPU)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (separate_cmd->parsed()) {
      const AudioBuffer buf = load_input(sep_in, sep_rate);
      const Separation s = separate(buf, sep_cfg);
      if (!sep_fg.empty()) write_wav_file(sep_fg, s.foreground);
      if (!sep_bg.empty()) write_wav_file(sep_bg, s.background);
      if (!sep_mask.empty()) {
        TensorSet set;
        set.tensors.push_back(matrix_tensor("separator.background_mask", s.background_mask));
        write_file_bytes(sep_mask, encode_tensors(set));
      }
      const double total = energy(buf);
      char line[96];
      std::snprintf(line, sizeof line, "foreground_energy_ratio=%.6f\n",
                    total > 0.0 ? energy(s.foreground) / total : 0.0);
      out << line;
    } else if (features_cmd->parsed()) {
      const FeatureMatrix f = compute_features(load_input(feat_in, 22050));
      if (!feat_out.empty()) {
        TensorSet set;
        set.tensors.push_back(matrix_tensor("features", f.values));
        write_file_bytes(feat_out, encode_tensors(set));
      }
      out << "frames=" << f.num_frames() << " mels=" << f.values.cols() << "\n";
    } else if (train_am_cmd->parsed()) {
      if (am_manifest.empty() == (am_synthetic == 0)) {
        err << "train-am: give exactly one of --manifest or --synthetic\n";
        return kExitUsage;
      }
      std::vector<TrainingExample> data =
          am_synthetic > 0 ? featurize(synthetic_corpus(am_synthetic, am_min_len, am_max_len, train_cfg.seed))
                           : load_manifest(am_manifest, 22050);
      const AcousticModel model = train(data, train_cfg, nullptr, [&](int epoch, double loss) {
        err << "epoch " << epoch << " loss " << loss << "\n";
      });
      write_file_bytes(am_out, save_model(model));
      std::vector<std::vector<Phoneme>> refs, hyps;
      for (const auto& ex : data) {
        refs.push_back(ex.target);
        hyps.push_back(greedy_decode(forward(ex.features, model)).symbols);
      }
      char line[64];
      std::snprintf(line, sizeof line, "token_accuracy=%.4f\n", token_accuracy(refs, hyps));
      out << line;
    } else if (transcribe_cmd->parsed()) {
      PipelineConfig cfg;
      if (!tr_flags.config.empty()) apply_config(cfg, load_key_values_file(tr_flags.config));
      if (given(transcribe_cmd, "--am")) cfg.am_path = tr_flags.am;
      if (tr_flags.no_separation) cfg.use_separation = false;
      if (tr_beam < 1) throw ConfigError("--beam must be >= 1");
      const std::string am_path = cfg.am_path.empty() ? default_data_dir() + "/am.imly" : cfg.am_path;
      const AcousticModel model = load_model_file(am_path);
      const AudioBuffer buf = load_input(tr_in, cfg.sample_rate);
      const AudioBuffer fg = cfg.use_separation ? separate(buf, cfg.separator).foreground : buf;
      const auto hyps = beam_decode(forward(compute_features(fg, cfg.frontend), model), tr_beam);
      write_text(tr_out, to_string(hyps.front().sequence.symbols) + "\n", out);
    } else if (train_lm_cmd->parsed()) {
      std::vector<std::string> lines = read_lines(lm_corpus);
      std::size_t removed = 0;
      if (!lm_moderation.empty()) {
        ModerationResult m = moderate_corpus(lines, load_moderation_list(lm_moderation));
        lines = std::move(m.kept);
        removed = m.removed;
      }
      const NGramLM lm = train_ngram(lines, lm_order, lm_k);
      write_file_bytes(lm_out, encode_ngram(lm));
      out << "lines=" << lines.size() << " removed=" << removed
          << " vocabulary=" << lm.vocabulary().size() << "\n";
    } else if (channel_cmd->parsed()) {
      write_text(ch_out, format_channel(estimate_channel(load_pairs(ch_pairs))), out);
    } else if (imagine_cmd->parsed()) {
      const PipelineConfig cfg = pipeline_config(imagine_cmd, im_flags);
      auto models = std::make_shared<const Models>(Models::load(cfg, default_data_dir()));
      Pipeline pipeline(models, cfg);
      const LyricResult result = pipeline.imagine(read_wav_file(im_in));
      write_text(im_out, to_json(result), out);
    } else if (serve_cmd->parsed()) {
      const PipelineConfig cfg = pipeline_config(serve_cmd, sv_flags);
      auto models = std::make_shared<const Models>(Models::load(cfg, default_data_dir()));
      auto pipeline = std::make_shared<Pipeline>(models, cfg);
      ServiceConfig scfg;
      scfg.workers = sv_workers;
      scfg.static_dir = sv_static;
      JobService service(pipeline, scfg);
      err << "listening on http://" << sv_host << ":" << sv_port << "\n";
      if (serve(service, sv_host, sv_port) != 0) {
        err << "cannot listen on " << sv_host << ":" << sv_port << "\n";
        return kExitData;
      }
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace imly
