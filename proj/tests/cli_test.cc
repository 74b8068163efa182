// tests/cli_test.cc

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

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "imly/audio_io.h"
#include "imly/cli.h"
#include "imly/rng.h"
#include "oracles.h"

using namespace imly;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

int subprocess(const std::string& args) {
  const std::string cmd = std::string(IMLY_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("imly_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

AudioBuffer noise(double seconds, std::uint64_t seed) {
  Rng rng(seed);
  AudioBuffer b;
  b.sample_rate = 22050;
  for (int i = 0; i < static_cast<int>(seconds * 22050); ++i) b.samples.push_back(0.3 * rng.uniform(-1, 1));
  return b;
}

const std::string kModels = IMLY_MODEL_DIR;

}  // namespace

TEST_CASE("no subcommand or unknown flag is a usage error") {
  CHECK(cli({}).code == kExitUsage);
  const auto r = cli({"imagine", "x.wav", "--bogus"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(subprocess("imagine x.wav --bogus") == 1);
}

TEST_CASE("--help on every subcommand lists flags with defaults") {
  for (const std::string sub : {"separate", "features", "train-am", "transcribe", "train-lm",
                                "estimate-channel", "imagine", "serve"}) {
    const auto r = cli({sub, "--help"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("--help") != std::string::npos);
  }
  const auto im = cli({"imagine", "--help"});
  for (const char* flag : {"--config", "--seed", "--out", "--am", "--lexicon", "--lm", "--channel",
                           "--beam", "--lm-weight", "--no-separation"}) {
    CHECK(im.out.find(flag) != std::string::npos);
  }
  CHECK(im.out.find("[64]") != std::string::npos);  // beam default shown
  CHECK(cli({"serve", "--help"}).out.find("--port") != std::string::npos);
}

TEST_CASE("separate reports a small foreground ratio on the loop fixture") {
  TempDir tmp;
  write_wav_file(tmp / "loop.wav", oracle::noise_loop(20.0, 16384, 22050, 3));
  const auto r = cli({"separate", tmp / "loop.wav", "--fg", tmp / "fg.wav", "--bg", tmp / "bg.wav"});
  REQUIRE(r.code == kExitOk);
  const auto at = r.out.find("foreground_energy_ratio=");
  REQUIRE(at != std::string::npos);
  CHECK(std::stod(r.out.substr(at + 24)) < 0.2);
  CHECK(fs::exists(tmp / "fg.wav"));
  CHECK(read_wav_file(tmp / "bg.wav").samples.size() == 20 * 22050);
}

TEST_CASE("imagine twice with a fixed seed gives identical files") {
  TempDir tmp;
  write_wav_file(tmp / "in.wav", noise(2.0, 4));
  const std::vector<std::string> common{"imagine", tmp / "in.wav", "--seed", "7",
                                        "--am", kModels + "/am.imly", "--lexicon", kModels + "/lexicon.dict",
                                        "--lm", kModels + "/lyrics.lm"};
  auto a = common, b = common;
  a.insert(a.end(), {"--out", tmp / "a.json"});
  b.insert(b.end(), {"--out", tmp / "b.json"});
  REQUIRE(cli(a).code == kExitOk);
  REQUIRE(subprocess([&] {
            std::string s;
            for (const auto& x : b) s += "'" + x + "' ";
            return s;
          }()) == 0);
  const auto ja = slurp(tmp / "a.json");
  CHECK(!ja.empty());
  CHECK(ja == slurp(tmp / "b.json"));
  CHECK(ja.find("\"seed\": 7") != std::string::npos);
}

TEST_CASE("data errors exit 2") {
  TempDir tmp;
  std::ofstream(tmp / "bad.wav") << "not a wave";
  CHECK(cli({"separate", tmp / "bad.wav"}).code == kExitData);
  CHECK(cli({"separate", tmp / "missing.wav"}).code == kExitData);
  CHECK(subprocess("separate '" + (tmp / "bad.wav") + "'") == 2);
}

TEST_CASE("bad knob values are usage errors") {
  TempDir tmp;
  write_wav_file(tmp / "in.wav", noise(1.0, 5));
  CHECK(cli({"imagine", tmp / "in.wav", "--beam", "0", "--am", kModels + "/am.imly"}).code == kExitUsage);
}

TEST_CASE("config file is read and flags override it") {
  TempDir tmp;
  write_wav_file(tmp / "in.wav", noise(2.0, 6));
  std::ofstream(tmp / "cfg.txt") << "# test\ndecoder.beam_width = 8\ndecoder.lm_weight = 0.5\n";
  const std::vector<std::string> models{"--am", kModels + "/am.imly", "--lexicon", kModels + "/lexicon.dict",
                                        "--lm", kModels + "/lyrics.lm"};
  auto a = std::vector<std::string>{"imagine", tmp / "in.wav", "--config", tmp / "cfg.txt"};
  a.insert(a.end(), models.begin(), models.end());
  const auto ra = cli(a);
  REQUIRE(ra.code == kExitOk);
  CHECK(ra.out.find("\"decoder.beam_width\": \"8\"") != std::string::npos);
  auto b = a;
  b.insert(b.end(), {"--beam", "32"});
  const auto rb = cli(b);
  REQUIRE(rb.code == kExitOk);
  CHECK(rb.out.find("\"decoder.beam_width\": \"32\"") != std::string::npos);
  CHECK(rb.out.find("\"decoder.lm_weight\": \"0.5\"") != std::string::npos);
}

TEST_CASE("train-lm, estimate-channel, features, transcribe") {
  TempDir tmp;
  std::ofstream(tmp / "corpus.txt") << "hold me now\nhold me close\nbad words here\n";
  std::ofstream(tmp / "mod.txt") << "bad\n";
  const auto lm = cli({"train-lm", tmp / "corpus.txt", "--moderation", tmp / "mod.txt", "--out", tmp / "x.lm"});
  CHECK(lm.code == kExitOk);
  CHECK(lm.out.find("removed=1") != std::string::npos);

  std::ofstream(tmp / "pairs.txt") << "HH AY | HH AY\nL OW | L AW\nM IY | M IY\n";
  const auto ch = cli({"estimate-channel", tmp / "pairs.txt"});
  CHECK(ch.code == kExitOk);
  CHECK(ch.out.find("p_sub") != std::string::npos);

  write_wav_file(tmp / "in.wav", noise(1.0, 7));
  CHECK(cli({"features", tmp / "in.wav"}).out.find("mels=40") != std::string::npos);
  const auto tr = cli({"transcribe", tmp / "in.wav", "--am", kModels + "/am.imly"});
  CHECK(tr.code == kExitOk);
  CHECK(!tr.out.empty());
}
