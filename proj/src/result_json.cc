// src/result_json.cc

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

#include <cmath>

#include "imly/error.h"
#include "imly/pipeline.h"
#include "json.hpp"

namespace imly {

namespace {

using nlohmann::json;

double rounded(double v) { return std::round(v * 1e6) / 1e6; }

json symbols(const std::vector<Phoneme>& seq) {
  json a = json::array();
  for (Phoneme p : seq) a.push_back(std::string(phoneme_symbol(p)));
  return a;
}

std::vector<Phoneme> parse_symbols(const json& a) {
  std::vector<Phoneme> out;
  for (const auto& s : a) {
    const auto p = phoneme_index(s.get<std::string>());
    if (!p) throw DataError("unknown phoneme in result JSON");
    out.push_back(*p);
  }
  return out;
}

}  // namespace

std::string to_json(const LyricResult& result) {
  json j;
  j["config"] = result.config;
  j["config_hash"] = result.config_hash;
  j["seed"] = result.seed;
  j["fingerprints"] = result.fingerprints;
  j["segments"] = json::array();
  for (const auto& seg : result.segments) {
    json s;
    s["start_s"] = rounded(seg.span.start_s);
    s["end_s"] = rounded(seg.span.end_s);
    s["phonemes"] = symbols(seg.phonemes);
    s["candidates"] = json::array();
    for (const auto& c : seg.candidates) {
      s["candidates"].push_back(
          {{"text", c.text}, {"score", rounded(c.score)}, {"phonemes", symbols(c.phonemes)}});
    }
    if (!seg.error.empty()) s["error"] = seg.error;
    j["segments"].push_back(std::move(s));
  }
  return j.dump(2) + "\n";
}

LyricResult result_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    LyricResult r;
    r.config = j.at("config").get<std::map<std::string, std::string>>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.fingerprints = j.at("fingerprints").get<std::map<std::string, std::string>>();
    for (const auto& s : j.at("segments")) {
      SegmentResult seg;
      seg.span = {s.at("start_s").get<double>(), s.at("end_s").get<double>()};
      seg.phonemes = parse_symbols(s.at("phonemes"));
      for (const auto& c : s.at("candidates")) {
        seg.candidates.push_back({c.at("text").get<std::string>(), c.at("score").get<double>(),
                                  parse_symbols(c.at("phonemes"))});
      }
      if (s.contains("error")) seg.error = s.at("error").get<std::string>();
      r.segments.push_back(std::move(seg));
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid result JSON: ") + e.what());
  }
}

}  // namespace imly
