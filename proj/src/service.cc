// src/service.cc

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

#include "imly/service.h"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>

#include "httplib.h"
#include "imly/audio_io.h"
#include "imly/error.h"
#include "json.hpp"

namespace imly {

using nlohmann::json;

namespace {

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

json overrides_json(const DecoderOverrides& o) {
  json j = json::object();
  if (o.lm_weight) j["lm_weight"] = *o.lm_weight;
  if (o.beam_width) j["beam_width"] = *o.beam_width;
  if (o.word_penalty) j["word_penalty"] = *o.word_penalty;
  if (o.n_best) j["n_best"] = *o.n_best;
  if (o.p_sub) j["p_sub"] = *o.p_sub;
  if (o.p_del) j["p_del"] = *o.p_del;
  if (o.p_ins) j["p_ins"] = *o.p_ins;
  return j;
}

DecoderOverrides merged(DecoderOverrides base, const DecoderOverrides& top) {
  if (top.lm_weight) base.lm_weight = top.lm_weight;
  if (top.beam_width) base.beam_width = top.beam_width;
  if (top.word_penalty) base.word_penalty = top.word_penalty;
  if (top.n_best) base.n_best = top.n_best;
  if (top.p_sub) base.p_sub = top.p_sub;
  if (top.p_del) base.p_del = top.p_del;
  if (top.p_ins) base.p_ins = top.p_ins;
  return base;
}

json error_body(const std::string& msg) { return json{{"error", msg}}; }

}  // namespace

std::string to_string(JobState s) {
  switch (s) {
    case JobState::kQueued: return "queued";
    case JobState::kSeparating: return "separating";
    case JobState::kRecognizing: return "recognizing";
    case JobState::kDecoding: return "decoding";
    case JobState::kDone: return "done";
    case JobState::kFailed: return "failed";
  }
  return "unknown";
}

DecoderOverrides parse_overrides(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text.empty() ? std::string("{}") : json_text);
  } catch (const json::exception&) {
    throw RequestError(400, "body is not valid JSON");
  }
  if (!j.is_object()) throw RequestError(400, "expected a JSON object");
  DecoderOverrides o;
  for (const auto& [k, v] : j.items()) {
    const bool integral = k == "beam_width" || k == "n_best";
    if (integral ? !v.is_number_integer() : !v.is_number()) {
      throw RequestError(400, "field '" + k + "' has the wrong type");
    }
    if (k == "lm_weight") o.lm_weight = v.get<double>();
    else if (k == "beam_width") o.beam_width = v.get<int>();
    else if (k == "word_penalty") o.word_penalty = v.get<double>();
    else if (k == "n_best") o.n_best = v.get<int>();
    else if (k == "p_sub") o.p_sub = v.get<double>();
    else if (k == "p_del") o.p_del = v.get<double>();
    else if (k == "p_ins") o.p_ins = v.get<double>();
    else throw RequestError(400, "unknown field '" + k + "'");
  }
  return o;
}

struct JobService::Job {
  std::string id;
  std::mutex mu;           // guards everything below
  std::mutex redecode_mu;  // serializes stage-3 reruns
  JobState state = JobState::kQueued;
  DecoderOverrides overrides;
  AudioBuffer audio;
  std::string analysis_key;
  std::optional<LyricResult> result;
  std::string error;
  double created = 0.0, updated = 0.0;
  json history = json::array();

  void set_state(JobState s) {
    std::lock_guard<std::mutex> lock(mu);
    state = s;
    updated = now_seconds();
  }

  std::string snapshot() {
    std::lock_guard<std::mutex> lock(mu);
    json j;
    j["id"] = id;
    j["state"] = to_string(state);
    j["config"] = overrides_json(overrides);
    j["created_at"] = created;
    j["updated_at"] = updated;
    j["history"] = history;
    if (state == JobState::kDone && result) j["result"] = json::parse(to_json(*result));
    if (state == JobState::kFailed) j["error"] = error;
    return j.dump();
  }
};

JobService::JobService(std::shared_ptr<Pipeline> pipeline, ServiceConfig cfg)
    : pipeline_(std::move(pipeline)), cfg_(std::move(cfg)) {
  std::random_device rd;
  id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::size_t n = cfg_.workers;
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t i = 0; i < n; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobService::~JobService() {
  {
    std::lock_guard<std::mutex> lock(queue_mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& t : workers_) t.join();
}

std::string JobService::new_id() {
  const std::uint64_t n = counter_.fetch_add(1) + 1;
  std::uint64_t x = id_salt_ ^ (n * 0x9E3779B97F4A7C15ull);
  x ^= x >> 31;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%016llx%04llx", static_cast<unsigned long long>(x),
                static_cast<unsigned long long>(n & 0xffff));
  return buf;
}

std::string JobService::create_job(const std::string& audio_bytes, const std::string& config_json) {
  if (audio_bytes.size() > cfg_.max_upload_bytes) throw RequestError(413, "audio exceeds upload limit");
  AudioBuffer audio;
  try {
    audio = decode_wav(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(audio_bytes.data()), audio_bytes.size()));
  } catch (const DataError& e) {
    throw RequestError(400, e.what());
  }
  if (audio.duration_seconds() < 0.5) throw RequestError(400, "audio shorter than 0.5 s");
  const DecoderOverrides overrides = parse_overrides(config_json);
  try {
    DecoderConfig dec = pipeline_->config().decoder;
    ChannelParams ch = pipeline_->models().channel;
    overrides.apply(dec, ch);
  } catch (const ConfigError& e) {
    throw RequestError(400, e.what());
  }

  auto job = std::make_shared<Job>();
  job->id = new_id();
  job->overrides = overrides;
  job->audio = std::move(audio);
  job->created = job->updated = now_seconds();
  {
    std::lock_guard<std::mutex> lock(store_mu_);
    lru_.push_front(job->id);
    jobs_[job->id] = {job, lru_.begin()};
    while (jobs_.size() > cfg_.max_jobs) {
      jobs_.erase(lru_.back());
      lru_.pop_back();
    }
  }
  {
    std::lock_guard<std::mutex> lock(queue_mu_);
    queue_.push_back(job);
  }
  queue_cv_.notify_one();
  return job->id;
}

std::shared_ptr<JobService::Job> JobService::find(const std::string& id) {
  std::lock_guard<std::mutex> lock(store_mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return nullptr;
  lru_.splice(lru_.begin(), lru_, it->second.second);
  return it->second.first;
}

std::size_t JobService::job_count() {
  std::lock_guard<std::mutex> lock(store_mu_);
  return jobs_.size();
}

std::optional<std::string> JobService::get_job(const std::string& id) {
  const auto job = find(id);
  if (!job) return std::nullopt;
  return job->snapshot();
}

void JobService::worker_loop() {
  for (;;) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock<std::mutex> lock(queue_mu_);
      queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job = queue_.front();
      queue_.pop_front();
    }
    run_job(job);
  }
}

void JobService::run_job(const std::shared_ptr<Job>& job) {
  try {
    const auto analysis = pipeline_->analyze(job->audio, [&](Stage s) {
      job->set_state(s == Stage::kSeparating    ? JobState::kSeparating
                     : s == Stage::kRecognizing ? JobState::kRecognizing
                                                : JobState::kDecoding);
    });
    job->set_state(JobState::kDecoding);
    DecoderConfig dec = pipeline_->config().decoder;
    ChannelParams ch = pipeline_->models().channel;
    job->overrides.apply(dec, ch);
    LyricResult result = pipeline_->decode(*analysis, dec, ch);
    std::lock_guard<std::mutex> lock(job->mu);
    job->analysis_key = analysis->key;
    job->result = std::move(result);
    job->audio = AudioBuffer{};
    job->state = JobState::kDone;
    job->updated = now_seconds();
  } catch (const std::exception& e) {
    std::lock_guard<std::mutex> lock(job->mu);
    job->error = e.what();
    job->audio = AudioBuffer{};
    job->state = JobState::kFailed;
    job->updated = now_seconds();
  }
}

std::string JobService::redecode_job(const std::string& id, const std::string& overrides_json_text) {
  const auto job = find(id);
  if (!job) throw RequestError(404, "no such job");
  const DecoderOverrides requested = parse_overrides(overrides_json_text);
  std::lock_guard<std::mutex> serial(job->redecode_mu);
  DecoderOverrides effective;
  std::string key;
  {
    std::lock_guard<std::mutex> lock(job->mu);
    if (job->state != JobState::kDone) {
      throw RequestError(409, "job is " + to_string(job->state) + ", not done");
    }
    effective = merged(job->overrides, requested);
    key = job->analysis_key;
    job->state = JobState::kDecoding;
    job->updated = now_seconds();
  }
  try {
    LyricResult result = pipeline_->redecode(key, effective);
    json top1 = json::array();
    for (const auto& seg : result.segments) {
      top1.push_back(seg.candidates.empty() ? json(nullptr) : json(seg.candidates.front().text));
    }
    std::lock_guard<std::mutex> lock(job->mu);
    job->result = std::move(result);
    job->history.push_back({{"overrides", overrides_json(requested)}, {"top1", top1}});
    job->state = JobState::kDone;
    job->updated = now_seconds();
  } catch (const CacheMiss& e) {
    job->set_state(JobState::kDone);
    throw RequestError(409, e.what());
  } catch (const ConfigError& e) {
    job->set_state(JobState::kDone);
    throw RequestError(400, e.what());
  } catch (...) {
    job->set_state(JobState::kDone);
    throw;
  }
  return job->snapshot();
}

void JobService::mount(httplib::Server& server) {
  server.set_payload_max_length(cfg_.max_upload_bytes + (1u << 20));
  auto send_error = [](httplib::Response& res, int status, const std::string& msg) {
    res.status = status;
    res.set_content(error_body(msg).dump(), "application/json");
  };

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  server.Post("/jobs", [this, send_error](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data() || !req.has_file("audio")) {
      send_error(res, 400, "expected multipart form data with an 'audio' part");
      return;
    }
    const std::string config = req.has_file("config") ? req.get_file_value("config").content : "";
    try {
      const std::string id = create_job(req.get_file_value("audio").content, config);
      res.status = 202;
      res.set_content(json{{"id", id}, {"state", "queued"}}.dump(), "application/json");
    } catch (const RequestError& e) {
      send_error(res, e.status(), e.what());
    }
  });

  server.Get(R"(/jobs/([^/]+))", [this, send_error](const httplib::Request& req, httplib::Response& res) {
    const auto snap = get_job(req.matches[1]);
    if (!snap) {
      send_error(res, 404, "no such job");
      return;
    }
    res.set_content(*snap, "application/json");
  });

  server.Post(R"(/jobs/([^/]+)/redecode)",
              [this, send_error](const httplib::Request& req, httplib::Response& res) {
                try {
                  res.set_content(redecode_job(req.matches[1], req.body), "application/json");
                } catch (const RequestError& e) {
                  send_error(res, e.status(), e.what());
                } catch (const std::exception& e) {
                  send_error(res, 500, e.what());
                }
              });

  if (!cfg_.static_dir.empty() && std::filesystem::is_directory(cfg_.static_dir)) {
    server.set_mount_point("/", cfg_.static_dir);
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(
          "<!doctype html><title>imly</title><p>imly service. Submit audio with POST /jobs.</p>",
          "text/html");
    });
  }
}

int serve(JobService& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port)) return 1;
  return 0;
}

}  // namespace imly
