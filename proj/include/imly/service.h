// include/imly/service.h

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

#ifndef IMLY_SERVICE_H_
#define IMLY_SERVICE_H_

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "imly/pipeline.h"

namespace httplib {
class Server;
}

namespace imly {

enum class JobState { kQueued, kSeparating, kRecognizing, kDecoding, kDone, kFailed };

std::string to_string(JobState s);

struct ServiceConfig {
  std::size_t workers = 0;  // 0: one per hardware thread
  std::size_t max_jobs = 100;
  std::size_t max_upload_bytes = 50u << 20;
  std::string static_dir;  // served at "/" when it exists
};

class RequestError : public std::runtime_error {
 public:
  RequestError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// Parses a decoder override object: lm_weight, beam_width, word_penalty,
/// n_best, p_sub, p_del, p_ins. Unknown keys or wrong types raise
/// RequestError(400).
DecoderOverrides parse_overrides(const std::string& json_text);

/// In-memory job queue around a shared Pipeline. Jobs run on a fixed worker
/// pool in FIFO order; the store keeps the most recently used max_jobs jobs.
class JobService {
 public:
  JobService(std::shared_ptr<Pipeline> pipeline, ServiceConfig cfg = {});
  ~JobService();

  JobService(const JobService&) = delete;
  JobService& operator=(const JobService&) = delete;

  /// Validates the WAV synchronously and queues the job. Throws
  /// RequestError (400 bad audio or config, 413 too large).
  std::string create_job(const std::string& audio_bytes, const std::string& config_json);

  /// Job snapshot as JSON text, or nullopt for an unknown or evicted id.
  std::optional<std::string> get_job(const std::string& id);

  /// Stage-3 rerun. Throws RequestError 404 (unknown id), 409 (job not done
  /// or its cached analysis evicted) or 400 (bad overrides).
  std::string redecode_job(const std::string& id, const std::string& overrides_json);

  /// Registers every route on `server`.
  void mount(httplib::Server& server);

  std::size_t job_count();

 private:
  struct Job;

  std::shared_ptr<Job> find(const std::string& id);
  void worker_loop();
  void run_job(const std::shared_ptr<Job>& job);
  std::string new_id();

  std::shared_ptr<Pipeline> pipeline_;
  ServiceConfig cfg_;

  std::mutex store_mu_;
  std::map<std::string, std::pair<std::shared_ptr<Job>, std::list<std::string>::iterator>> jobs_;
  std::list<std::string> lru_;  // most recent first

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<std::shared_ptr<Job>> queue_;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
  std::atomic<std::uint64_t> counter_{0};
  std::uint64_t id_salt_;
};

/// Blocking HTTP server on host:port. Returns nonzero if it cannot listen.
int serve(JobService& service, const std::string& host, int port);

}  // namespace imly

#endif  // IMLY_SERVICE_H_
