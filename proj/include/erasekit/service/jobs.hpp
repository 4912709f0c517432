// Copyright 2026 The erasekit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "erasekit/common/array3.hpp"
#include "erasekit/service/pipeline.hpp"

namespace erasekit::service {

enum class JobStatus { kQueued, kRunning, kDone, kFailed };

std::string_view to_string(JobStatus status);
JobStatus job_status_from_string(std::string_view text);

struct JobError {
  std::string stage;
  std::string code;
  std::string detail;
};

struct JobRecord {
  std::string id;
  JobStatus status = JobStatus::kQueued;
  std::uint64_t sequence = 0;    // submission order
  std::uint64_t completion = 0;  // finish order, 0 until done or failed
  nlohmann::json config;
  std::string submitted_config_hash;
  std::string completed_config_hash;
  int height = 0;
  int width = 0;
  std::string stage;  // last stage entered while running
  std::int64_t submitted_ms = 0;
  std::int64_t started_ms = 0;
  std::int64_t finished_ms = 0;
  std::optional<JobError> error;
};

nlohmann::json record_to_json(const JobRecord& record);
JobRecord record_from_json(const nlohmann::json& j);

// Persistent job table: an append-only JSONL event log replayed over the
// last snapshot. After `compact_after` events the table is snapshotted and
// the log truncated. Opening a store fails every job left running with
// RestartInterrupted, tagged with the stage it had reached. One writer at
// a time; readers may run concurrently.
class JobStore {
 public:
  explicit JobStore(std::filesystem::path dir, std::size_t compact_after = 256);

  JobRecord create(const Image& image, const Mask& mask,
                   const nlohmann::json& config, const std::string& config_hash);
  void mark_running(const std::string& id);
  void mark_stage(const std::string& id, std::string_view stage);
  void mark_done(const std::string& id, const Image& result,
                 const std::string& config_hash);
  void mark_failed(const std::string& id, const JobError& error);

  std::optional<JobRecord> get(const std::string& id) const;
  std::vector<JobRecord> list() const;  // submission order
  std::vector<std::string> queued_ids() const;

  Image load_input(const std::string& id) const;
  Mask load_mask(const std::string& id) const;
  std::optional<Image> load_result(const std::string& id) const;

  void compact();
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  void append(const nlohmann::json& event);
  void apply(const nlohmann::json& event);
  std::filesystem::path blob(const std::string& id, const char* name) const;
  JobRecord& require(const std::string& id);

  std::filesystem::path dir_;
  std::size_t compact_after_;
  std::size_t pending_events_ = 0;
  std::uint64_t next_sequence_ = 1;
  std::uint64_t next_completion_ = 1;
  std::map<std::string, JobRecord> jobs_;
  std::ofstream log_;
  mutable std::shared_mutex mu_;
};

// FIFO queue with one worker thread. Jobs still queued in the store when the
// service is created are resumed in submission order.
class JobService {
 public:
  using Runner = std::function<Image(const Image&, const Mask&,
                                     const EraseConfig&, const StageListener&)>;

  JobService(JobStore& store, Runner runner, std::size_t capacity = 64);
  ~JobService();
  JobService(const JobService&) = delete;
  JobService& operator=(const JobService&) = delete;

  void start();
  void stop();

  // Validates the request (kEmptyMask, kOversizeInput, ...) and enqueues it.
  // Throws kQueueFull when `capacity` jobs are already waiting.
  std::string submit(const Image& image, const Mask& mask,
                     const EraseConfig& config);
  JobRecord get(const std::string& id) const;  // kNotFound
  std::optional<Image> result(const std::string& id) const;
  std::vector<JobRecord> list() const;

  std::size_t queued() const;
  bool running() const;
  // Blocks until the queue is empty and the worker is idle.
  void wait_idle();

 private:
  void loop();
  void run_one(const std::string& id);

  JobStore& store_;
  Runner runner_;
  std::size_t capacity_;
  std::deque<std::string> queue_;
  bool busy_ = false;
  bool stopping_ = false;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::thread worker_;
};

}  // namespace erasekit::service
