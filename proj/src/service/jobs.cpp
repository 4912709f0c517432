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

#include "erasekit/service/jobs.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "erasekit/common/codec.hpp"
#include "erasekit/common/error.hpp"

namespace erasekit::service {
namespace {

using nlohmann::json;

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string job_id(std::uint64_t sequence) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "job-%06llu", static_cast<unsigned long long>(sequence));
  return buf;
}

}  // namespace

std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kRunning: return "running";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "unknown";
}

JobStatus job_status_from_string(std::string_view text) {
  if (text == "queued") return JobStatus::kQueued;
  if (text == "running") return JobStatus::kRunning;
  if (text == "done") return JobStatus::kDone;
  if (text == "failed") return JobStatus::kFailed;
  fail(ErrorCode::kInvalidArgument, "unknown job status " + std::string(text));
}

json record_to_json(const JobRecord& r) {
  json j{{"id", r.id},
         {"status", to_string(r.status)},
         {"sequence", r.sequence},
         {"completion", r.completion},
         {"config", r.config},
         {"config_hash", r.submitted_config_hash},
         {"completed_config_hash", r.completed_config_hash},
         {"height", r.height},
         {"width", r.width},
         {"stage", r.stage},
         {"timings",
          {{"submitted_ms", r.submitted_ms},
           {"started_ms", r.started_ms},
           {"finished_ms", r.finished_ms}}}};
  if (r.error) {
    j["error"] = {{"stage", r.error->stage}, {"code", r.error->code}, {"detail", r.error->detail}};
  } else {
    j["error"] = nullptr;
  }
  return j;
}

JobRecord record_from_json(const json& j) {
  JobRecord r;
  r.id = j.at("id").get<std::string>();
  r.status = job_status_from_string(j.at("status").get<std::string>());
  r.sequence = j.at("sequence").get<std::uint64_t>();
  r.completion = j.value("completion", std::uint64_t{0});
  r.config = j.at("config");
  r.submitted_config_hash = j.at("config_hash").get<std::string>();
  r.completed_config_hash = j.value("completed_config_hash", std::string());
  r.height = j.at("height").get<int>();
  r.width = j.at("width").get<int>();
  r.stage = j.value("stage", std::string());
  const auto& t = j.at("timings");
  r.submitted_ms = t.value("submitted_ms", std::int64_t{0});
  r.started_ms = t.value("started_ms", std::int64_t{0});
  r.finished_ms = t.value("finished_ms", std::int64_t{0});
  if (j.contains("error") && !j.at("error").is_null()) {
    const auto& e = j.at("error");
    r.error = JobError{e.at("stage").get<std::string>(), e.at("code").get<std::string>(),
                       e.at("detail").get<std::string>()};
  }
  return r;
}

JobStore::JobStore(std::filesystem::path dir, std::size_t compact_after)
    : dir_(std::move(dir)), compact_after_(compact_after) {
  try {
    std::filesystem::create_directories(dir_ / "blobs");
  } catch (const std::exception& e) {
    fail(ErrorCode::kIoFailure, e.what());
  }
  if (std::filesystem::exists(dir_ / "snapshot.json")) {
    const auto bytes = read_file(dir_ / "snapshot.json");
    const json snap = json::parse(bytes.begin(), bytes.end());
    next_sequence_ = snap.at("next_sequence").get<std::uint64_t>();
    next_completion_ = snap.at("next_completion").get<std::uint64_t>();
    for (const auto& r : snap.at("jobs")) {
      auto rec = record_from_json(r);
      jobs_[rec.id] = std::move(rec);
    }
  }
  if (std::ifstream in(dir_ / "jobs.log"); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json event = json::parse(line, nullptr, false);
      if (event.is_discarded()) break;  // torn final write
      apply(event);
    }
  }
  log_.open(dir_ / "jobs.log", std::ios::app);
  if (!log_) fail(ErrorCode::kIoFailure, "cannot open job log in " + dir_.string());

  std::vector<std::string> interrupted;
  for (const auto& [id, r] : jobs_) {
    if (r.status == JobStatus::kRunning) interrupted.push_back(id);
  }
  for (const auto& id : interrupted) {
    const std::string stage = jobs_.at(id).stage.empty() ? std::string(kStageSegment)
                                                         : jobs_.at(id).stage;
    mark_failed(id, {stage, std::string(to_string(ErrorCode::kRestartInterrupted)),
                     "service restarted while the job was running"});
  }
}

void JobStore::apply(const json& ev) {
  const std::string kind = ev.at("e").get<std::string>();
  const std::string id = ev.at("id").get<std::string>();
  if (kind == "submit") {
    JobRecord r;
    r.id = id;
    r.sequence = ev.at("seq").get<std::uint64_t>();
    r.config = ev.at("config");
    r.submitted_config_hash = ev.at("hash").get<std::string>();
    r.height = ev.at("h").get<int>();
    r.width = ev.at("w").get<int>();
    r.submitted_ms = ev.at("t").get<std::int64_t>();
    next_sequence_ = std::max(next_sequence_, r.sequence + 1);
    jobs_[id] = std::move(r);
    return;
  }
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return;
  JobRecord& r = it->second;
  if (kind == "start") {
    r.status = JobStatus::kRunning;
    r.started_ms = ev.at("t").get<std::int64_t>();
  } else if (kind == "stage") {
    r.stage = ev.at("stage").get<std::string>();
  } else if (kind == "done" || kind == "fail") {
    r.status = kind == "done" ? JobStatus::kDone : JobStatus::kFailed;
    r.finished_ms = ev.at("t").get<std::int64_t>();
    r.completion = ev.at("completion").get<std::uint64_t>();
    next_completion_ = std::max(next_completion_, r.completion + 1);
    if (kind == "done") {
      r.completed_config_hash = ev.at("hash").get<std::string>();
    } else {
      r.error = JobError{ev.at("stage").get<std::string>(), ev.at("code").get<std::string>(),
                         ev.at("detail").get<std::string>()};
    }
  }
}

void JobStore::append(const json& event) {
  apply(event);
  log_ << event.dump() << '\n';
  log_.flush();
  if (!log_) fail(ErrorCode::kIoFailure, "job log write failed");
  if (++pending_events_ >= compact_after_) {
    json jobs = json::array();
    for (const auto& [id, r] : jobs_) jobs.push_back(record_to_json(r));
    const json snap{{"format_version", 1},
                    {"next_sequence", next_sequence_},
                    {"next_completion", next_completion_},
                    {"jobs", jobs}};
    const auto tmp = dir_ / "snapshot.json.tmp";
    write_text(tmp, snap.dump());
    std::filesystem::rename(tmp, dir_ / "snapshot.json");
    log_.close();
    log_.open(dir_ / "jobs.log", std::ios::trunc);
    pending_events_ = 0;
  }
}

void JobStore::compact() {
  std::unique_lock lock(mu_);
  const auto saved = compact_after_;
  compact_after_ = 0;
  pending_events_ = 0;
  json jobs = json::array();
  for (const auto& [id, r] : jobs_) jobs.push_back(record_to_json(r));
  const json snap{{"format_version", 1},
                  {"next_sequence", next_sequence_},
                  {"next_completion", next_completion_},
                  {"jobs", jobs}};
  const auto tmp = dir_ / "snapshot.json.tmp";
  write_text(tmp, snap.dump());
  std::filesystem::rename(tmp, dir_ / "snapshot.json");
  log_.close();
  log_.open(dir_ / "jobs.log", std::ios::trunc);
  compact_after_ = saved;
}

std::filesystem::path JobStore::blob(const std::string& id, const char* name) const {
  return dir_ / "blobs" / (id + "." + name + ".png");
}

JobRecord& JobStore::require(const std::string& id) {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) fail(ErrorCode::kNotFound, "no job " + id);
  return it->second;
}

JobRecord JobStore::create(const Image& image, const Mask& mask, const json& config,
                           const std::string& config_hash) {
  std::unique_lock lock(mu_);
  const std::uint64_t seq = next_sequence_;
  const std::string id = job_id(seq);
  write_png(blob(id, "input"), image);
  write_png(blob(id, "mask"), mask);
  append({{"e", "submit"}, {"id", id}, {"seq", seq}, {"config", config},
          {"hash", config_hash}, {"h", image.height()}, {"w", image.width()},
          {"t", now_ms()}});
  return jobs_.at(id);
}

void JobStore::mark_running(const std::string& id) {
  std::unique_lock lock(mu_);
  if (require(id).status != JobStatus::kQueued) {
    fail(ErrorCode::kInvalidArgument, "job " + id + " is not queued");
  }
  append({{"e", "start"}, {"id", id}, {"t", now_ms()}});
}

void JobStore::mark_stage(const std::string& id, std::string_view stage) {
  std::unique_lock lock(mu_);
  require(id);
  append({{"e", "stage"}, {"id", id}, {"stage", stage}});
}

void JobStore::mark_done(const std::string& id, const Image& result,
                         const std::string& config_hash) {
  std::unique_lock lock(mu_);
  const JobRecord& r = require(id);
  if (r.status != JobStatus::kRunning) {
    fail(ErrorCode::kInvalidArgument, "job " + id + " is not running");
  }
  if (result.height() != r.height || result.width() != r.width) {
    fail(ErrorCode::kShapeMismatch, "result extent differs from the input");
  }
  write_png(blob(id, "result"), result);
  append({{"e", "done"}, {"id", id}, {"t", now_ms()}, {"hash", config_hash},
          {"completion", next_completion_}});
}

void JobStore::mark_failed(const std::string& id, const JobError& error) {
  std::unique_lock lock(mu_);
  const JobRecord& r = require(id);
  if (r.status == JobStatus::kDone || r.status == JobStatus::kFailed) {
    fail(ErrorCode::kInvalidArgument, "job " + id + " already finished");
  }
  append({{"e", "fail"}, {"id", id}, {"t", now_ms()}, {"stage", error.stage},
          {"code", error.code}, {"detail", error.detail},
          {"completion", next_completion_}});
}

std::optional<JobRecord> JobStore::get(const std::string& id) const {
  std::shared_lock lock(mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

std::vector<JobRecord> JobStore::list() const {
  std::shared_lock lock(mu_);
  std::vector<JobRecord> out;
  for (const auto& [id, r] : jobs_) out.push_back(r);
  std::sort(out.begin(), out.end(),
            [](const JobRecord& a, const JobRecord& b) { return a.sequence < b.sequence; });
  return out;
}

std::vector<std::string> JobStore::queued_ids() const {
  std::vector<std::string> out;
  for (const auto& r : list()) {
    if (r.status == JobStatus::kQueued) out.push_back(r.id);
  }
  return out;
}

Image JobStore::load_input(const std::string& id) const { return read_png_rgb(blob(id, "input")); }
Mask JobStore::load_mask(const std::string& id) const { return read_png_mask(blob(id, "mask")); }

std::optional<Image> JobStore::load_result(const std::string& id) const {
  const auto r = get(id);
  if (!r || r->status != JobStatus::kDone) return std::nullopt;
  return read_png_rgb(blob(id, "result"));
}

JobService::JobService(JobStore& store, Runner runner, std::size_t capacity)
    : store_(store), runner_(std::move(runner)), capacity_(capacity) {
  for (auto& id : store_.queued_ids()) queue_.push_back(std::move(id));
}

JobService::~JobService() { stop(); }

void JobService::start() {
  std::lock_guard lock(mu_);
  if (worker_.joinable()) return;
  stopping_ = false;
  worker_ = std::thread([this] { loop(); });
}

void JobService::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

std::string JobService::submit(const Image& image, const Mask& mask,
                               const EraseConfig& config) {
  config.validate();
  validate_request(image, mask, config);
  std::lock_guard lock(mu_);
  if (queue_.size() >= capacity_) {
    fail(ErrorCode::kQueueFull, "queue holds " + std::to_string(queue_.size()) + " jobs");
  }
  const auto rec = store_.create(image, mask, config.to_json(), config.hash());
  queue_.push_back(rec.id);
  cv_.notify_one();
  return rec.id;
}

JobRecord JobService::get(const std::string& id) const {
  auto r = store_.get(id);
  if (!r) fail(ErrorCode::kNotFound, "no job " + id);
  return *r;
}

std::optional<Image> JobService::result(const std::string& id) const {
  get(id);
  return store_.load_result(id);
}

std::vector<JobRecord> JobService::list() const { return store_.list(); }

std::size_t JobService::queued() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

bool JobService::running() const {
  std::lock_guard lock(mu_);
  return busy_;
}

void JobService::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return (queue_.empty() && !busy_) || stopping_; });
}

void JobService::loop() {
  for (;;) {
    std::string id;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) break;
      id = queue_.front();
      queue_.pop_front();
      busy_ = true;
    }
    try {
      run_one(id);
    } catch (...) {
      // The store could not record the outcome; the job stays running and
      // is failed as interrupted on the next open.
    }
    {
      std::lock_guard lock(mu_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
  idle_cv_.notify_all();
}

void JobService::run_one(const std::string& id) {
  std::string stage(kStageSegment);
  try {
    store_.mark_running(id);
    const JobRecord rec = get(id);
    const EraseConfig config = EraseConfig::from_json(rec.config);
    const Image image = store_.load_input(id);
    const Mask mask = store_.load_mask(id);
    const Image out = runner_(image, mask, config, [&](std::string_view s) {
      stage = std::string(s);
      store_.mark_stage(id, s);
    });
    // The hash is recomputed from the config the job actually ran with.
    store_.mark_done(id, out, config.hash());
  } catch (const StageError& e) {
    store_.mark_failed(id, {e.stage(), std::string(to_string(e.code())), e.detail()});
  } catch (const Error& e) {
    store_.mark_failed(id, {stage, std::string(to_string(e.code())), e.what()});
  } catch (const std::exception& e) {
    store_.mark_failed(id, {stage, "Internal", e.what()});
  }
}

}  // namespace erasekit::service
