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

#include <cstddef>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "erasekit/service/jobs.hpp"
#include "erasekit/service/segmenter.hpp"

namespace erasekit::service {

// JSON API used by the mask editor:
//   POST /v1/erase        {image_b64, mask_rle, config?} -> 202 {job_id}
//   GET  /v1/jobs/{id}    job record, plus result_b64 once done
//   GET  /v1/jobs         all job records
//   GET  /v1/segments?image=<base64 PNG>   panoptic JSON (POST with
//                         {image_b64} is accepted for large images)
//   GET  /v1/healthz
// Errors are {"error": {"code", "detail"}} with a matching HTTP status.
class HttpApi {
 public:
  struct Response {
    int status = 200;
    nlohmann::json body;
  };

  HttpApi(JobService& jobs, const SegmenterClient& segmenter);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Transport-free dispatch; the socket server routes through this.
  Response handle(const std::string& method, const std::string& path,
                  const std::string& body,
                  const std::multimap<std::string, std::string>& query = {});

  // Binds a listening socket; port 0 picks a free one. Returns the port, or
  // -1 on failure.
  int bind(const std::string& host, int port);
  // Serves until stop(); requires a successful bind().
  void listen();
  void stop();

 private:
  struct Server;
  JobService& jobs_;
  const SegmenterClient& segmenter_;
  std::unique_ptr<Server> server_;
};

int http_status(ErrorCode code);

}  // namespace erasekit::service
