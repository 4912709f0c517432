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

#include "erasekit/service/http_api.hpp"

#include <httplib.h>

#include <algorithm>

#include "erasekit/common/codec.hpp"
#include "erasekit/common/rle.hpp"

namespace erasekit::service {
namespace {

using nlohmann::json;

constexpr std::size_t kMaxBody = 64u << 20;

HttpApi::Response error_response(ErrorCode code, const std::string& detail) {
  return {http_status(code), {{"error", {{"code", to_string(code)}, {"detail", detail}}}}};
}

Image decode_image(const std::string& b64) {
  try {
    return decode_png_rgb(base64_decode(b64));
  } catch (const Error& e) {
    fail(ErrorCode::kInvalidArgument, std::string("image is not a base64 PNG: ") + e.what());
  }
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kQueueFull: return 503;
    case ErrorCode::kSegmenterUnavailable: return 503;
    case ErrorCode::kOversizeInput: return 413;
    case ErrorCode::kEmptyMask:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidStrength:
    case ErrorCode::kShapeMismatch: return 400;
    default: return 500;
  }
}

struct HttpApi::Server {
  httplib::Server http;
};

HttpApi::HttpApi(JobService& jobs, const SegmenterClient& segmenter)
    : jobs_(jobs), segmenter_(segmenter) {}

HttpApi::~HttpApi() { stop(); }

HttpApi::Response HttpApi::handle(const std::string& method, const std::string& path,
                                  const std::string& body,
                                  const std::multimap<std::string, std::string>& query) {
  try {
    if (method == "GET" && path == "/v1/healthz") {
      return {200, {{"status", "ok"}, {"queued", jobs_.queued()}, {"running", jobs_.running()}}};
    }
    if (method == "POST" && path == "/v1/erase") {
      const json req = json::parse(body, nullptr, false);
      if (req.is_discarded() || !req.is_object()) {
        return error_response(ErrorCode::kInvalidArgument, "body must be a JSON object");
      }
      if (!req.contains("image_b64") || !req.contains("mask_rle")) {
        return error_response(ErrorCode::kInvalidArgument, "image_b64 and mask_rle are required");
      }
      const Image image = decode_image(req.at("image_b64").get<std::string>());
      const Mask mask = rle_decode(rle_from_json(req.at("mask_rle")));
      const EraseConfig config =
          EraseConfig::from_json(req.contains("config") ? req.at("config") : json());
      const std::string id = jobs_.submit(image, mask, config);
      return {202, {{"job_id", id}, {"status", "queued"}}};
    }
    if (method == "GET" && path == "/v1/jobs") {
      json list = json::array();
      for (const auto& r : jobs_.list()) list.push_back(record_to_json(r));
      return {200, {{"jobs", list}}};
    }
    if (method == "GET" && path.rfind("/v1/jobs/", 0) == 0) {
      const std::string id = path.substr(9);
      const JobRecord r = jobs_.get(id);
      json out = record_to_json(r);
      if (r.status == JobStatus::kDone) {
        if (const auto img = jobs_.result(id)) out["result_b64"] = base64_encode(encode_png(*img));
      }
      return {200, out};
    }
    if (path == "/v1/segments" && (method == "GET" || method == "POST")) {
      std::string b64;
      if (method == "GET") {
        const auto it = query.find("image");
        if (it == query.end()) {
          return error_response(ErrorCode::kInvalidArgument, "missing image parameter");
        }
        b64 = it->second;
        // Query decoding turns '+' into ' '.
        std::replace(b64.begin(), b64.end(), ' ', '+');
      } else {
        const json req = json::parse(body, nullptr, false);
        if (req.is_discarded() || !req.contains("image_b64")) {
          return error_response(ErrorCode::kInvalidArgument, "image_b64 is required");
        }
        b64 = req.at("image_b64").get<std::string>();
      }
      const Image image = decode_image(b64);
      Panoptic p;
      try {
        p = segmenter_.panoptic(image);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kSegmenterUnavailable) throw;
        fail(ErrorCode::kSegmenterUnavailable, e.what());
      } catch (const std::exception& e) {
        fail(ErrorCode::kSegmenterUnavailable, e.what());
      }
      return {200, panoptic_to_json(p)};
    }
    return error_response(ErrorCode::kNotFound, method + " " + path);
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  } catch (const json::exception& e) {
    return error_response(ErrorCode::kInvalidArgument, e.what());
  } catch (const std::exception& e) {
    return {500, {{"error", {{"code", "Internal"}, {"detail", e.what()}}}}};
  }
}

int HttpApi::bind(const std::string& host, int port) {
  server_ = std::make_unique<Server>();
  auto& http = server_->http;
  http.set_payload_max_length(kMaxBody);
  http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                            {"Access-Control-Allow-Headers", "Content-Type"},
                            {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  const auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = handle(req.method, req.path, req.body, req.params);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  http.Get(R"(/v1/.*)", route);
  http.Post(R"(/v1/.*)", route);
  http.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  if (port == 0) return http.bind_to_any_port(host);
  return http.bind_to_port(host, port) ? port : -1;
}

void HttpApi::listen() {
  if (!server_) fail(ErrorCode::kInvalidArgument, "bind() must succeed before listen()");
  server_->http.listen_after_bind();
}

void HttpApi::stop() {
  if (server_) server_->http.stop();
}

}  // namespace erasekit::service
