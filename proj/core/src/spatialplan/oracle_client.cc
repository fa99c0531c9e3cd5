// Copyright 2026 The vidplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vidplan/spatialplan/oracle_client.h"

#include <cstdio>
#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "vidplan/common/error.h"

namespace vidplan {

using nlohmann::json;

HttpOracleConfig HttpOracleConfig::FromEnvironment() {
  HttpOracleConfig cfg;
  const char* endpoint = std::getenv("VIDPLAN_ORACLE_ENDPOINT");
  const char* model = std::getenv("VIDPLAN_ORACLE_MODEL");
  const char* timeout = std::getenv("VIDPLAN_ORACLE_TIMEOUT");
  if (!endpoint || !*endpoint) throw ConfigError("VIDPLAN_ORACLE_ENDPOINT not set");
  if (!model || !*model) throw ConfigError("VIDPLAN_ORACLE_MODEL not set");
  cfg.endpoint = endpoint;
  cfg.model = model;
  if (timeout && *timeout) {
    char* end = nullptr;
    cfg.timeout_seconds = std::strtod(timeout, &end);
    if (end == timeout || !(cfg.timeout_seconds > 0)) {
      throw ConfigError("VIDPLAN_ORACLE_TIMEOUT must be a positive number");
    }
  }
  return cfg;
}

HttpPlanOracleClient::HttpPlanOracleClient(HttpOracleConfig cfg)
    : cfg_(std::move(cfg)) {
  const auto scheme_end = cfg_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("oracle endpoint needs a scheme: " + cfg_.endpoint);
  }
  const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
  host_ = cfg_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
  if (cfg_.model.empty()) throw ConfigError("oracle model name is empty");
}

std::string HttpPlanOracleClient::Complete(
    const std::string& prompt, const std::vector<std::string>& images) {
  std::lock_guard<std::mutex> lock(mu_);
  json body = {{"prompt", prompt}, {"model", cfg_.model}};
  if (!images.empty()) body["images"] = images;

  httplib::Client client(host_);
  const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
  const auto usecs =
      static_cast<time_t>((cfg_.timeout_seconds - secs) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw TransportError("oracle request failed: " +
                         httplib::to_string(res.error()));
  }
  if (res->status >= 500) {
    throw TransportError("oracle returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw RemoteError("oracle returned HTTP " + std::to_string(res->status));
  }
  const auto parsed = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_object() && parsed.contains("text") && parsed["text"].is_string()) {
    return parsed["text"].get<std::string>();
  }
  return res->body;
}

std::string BuildPlanPrompt(const Vec3& delta_p, TaskId task) {
  char offset[128];
  std::snprintf(offset, sizeof(offset), "[%.3f, %.3f, %.3f]", delta_p.x(),
                delta_p.y(), delta_p.z());
  std::string p;
  p += "You are a robot manipulation planner.\n";
  p += "Task: " + std::string(TaskName(task)) + "\n";
  p += "Relative offset from end effector to object (meters): ";
  p += offset;
  p += "\n";
  p += "Direction semantics: x: right-/left+, y: up+/down-, z: forward-/back+.\n";
  p += "Allowed actions: move, push, grasp, release, press, turn, place.\n";
  p += "Each line is '<n>. <action> [dx, dy, dz] [distance]' where each of "
       "dx, dy, dz is -1, 0 or 1 and distance is a positive float in meters "
       "with two decimals. Terminal actions use [0, 0, 0] [0.00] and come "
       "last.\n";
  p += "Respond with the plan block only, for example:\n";
  p += "Plan:\n1. move [-1, 0, 0] [0.19]\n2. move [0, 0, -1] [0.21]\n"
       "3. push [0, 0, 0] [0.00]\n";
  return p;
}

std::string CompleteWithRetry(PlanOracleClient& client,
                              const std::string& prompt,
                              const std::vector<std::string>& images,
                              int retries) {
  std::string last_error;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    try {
      return client.Complete(prompt, images);
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw RemoteError("oracle unreachable after " + std::to_string(retries + 1) +
                    " attempts: " + last_error);
}

PlanTable VlmGeneratePlan(PlanOracleClient& client, const Vec3& delta_p,
                          TaskId task, int retries) {
  if (!delta_p.allFinite()) throw ValidationError("non-finite offset");
  const std::string reply =
      CompleteWithRetry(client, BuildPlanPrompt(delta_p, task), {}, retries);
  try {
    return ParsePlan(reply);
  } catch (const Error& e) {
    throw ValidationError(std::string("unparseable oracle reply: ") + e.what(),
                          reply);
  }
}

}  // namespace vidplan
