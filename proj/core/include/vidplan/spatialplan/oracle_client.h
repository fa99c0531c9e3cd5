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

// Optional remote language-model planner. The rule-based GeneratePlan is the
// default; this client is a drop-in that produces the same PlanTable type.

#ifndef VIDPLAN_SPATIALPLAN_ORACLE_CLIENT_H_
#define VIDPLAN_SPATIALPLAN_ORACLE_CLIENT_H_

#include <mutex>
#include <string>
#include <vector>

#include "vidplan/spatialplan/plan.h"

namespace vidplan {

inline constexpr int kOracleRetries = 3;

// Text-in/text-out completion service. Implementations throw TransportError
// for retryable connection failures and RemoteError for everything else.
class PlanOracleClient {
 public:
  virtual ~PlanOracleClient() = default;
  // images: optional base64-encoded attachments (used by remote validators).
  virtual std::string Complete(const std::string& prompt,
                               const std::vector<std::string>& images) = 0;
  std::string Complete(const std::string& prompt) { return Complete(prompt, {}); }
};

struct HttpOracleConfig {
  std::string endpoint;  // http://host[:port]/path
  std::string model;
  double timeout_seconds = 30.0;

  // VIDPLAN_ORACLE_ENDPOINT, VIDPLAN_ORACLE_MODEL, VIDPLAN_ORACLE_TIMEOUT.
  // Throws ConfigError when the endpoint or model is missing.
  static HttpOracleConfig FromEnvironment();
};

// POSTs {"prompt", "model"[, "images"]} as JSON and expects the reply text
// either as the raw body or as a JSON object with a "text" field.
class HttpPlanOracleClient : public PlanOracleClient {
 public:
  explicit HttpPlanOracleClient(HttpOracleConfig cfg);
  using PlanOracleClient::Complete;
  std::string Complete(const std::string& prompt,
                       const std::vector<std::string>& images) override;

 private:
  HttpOracleConfig cfg_;
  std::string host_;  // scheme://host:port
  std::string path_;
  std::mutex mu_;  // one request in flight per client
};

std::string BuildPlanPrompt(const Vec3& delta_p, TaskId task);

// Calls the client, retrying TransportError up to `retries` extra times
// (then RemoteError), and returns the raw reply.
std::string CompleteWithRetry(PlanOracleClient& client,
                              const std::string& prompt,
                              const std::vector<std::string>& images = {},
                              int retries = kOracleRetries);

// Unparseable replies raise ValidationError carrying the raw text.
PlanTable VlmGeneratePlan(PlanOracleClient& client, const Vec3& delta_p,
                          TaskId task, int retries = kOracleRetries);

}  // namespace vidplan

#endif  // VIDPLAN_SPATIALPLAN_ORACLE_CLIENT_H_
