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

#include <thread>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

// Eigen must precede httplib.h, whose resolver headers define `_res`.
#include "vidplan/common/error.h"
#include "vidplan/spatialplan/oracle_client.h"

#include "httplib.h"
#include "json.hpp"

namespace vidplan {
namespace {

using ::testing::_;
using ::testing::HasSubstr;
using ::testing::Return;
using ::testing::Throw;

constexpr char kListing[] =
    "Plan:\n1. move [-1, 0, 0] [0.19]\n2. move [0, 0, -1] [0.21]\n"
    "3. push [0, 0, 0] [0.00]";

class MockClient : public PlanOracleClient {
 public:
  using PlanOracleClient::Complete;
  MOCK_METHOD(std::string, Complete,
              (const std::string&, const std::vector<std::string>&), (override));
};

TEST(VlmPlanTest, ParsesListingReply) {
  MockClient client;
  EXPECT_CALL(client, Complete(HasSubstr("x: right-/left+"), _))
      .WillOnce(Return(kListing));
  const auto plan = VlmGeneratePlan(client, Vec3(-0.19, 0, -0.21), TaskId::kPush);
  EXPECT_EQ(plan.subgoals.size(), 3u);
  EXPECT_EQ(SerializePlan(plan), kListing);
}

TEST(VlmPlanTest, ProseReplyIsValidationErrorWithRaw) {
  MockClient client;
  EXPECT_CALL(client, Complete(_, _)).WillOnce(Return("I think you should move left"));
  try {
    VlmGeneratePlan(client, Vec3::Zero(), TaskId::kReach);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.raw(), "I think you should move left");
  }
}

TEST(VlmPlanTest, RetriesTransportFailures) {
  MockClient client;
  EXPECT_CALL(client, Complete(_, _))
      .WillOnce(Throw(TransportError("down")))
      .WillOnce(Throw(TransportError("down")))
      .WillOnce(Return(kListing));
  EXPECT_NO_THROW(VlmGeneratePlan(client, Vec3::Zero(), TaskId::kPush));
}

TEST(VlmPlanTest, GivesUpAfterRetryBudget) {
  MockClient client;
  EXPECT_CALL(client, Complete(_, _))
      .Times(kOracleRetries + 1)
      .WillRepeatedly(Throw(TransportError("down")));
  EXPECT_THROW(VlmGeneratePlan(client, Vec3::Zero(), TaskId::kPush), RemoteError);
}

TEST(HttpClientTest, PostsPromptAndModel) {
  httplib::Server server;
  nlohmann::json seen;
  server.Post("/v1/plan", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    res.set_content(nlohmann::json{{"text", kListing}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpPlanOracleClient client(
      {"http://127.0.0.1:" + std::to_string(port) + "/v1/plan", "test-model", 5.0});
  const auto plan = VlmGeneratePlan(client, Vec3(-0.19, 0, -0.21), TaskId::kPush);
  server.stop();
  t.join();
  EXPECT_EQ(SerializePlan(plan), kListing);
  EXPECT_EQ(seen["model"], "test-model");
  EXPECT_THAT(seen["prompt"].get<std::string>(), HasSubstr("Task: push"));
}

TEST(HttpClientTest, UnreachableEndpointIsRemoteError) {
  HttpPlanOracleClient client({"http://127.0.0.1:1/plan", "m", 0.2});
  EXPECT_THROW(VlmGeneratePlan(client, Vec3::Zero(), TaskId::kPush), RemoteError);
}

TEST(HttpClientTest, ConfigValidation) {
  EXPECT_THROW(HttpPlanOracleClient({"127.0.0.1/plan", "m", 1.0}), ConfigError);
  unsetenv("VIDPLAN_ORACLE_ENDPOINT");
  EXPECT_THROW(HttpOracleConfig::FromEnvironment(), ConfigError);
  setenv("VIDPLAN_ORACLE_ENDPOINT", "http://localhost:9/x", 1);
  setenv("VIDPLAN_ORACLE_MODEL", "m", 1);
  setenv("VIDPLAN_ORACLE_TIMEOUT", "2.5", 1);
  const auto cfg = HttpOracleConfig::FromEnvironment();
  EXPECT_DOUBLE_EQ(cfg.timeout_seconds, 2.5);
}

}  // namespace
}  // namespace vidplan
