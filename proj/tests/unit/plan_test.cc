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

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "vidplan/common/error.h"
#include "vidplan/common/rng.h"
#include "vidplan/spatialplan/plan.h"

namespace vidplan {
namespace {

constexpr char kListing[] =
    "Plan:\n1. move [-1, 0, 0] [0.19]\n2. move [0, 0, -1] [0.21]\n"
    "3. push [0, 0, 0] [0.00]";

PlanTable ListingTable() {
  return PlanTable{{{ActionType::kMove, {-1, 0, 0}, 0.19},
                    {ActionType::kMove, {0, 0, -1}, 0.21},
                    {ActionType::kPush, {0, 0, 0}, 0.0}}};
}

// Random valid plan with distances on the centimetre grid (the grammar's
// canonical precision).
PlanTable RandomPlan(Rng& rng) {
  PlanTable p;
  const bool terminal = rng.Bernoulli(0.7);
  const int moves = static_cast<int>(rng.UniformInt(terminal ? 0 : 1,
                                                    kMaxSubgoals - terminal));
  for (int i = 0; i < moves; ++i) {
    Subgoal g;
    g.action = rng.Bernoulli(0.1) ? ActionType::kTurn : ActionType::kMove;
    do {
      for (int& c : g.direction) c = static_cast<int>(rng.UniformInt(-1, 1));
    } while (g.direction == Direction{0, 0, 0});
    g.distance = static_cast<double>(rng.UniformInt(0, 150)) / 100.0;
    if (g.action == ActionType::kMove && g.distance == 0.0) g.distance = 0.01;
    p.subgoals.push_back(g);
  }
  if (terminal) {
    static constexpr ActionType kTerminals[] = {
        ActionType::kPush, ActionType::kGrasp, ActionType::kRelease,
        ActionType::kPress, ActionType::kPlace};
    p.subgoals.push_back({kTerminals[rng.UniformInt(0, 4)], {0, 0, 0}, 0.0});
  }
  return p;
}

TEST(OffsetTest, ComponentwiseDifference) {
  EXPECT_EQ(ComputeOffset(Vec3(0, 0, 0), Vec3(1, 2, 3)), Vec3(1, 2, 3));
  EXPECT_EQ(ComputeOffset(Vec3(0.4, 0.2, 0.1), Vec3(0.4, 0.2, 0.1)), Vec3::Zero());
  const Vec3 d = ComputeOffset(Vec3(0.5, 0.1, 0.9), Vec3(0.2, 0.1, 0.3));
  EXPECT_NEAR((d - Vec3(-0.3, 0.0, -0.6)).norm(), 0.0, 1e-15);
  EXPECT_THROW(ComputeOffset(Vec3(NAN, 0, 0), Vec3::Zero()), ValidationError);
}

TEST(GeneratePlanTest, AxisDecompositionMatchesListing) {
  EXPECT_EQ(GeneratePlan(Vec3(-0.19, 0, -0.21), TaskId::kPush), ListingTable());
  EXPECT_EQ(SerializePlan(GeneratePlan(Vec3(-0.19, 0, -0.21), "push")), kListing);
}

TEST(GeneratePlanTest, TerminalOnlyCases) {
  EXPECT_EQ(GeneratePlan(Vec3::Zero(), TaskId::kPush),
            (PlanTable{{{ActionType::kPush, {0, 0, 0}, 0.0}}}));
  EXPECT_EQ(GeneratePlan(Vec3(0.004, 0, 0), TaskId::kReach),
            (PlanTable{{{ActionType::kPress, {0, 0, 0}, 0.0}}}));
  EXPECT_EQ(GeneratePlan(Vec3::Zero(), TaskId::kPickPlace).subgoals.back().action,
            ActionType::kGrasp);
  EXPECT_THROW(GeneratePlan(Vec3::Zero(), "fly"), ConfigError);
}

TEST(GeneratePlanTest, RefineDelegatesToCurrentGeometry) {
  const auto stale = ListingTable();
  const auto current = MakeSpatialState(Vec3(0.3, 0.5, 0.5), Vec3(0.4, 0.5, 0.5));
  const auto refined = RefinePlan(stale, current, TaskId::kPush);
  EXPECT_EQ(refined, (PlanTable{{{ActionType::kMove, {1, 0, 0}, 0.1},
                                 {ActionType::kPush, {0, 0, 0}, 0.0}}}));
  EXPECT_EQ(refined, GeneratePlan(current.delta_p, TaskId::kPush));
}

TEST(GeneratePlanTest, OracleSoundnessOverWorkspace) {
  Rng rng(17);
  const double bound = std::sqrt(3.0) * (kAxisEpsilon + 0.005);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 ee(rng.Uniform(), rng.Uniform(), rng.Uniform());
    const Vec3 obj(rng.Uniform(), rng.Uniform(), rng.Uniform());
    const TaskId task = kAllTasks[rng.UniformInt(0, 2)];
    const auto plan = GeneratePlan(ComputeOffset(ee, obj), task);
    ASSERT_NO_THROW(ValidatePlan(plan));
    ASSERT_LE(plan.subgoals.size(), static_cast<size_t>(kMaxSubgoals));
    const Vec3 landed = ee + PlanDisplacement(plan);
    ASSERT_LE((landed - obj).norm(), bound + 1e-12);
    ASSERT_EQ(plan, GeneratePlan(ComputeOffset(ee, obj), task));
  }
}

TEST(ParsePlanTest, ListingParsesExactly) {
  EXPECT_EQ(ParsePlan(kListing), ListingTable());
  EXPECT_EQ(SerializePlan(ParsePlan(kListing)), kListing);
}

TEST(ParsePlanTest, WhitespaceTolerantAndHeaderOptional) {
  EXPECT_EQ(ParsePlan("  1.move[-1,0,0][0.19]\n\n2 .  move [ 0 , 0 , -1 ] [ .21 ]  \r\n"
                      "3. push [0, 0, 0] [0]\n"),
            ListingTable());
}

TEST(ParsePlanTest, Errors) {
  EXPECT_THROW(ParsePlan("1. move [2, 0, 0] [0.10]"), RangeError);
  EXPECT_THROW(ParsePlan("1. move [1, 0, 0] [-0.10]"), RangeError);
  EXPECT_THROW(ParsePlan(""), ParseError);
  EXPECT_THROW(ParsePlan("I think you should move left"), ParseError);
  EXPECT_THROW(ParsePlan("1. fly [1, 0, 0] [0.10]"), ParseError);
  try {
    ParsePlan("Plan:\n1. move [1, 0, 0] [0.10]\n3. push [0, 0, 0] [0.00]");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  // terminal in the middle
  EXPECT_THROW(ParsePlan("1. push [0, 0, 0] [0.00]\n2. move [1, 0, 0] [0.10]"),
               ValidationError);
  EXPECT_THROW(ParsePlan("1. move [0, 0, 0] [0.10]"), RangeError);
}

TEST(SerializeTest, MinimalPlan) {
  EXPECT_EQ(SerializePlan(PlanTable{{{ActionType::kPush, {0, 0, 0}, 0.0}}}),
            "Plan:\n1. push [0, 0, 0] [0.00]");
}

TEST(SerializeTest, RandomRoundTrip) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const PlanTable p = RandomPlan(rng);
    ASSERT_NO_THROW(ValidatePlan(p));
    const std::string text = SerializePlan(p);
    ASSERT_EQ(ParsePlan(text), p) << text;
    ASSERT_EQ(SerializePlan(ParsePlan(text)), text);
  }
}

TEST(SerializeTest, InjectiveOnSmallPlanSpace) {
  // all 1- and 2-subgoal plans over every action, direction and distances
  // {0.00, 0.05, 0.10}
  std::vector<Subgoal> singles;
  for (int a = 0; a < kNumActionTypes; ++a) {
    for (int code = 0; code < 27; ++code) {
      const Direction d{code / 9 - 1, code / 3 % 3 - 1, code % 3 - 1};
      for (double dist : {0.0, 0.05, 0.10}) singles.push_back({ActionType(a), d, dist});
    }
  }
  auto valid = [](const PlanTable& p) {
    try {
      ValidatePlan(p);
      return true;
    } catch (const Error&) {
      return false;
    }
  };
  std::set<std::string> seen;
  size_t count = 0;
  for (const auto& g : singles) {
    PlanTable p{{g}};
    if (!valid(p)) continue;
    ++count;
    seen.insert(SerializePlan(p));
    for (const auto& h : singles) {
      PlanTable q{{g, h}};
      if (!valid(q)) continue;
      ++count;
      seen.insert(SerializePlan(q));
    }
  }
  EXPECT_GT(count, 10000u);
  EXPECT_EQ(seen.size(), count);
}

TEST(VocabularyTest, SevenSymbols) {
  for (int i = 0; i < kNumActionTypes; ++i) {
    EXPECT_EQ(ParseActionType(ActionName(ActionType(i))), ActionType(i));
  }
  EXPECT_THROW(ParseActionType("open"), VocabularyError);
  EXPECT_FALSE(IsTerminal(ActionType::kMove));
  EXPECT_FALSE(IsTerminal(ActionType::kTurn));
  EXPECT_TRUE(IsTerminal(ActionType::kPlace));
}

}  // namespace
}  // namespace vidplan
