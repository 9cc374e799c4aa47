// Copyright 2026 The BUDS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "buds/partition.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "nlohmann/json.hpp"

namespace buds {
namespace {

using ::testing::ElementsAre;
using ::testing::UnorderedElementsAre;

std::vector<std::string> Names(std::size_t g) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < g; ++i) names.push_back("c" + std::to_string(i));
  return names;
}

TEST(PlanBatchesTest, EvenSplit) {
  auto sizes = PlanBatches(11000, 1000);
  ASSERT_TRUE(sizes.ok());
  EXPECT_EQ(sizes->size(), 1000u);
  EXPECT_TRUE(std::all_of(sizes->begin(), sizes->end(),
                          [](std::size_t s) { return s == 11; }));
}

TEST(PlanBatchesTest, EarlierBatchesTakeTheRemainder) {
  EXPECT_THAT(*PlanBatches(10, 3), ElementsAre(4, 3, 3));
  EXPECT_THAT(*PlanBatches(5, 1), ElementsAre(5));
  EXPECT_THAT(*PlanBatches(4, 4), ElementsAre(1, 1, 1, 1));
}

TEST(PlanBatchesTest, SizesDifferByAtMostOne) {
  for (std::size_t n = 1; n <= 60; ++n) {
    for (std::size_t t = 1; t <= n; ++t) {
      auto sizes = PlanBatches(n, t);
      ASSERT_TRUE(sizes.ok());
      std::size_t total = 0;
      for (std::size_t s : *sizes) total += s;
      EXPECT_EQ(total, n);
      EXPECT_EQ(sizes->front(), (n + t - 1) / t);
      EXPECT_EQ(sizes->back(), n / t);
    }
  }
}

TEST(PlanBatchesTest, Errors) {
  EXPECT_FALSE(PlanBatches(10, 0).ok());
  EXPECT_FALSE(PlanBatches(3, 4).ok());
  EXPECT_FALSE(PlanBatches(0, 1).ok());
}

TEST(GroupAttributesTest, EvenGroups) {
  Rng rng(1);
  auto groups = GroupAttributes(Names(6), 3, rng);
  ASSERT_TRUE(groups.ok());
  ASSERT_EQ(groups->size(), 3u);
  for (const auto& group : *groups) EXPECT_EQ(group.size(), 2u);

  groups = GroupAttributes(Names(3), 3, rng);
  ASSERT_TRUE(groups.ok());
  for (const auto& group : *groups) EXPECT_EQ(group.size(), 1u);
}

TEST(GroupAttributesTest, RemainderSpreadOverDistinctGroups) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto groups = GroupAttributes(Names(7), 3, rng);
    ASSERT_TRUE(groups.ok());
    std::vector<std::size_t> sizes;
    std::vector<std::string> all;
    for (const auto& group : *groups) {
      sizes.push_back(group.size());
      all.insert(all.end(), group.begin(), group.end());
    }
    EXPECT_THAT(sizes, UnorderedElementsAre(3, 2, 2));
    std::sort(all.begin(), all.end());
    std::vector<std::string> expected = Names(7);
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(all, expected);
  }
}

// Each group should receive the extra channel with probability e/S.
TEST(GroupAttributesTest, ExtraChannelsLandUniformly) {
  constexpr int kTrials = 30000;
  Rng rng(3);
  std::vector<int> big(4, 0);
  for (int trial = 0; trial < kTrials; ++trial) {
    auto groups = GroupAttributes(Names(9), 4, rng);  // e = 1
    for (std::size_t j = 0; j < 4; ++j) {
      if ((*groups)[j].size() == 3) ++big[j];
    }
  }
  const double p = 0.25;
  const double sigma = std::sqrt(kTrials * p * (1 - p));
  for (int count : big) EXPECT_NEAR(count, kTrials * p, 4 * sigma);
}

TEST(GroupAttributesTest, Errors) {
  Rng rng(4);
  EXPECT_FALSE(GroupAttributes(Names(4), 1, rng).ok());
  EXPECT_FALSE(GroupAttributes(Names(4), 0, rng).ok());
  EXPECT_FALSE(GroupAttributes({}, 2, rng).ok());
}

TEST(GroupAttributesTest, FewerChannelsThanShufflersLeavesEmptyGroups) {
  Rng rng(5);
  auto groups = GroupAttributes(Names(1), 3, rng);
  ASSERT_TRUE(groups.ok());
  std::vector<std::size_t> sizes;
  for (const auto& group : *groups) sizes.push_back(group.size());
  EXPECT_THAT(sizes, UnorderedElementsAre(1, 0, 0));
}

// Every bijection should appear with probability 1/S!.
void CheckAssignmentUniform(int s, int trials) {
  AttributeGroups groups(s, std::vector<std::string>{"x"});
  std::map<ShufflerAssignment, int> counts;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(DeriveSeed(99, "assignment-uniformity", {static_cast<std::uint64_t>(trial)}));
    auto assignment = AssignShufflers(groups, s, rng);
    ASSERT_TRUE(assignment.ok());
    ShufflerAssignment sorted = *assignment;
    std::sort(sorted.begin(), sorted.end());
    for (int j = 0; j < s; ++j) ASSERT_EQ(sorted[j], j);
    ++counts[*assignment];
  }
  double factorial = 1;
  for (int i = 2; i <= s; ++i) factorial *= i;
  ASSERT_EQ(counts.size(), static_cast<std::size_t>(factorial));
  const double p = 1 / factorial;
  const double sigma = std::sqrt(trials * p * (1 - p));
  for (const auto& [assignment, count] : counts) {
    EXPECT_NEAR(count, trials * p, 3 * sigma);
  }
}

TEST(AssignShufflersTest, UniformOverBijectionsTwo) {
  CheckAssignmentUniform(2, 100000);
}

TEST(AssignShufflersTest, UniformOverBijectionsThree) {
  CheckAssignmentUniform(3, 100000);
}

TEST(AssignShufflersTest, Errors) {
  Rng rng(6);
  EXPECT_FALSE(AssignShufflers(AttributeGroups(2), 1, rng).ok());
  EXPECT_FALSE(AssignShufflers(AttributeGroups(2), 3, rng).ok());
}

TEST(ShufflePlanTest, DeterministicInSeed) {
  auto a = MakeShufflePlan(100, 7, Names(5), 2, 42);
  auto b = MakeShufflePlan(100, 7, Names(5), 2, 42);
  ASSERT_TRUE(a.ok());
  ASSERT_TRUE(b.ok());
  EXPECT_EQ(PlanToJson(*a), PlanToJson(*b));
  EXPECT_EQ(PlanDigest(*a), PlanDigest(*b));
  EXPECT_EQ(a->n1(), 15u);
  EXPECT_EQ(a->remainder, 1u);
  EXPECT_EQ(a->BatchOffset(0), 0u);
  EXPECT_EQ(a->BatchOffset(2), 30u);
  for (std::size_t batch = 0; batch < a->num_batches(); ++batch) {
    EXPECT_EQ(a->AssignmentForBatch(batch), b->AssignmentForBatch(batch));
  }

  // Some seed within a small range must produce a different plan.
  bool differs = false;
  for (std::uint64_t seed = 43; seed < 60 && !differs; ++seed) {
    differs = PlanDigest(*MakeShufflePlan(100, 7, Names(5), 2, seed)) !=
              PlanDigest(*a);
  }
  EXPECT_TRUE(differs);
}

TEST(ShufflePlanTest, JsonRecordsEveryBatchAssignment) {
  auto plan = MakeShufflePlan(10, 3, Names(4), 3, 9);
  ASSERT_TRUE(plan.ok());
  const nlohmann::json json = PlanToJson(*plan);
  EXPECT_EQ(json["n1"], 4);
  EXPECT_EQ(json["t"], 3);
  EXPECT_EQ(json["shuffler_assignments"].size(), 3u);
  EXPECT_EQ(json["remainder_e"], 1);
}

TEST(ShufflePlanTest, PropagatesErrors) {
  EXPECT_FALSE(MakeShufflePlan(10, 11, Names(2), 2, 1).ok());
  EXPECT_FALSE(MakeShufflePlan(10, 2, Names(2), 1, 1).ok());
}

}  // namespace
}  // namespace buds
