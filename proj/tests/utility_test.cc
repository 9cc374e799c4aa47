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

#include "buds/utility.h"

#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "nlohmann/json.hpp"
#include "test_util.h"

namespace buds {
namespace {

using ::buds::testing::PeopleDataset;

constexpr char kPeopleQuery[] = "count where age < 40 and weight > 60";

// The published after-shuffle layout of the six-row people table: Name and
// Age move on their own while Height and Weight stay fused.
ShuffledDataset PeopleAfterShuffle() {
  const EncodedDataset encoded = *OneHotEncode(PeopleDataset());
  const TiedDataset tied = *TieAttributes(encoded, {"Height", "Weight"});
  const AttributeGroups groups = {{"Name"}, {"Age"}, {"Height:Weight"}};
  return *ApplyGroupPermutations(tied, groups,
                                 {{2, 0, 1, 4, 3, 5},
                                  {1, 0, 2, 5, 4, 3},
                                  {0, 1, 2, 3, 5, 4}});
}

TEST(CountQueryTest, PeopleBeforeShuffle) {
  const EncodedDataset encoded = *OneHotEncode(PeopleDataset());
  auto count = CountQuery(encoded, *ParseQuery(kPeopleQuery));
  ASSERT_TRUE(count.ok()) << count.status();
  EXPECT_EQ(*count, 3);
}

TEST(CountQueryTest, PeopleAfterShuffle) {
  const ShuffledDataset shuffled = PeopleAfterShuffle();
  auto count = CountQuery(shuffled, *ParseQuery(kPeopleQuery));
  ASSERT_TRUE(count.ok());
  EXPECT_EQ(*count, 2);
  EXPECT_DOUBLE_EQ(Loss(3, *count), 1.0);

  // Height:Weight tuples stay fused.
  const Dataset decoded = *Decode(shuffled.table);
  const Dataset original = *Decode(*OneHotEncode(PeopleDataset()));
  std::multiset<std::pair<std::string, std::string>> before;
  std::multiset<std::pair<std::string, std::string>> after;
  for (std::size_t r = 0; r < 6; ++r) {
    before.insert({original.rows()[r].values[2], original.rows()[r].values[3]});
    after.insert({decoded.rows()[r].values[2], decoded.rows()[r].values[3]});
  }
  EXPECT_EQ(before, after);
}

TEST(CountQueryTest, EmptyDataset) {
  const Dataset empty =
      *LoadCsv(testing::DataPath("header_only.csv"), testing::PeopleSchema());
  auto count = CountQuery(*OneHotEncode(empty), *ParseQuery(kPeopleQuery));
  ASSERT_TRUE(count.ok());
  EXPECT_EQ(*count, 0);
}

TEST(CountQueryTest, RejectsIllegalEncoding) {
  EncodedDataset encoded = *OneHotEncode(PeopleDataset());
  encoded.columns[1][0] = {0, 0, 0};
  EXPECT_FALSE(CountQuery(encoded, *ParseQuery(kPeopleQuery)).ok());
}

TEST(CountQueryTest, BatchedSumEqualsWholeCount) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Schema schema = testing::RandomSchema(4, 3, rng);
    const std::size_t n = 1 + rng.UniformBelow(60);
    const EncodedDataset encoded =
        *OneHotEncode(testing::RandomDataset(schema, n, rng));
    const QuerySpec query = testing::RandomEqualityQuery(schema, {0, 2}, rng);
    const std::size_t t = 1 + rng.UniformBelow(n);
    const auto sizes = *PlanBatches(n, t);
    EXPECT_EQ(*CountQueryBatched(encoded, query, sizes),
              *CountQuery(encoded, query));
  }
  const EncodedDataset encoded = *OneHotEncode(PeopleDataset());
  const std::vector<std::size_t> short_sizes = {2, 2};
  EXPECT_FALSE(CountQueryBatched(encoded, *ParseQuery(kPeopleQuery),
                                 short_sizes).ok());
}

// Queries inside the tied group are unaffected by any IS realization.
TEST(CountQueryTest, TiedQueriesAreShuffleInvariant) {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.UniformBelow(4);
    const Schema schema = testing::RandomSchema(k, 4, rng);
    const std::size_t n = 2 + rng.UniformBelow(100);
    const EncodedDataset encoded =
        *OneHotEncode(testing::RandomDataset(schema, n, rng));
    const QuerySpec query = testing::RandomEqualityQuery(schema, {0, k - 1}, rng);
    const TiedDataset tied =
        *TieAttributes(encoded, *RelevantAttributes(query, schema));
    const std::size_t t = 1 + rng.UniformBelow(n / 2);
    const int s = 2 + static_cast<int>(rng.UniformBelow(3));
    const ShufflePlan plan =
        *MakeShufflePlan(n, t, tied.ChannelNames(), s, trial);
    const ShuffledDataset shuffled = *IterativeShuffle(tied, plan);
    EXPECT_EQ(*CountQuery(shuffled, query), *CountQuery(encoded, query));
  }
}

TEST(LossTest, Examples) {
  EXPECT_EQ(Loss(5, 5), 0.0);
  EXPECT_EQ(Loss(3, 2), 1.0);
  EXPECT_EQ(Loss(0, 7), 7.0);
}

TEST(LossBoundTest, Examples) {
  EXPECT_EQ(LossBound(100, 0.0), 0.0);
  EXPECT_NEAR(LossBound(100, std::log(1.1)), 10.0, 1e-12);
  EXPECT_EQ(LossBound(0, 3.0), 0.0);
  EXPECT_NEAR(LossBound(10, -std::log(2.0)), 5.0, 1e-12);
}

TEST(UtilityReportTest, FlagsBound) {
  UtilityReport report = MakeUtilityReport(3, 3, 0.0);
  EXPECT_TRUE(report.bound_satisfied);
  report = MakeUtilityReport(3, 2, 0.0);
  EXPECT_FALSE(report.bound_satisfied);
  EXPECT_EQ(report.loss, 1.0);
  report = MakeUtilityReport(3, 2, std::log(2.0));
  EXPECT_TRUE(report.bound_satisfied);
}

TEST(EmpiricalRiskTest, Examples) {
  const std::vector<double> zero_losses = {0, 0, 0};
  const std::vector<std::int64_t> counts = {4, 4, 4};
  auto risk = ComputeEmpiricalRisk(zero_losses, counts, 0.0, 0.0, {10, 2});
  ASSERT_TRUE(risk.ok());
  EXPECT_EQ(risk->risk, 0.0);

  const std::vector<double> one = {1};
  const std::vector<std::int64_t> two = {2};
  risk = ComputeEmpiricalRisk(one, two, std::log(2.0), 0.0, {1, 2});
  ASSERT_TRUE(risk.ok());
  EXPECT_DOUBLE_EQ(risk->risk, 1.0);
  EXPECT_NEAR(risk->bound, 4.0, 1e-12);
  EXPECT_TRUE(risk->bound_holds);

  const std::vector<double> none = {0};
  risk = ComputeEmpiricalRisk(none, two, 0.0, 1.0, {1, 2});
  ASSERT_TRUE(risk.ok());
  EXPECT_DOUBLE_EQ(risk->penalty, 2.0);
  EXPECT_DOUBLE_EQ(risk->risk, 2.0);
}

TEST(EmpiricalRiskTest, Errors) {
  const std::vector<double> one = {1};
  const std::vector<std::int64_t> two = {2, 2};
  EXPECT_FALSE(ComputeEmpiricalRisk({}, {}, 0.0, 0.0, {1, 2}).ok());
  EXPECT_FALSE(ComputeEmpiricalRisk(one, two, 0.0, 0.0, {1, 2}).ok());
  EXPECT_FALSE(ComputeEmpiricalRisk(one, {two.data(), 1}, 0.0, -1.0, {1, 2}).ok());
}

TEST(DefaultRegularizerTest, SumsShufflersAndLogBatches) {
  EXPECT_DOUBLE_EQ(DefaultRegularizer({1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(DefaultRegularizer({100, 3}), 3.0 + std::log(100.0));
}

// 400 rows; every workload query touches only a0 and a1, so it stays inside
// its tied channel.
struct TiedWorkload {
  EncodedDataset encoded;
  std::vector<QuerySpec> workload;
};

TiedWorkload MakeTiedWorkload() {
  Rng rng(31);
  const Schema schema = testing::RandomSchema(4, 3, rng);
  TiedWorkload out;
  out.encoded = *OneHotEncode(testing::RandomDataset(schema, 400, rng));
  out.workload = {testing::RandomEqualityQuery(schema, {0, 1}, rng),
                  testing::RandomEqualityQuery(schema, {0, 1}, rng)};
  return out;
}

TEST(SelectSchemeTest, SingletonGrid) {
  const TiedWorkload w = MakeTiedWorkload();
  RiskConfig config;
  config.hypothesis_grid = {{50, 3}};
  config.workload = w.workload;
  config.trials_per_scheme = 2;
  auto selection = SelectScheme(config, w.encoded, 1);
  ASSERT_TRUE(selection.ok()) << selection.status();
  EXPECT_EQ(selection->best, (Scheme{50, 3}));
  ASSERT_EQ(selection->ranked.size(), 1u);
  EXPECT_EQ(selection->ranked[0].n1, 8);
}

TEST(SelectSchemeTest, TiedWorkloadPrefersSmallestPenalty) {
  const TiedWorkload w = MakeTiedWorkload();
  RiskConfig config;
  config.hypothesis_grid = {{100, 3}, {100, 2}, {200, 2}};
  config.workload = w.workload;
  config.trials_per_scheme = 3;
  auto selection = SelectScheme(config, w.encoded, 2);
  ASSERT_TRUE(selection.ok());
  EXPECT_EQ(selection->best, (Scheme{100, 2}));
  for (const SchemeRisk& entry : selection->ranked) {
    EXPECT_EQ(entry.risk.mean_loss, 0.0);
    EXPECT_TRUE(entry.risk.bound_holds);
  }
  EXPECT_EQ(selection->ranked.back().scheme, (Scheme{100, 3}));
}

TEST(SelectSchemeTest, TiesBreakBySmallerSThenT) {
  const TiedWorkload w = MakeTiedWorkload();
  RiskConfig config;
  config.hypothesis_grid = {{50, 3}, {100, 2}, {40, 2}};
  config.workload = w.workload;
  config.trials_per_scheme = 1;
  config.regularizer = [](const Scheme&) { return 1.0; };
  auto selection = SelectScheme(config, w.encoded, 3);
  ASSERT_TRUE(selection.ok());
  EXPECT_EQ(selection->best, (Scheme{40, 2}));
  EXPECT_EQ(selection->ranked[1].scheme, (Scheme{100, 2}));
  EXPECT_EQ(selection->ranked[2].scheme, (Scheme{50, 3}));
}

TEST(SelectSchemeTest, DeterministicAcrossThreads) {
  const TiedWorkload w = MakeTiedWorkload();
  RiskConfig config;
  config.hypothesis_grid = {{100, 3}, {100, 2}, {20, 2}, {10, 4}};
  config.workload = w.workload;
  // A cross-channel query gives non-zero losses.
  config.workload.push_back(*ParseQuery("count where a0 = v0 and a3 = v0"));
  config.trials_per_scheme = 2;
  auto serial = SelectScheme(config, w.encoded, 4);
  config.num_threads = 3;
  auto parallel = SelectScheme(config, w.encoded, 4);
  ASSERT_TRUE(serial.ok());
  ASSERT_TRUE(parallel.ok());
  EXPECT_EQ(SelectionToJson(*serial), SelectionToJson(*parallel));
}

TEST(SelectSchemeTest, ValidatesGrid) {
  const TiedWorkload w = MakeTiedWorkload();
  RiskConfig config;
  config.workload = w.workload;
  EXPECT_FALSE(SelectScheme(config, w.encoded, 1).ok());
  config.hypothesis_grid = {{10, 1}};
  EXPECT_FALSE(SelectScheme(config, w.encoded, 1).ok());
  config.hypothesis_grid = {{401, 2}};
  EXPECT_FALSE(SelectScheme(config, w.encoded, 1).ok());
  config.hypothesis_grid = {{400, 2}};  // n1 = 1
  EXPECT_FALSE(SelectScheme(config, w.encoded, 1).ok());
  config.hypothesis_grid = {{10, 2}};
  config.workload.clear();
  EXPECT_FALSE(SelectScheme(config, w.encoded, 1).ok());
}

}  // namespace
}  // namespace buds
