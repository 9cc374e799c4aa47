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

#include "buds/privacy.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "absl/status/status.h"
#include "gtest/gtest.h"

namespace buds {
namespace {

// Exhaustive count over all S-tuples of permutations of n1 rows: tuples that
// keep row 0 in place everywhere versus tuples that move it everywhere.
double EnumeratedRatio(int n1, int s) {
  std::vector<std::size_t> perm(n1);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double keep = 0;
  double move = 0;
  do {
    (perm[0] == 0 ? keep : move) += 1;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(keep, s) / std::pow(move, s);
}

TEST(RrBatchTest, KnownValues) {
  EXPECT_DOUBLE_EQ(*RrBatch(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(*RrBatch(4, 2), 1.0 / 9.0);
  EXPECT_DOUBLE_EQ(*RrBatch(10, 2), 1.0 / 81.0);
  EXPECT_DOUBLE_EQ(*RrBatch(5, 3), 1.0 / 64.0);
}

TEST(RrBatchTest, MatchesEnumeration) {
  for (int n1 = 2; n1 <= 6; ++n1) {
    for (int s = 2; s <= 4; ++s) {
      EXPECT_NEAR(*RrBatch(n1, s), EnumeratedRatio(n1, s), 1e-15)
          << "n1=" << n1 << " S=" << s;
    }
  }
}

TEST(EpsilonIsTest, KnownValues) {
  EXPECT_EQ(*EpsilonIs(1000, 11, 3), 0.0);
  EXPECT_NEAR(*EpsilonIs(100, 10, 2), std::log(100.0 / 81.0), 1e-15);
  EXPECT_NEAR(*EpsilonIs(10000, 100, 2), std::log(10000.0 / 9801.0), 1e-15);
  EXPECT_NEAR(*EpsilonIs(10000, 100, 2), 0.0201007, 1e-6);
}

TEST(EpsilonIsTest, EqualsLogOfTimesBatchRatio) {
  for (std::int64_t t : {1, 7, 130, 31000}) {
    for (std::int64_t n1 : {2, 3, 18, 99}) {
      for (int s : {2, 3, 5}) {
        EXPECT_NEAR(*EpsilonIs(t, n1, s), std::log(t * *RrBatch(n1, s)), 1e-12);
      }
    }
  }
}

TEST(EpsilonIsTest, MonotoneInParameters) {
  EXPECT_LT(*EpsilonIs(10, 20, 2), *EpsilonIs(11, 20, 2));
  EXPECT_GT(*EpsilonIs(10, 20, 2), *EpsilonIs(10, 21, 2));
  EXPECT_GT(*EpsilonIs(10, 20, 2), *EpsilonIs(10, 20, 3));
}

TEST(EpsilonCisTest, KnownValuesAndSign) {
  EXPECT_NEAR(*EpsilonCis(7, 3), -3 * std::log(6.0), 1e-14);
  EXPECT_EQ(*EpsilonCis(2, 2), 0.0);
  for (std::int64_t n1 = 3; n1 < 200; n1 += 7) {
    for (int s = 2; s < 6; ++s) EXPECT_LT(*EpsilonCis(n1, s), 0.0);
  }
}

TEST(PrivacyErrorsTest, RejectsDegenerateSchemes) {
  EXPECT_FALSE(RrBatch(1, 2).ok());
  EXPECT_FALSE(RrBatch(5, 1).ok());
  EXPECT_FALSE(EpsilonIs(0, 5, 2).ok());
  EXPECT_FALSE(EpsilonIs(3, 1, 2).ok());
  EXPECT_FALSE(EpsilonCis(1, 3).ok());
  EXPECT_FALSE(Account(ShuffleMode::kIterative, 2, 5, 0).ok());
}

TEST(AccountTest, IterativeSumsEqualTerms) {
  auto account = AccountIterative(4, 10, 2);
  ASSERT_TRUE(account.ok());
  ASSERT_EQ(account->rr_per_batch.size(), 4u);
  for (double rr : account->rr_per_batch) EXPECT_DOUBLE_EQ(rr, 1.0 / 81.0);
  EXPECT_NEAR(account->rr_total, 4.0 / 81.0, 1e-15);
  EXPECT_NEAR(account->epsilon, std::log(4.0 / 81.0), 1e-14);
  EXPECT_DOUBLE_EQ(account->epsilon_report, std::fabs(account->epsilon));
  EXPECT_EQ(account->mode, ShuffleMode::kIterative);
}

TEST(AccountTest, CumulativeKeepsLeadingTerm) {
  auto account = AccountCumulative(3, 7, 3);
  ASSERT_TRUE(account.ok());
  ASSERT_EQ(account->rr_per_batch.size(), 3u);
  EXPECT_DOUBLE_EQ(account->rr_per_batch[0], 1.0 / 216.0);
  EXPECT_DOUBLE_EQ(account->rr_per_batch[1], 1.0 / std::pow(13.0, 3));
  EXPECT_DOUBLE_EQ(account->rr_per_batch[2], 1.0 / std::pow(20.0, 3));
  EXPECT_NEAR(account->epsilon, -3 * std::log(6.0), 1e-14);
  EXPECT_NEAR(account->epsilon_report, 3 * std::log(6.0), 1e-14);
  EXPECT_EQ(Account(ShuffleMode::kCumulative, 3, 7, 3)->epsilon,
            account->epsilon);
}

void ExpectOracleAgrees(int n1, int s, double expected) {
  auto estimate = EstimateRrMonteCarlo(n1, s, 400000, 17);
  ASSERT_TRUE(estimate.ok()) << estimate.status();
  EXPECT_NEAR(estimate->ratio, expected, 3 * estimate->standard_error)
      << "n1=" << n1 << " S=" << s;
  EXPECT_EQ(estimate->trials, 400000);
}

TEST(EstimateRrTest, AgreesWithClosedForm) {
  ExpectOracleAgrees(2, 2, 1.0);
  ExpectOracleAgrees(3, 2, 0.25);
  ExpectOracleAgrees(4, 2, 1.0 / 9.0);
}

TEST(EstimateRrTest, AssignmentAndThreadsDoNotChangeCounts) {
  auto drawn = EstimateRrMonteCarlo(4, 3, 20000, 5);
  auto fixed = EstimateRrMonteCarlo(4, 3, 20000, 5, {.draw_assignment = false});
  auto threaded = EstimateRrMonteCarlo(4, 3, 20000, 5, {.num_threads = 3});
  ASSERT_TRUE(drawn.ok());
  ASSERT_TRUE(fixed.ok());
  ASSERT_TRUE(threaded.ok());
  EXPECT_EQ(drawn->fixed_in_all, fixed->fixed_in_all);
  EXPECT_EQ(drawn->displaced_in_all, fixed->displaced_in_all);
  EXPECT_EQ(drawn->fixed_in_all, threaded->fixed_in_all);
  EXPECT_EQ(drawn->displaced_in_all, threaded->displaced_in_all);
}

TEST(EstimateRrTest, Errors) {
  EXPECT_EQ(EstimateRrMonteCarlo(4, 2, kMinOracleTrials - 1, 1).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(EstimateRrMonteCarlo(1, 2, kMinOracleTrials, 1).ok());
  // Row 0 almost never stays put under six shufflers on 30 rows.
  EXPECT_EQ(EstimateRrMonteCarlo(30, 6, kMinOracleTrials, 1).status().code(),
            absl::StatusCode::kFailedPrecondition);
}

}  // namespace
}  // namespace buds
