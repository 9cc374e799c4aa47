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

#ifndef BUDS_PRIVACY_H_
#define BUDS_PRIVACY_H_

#include <cstdint>
#include <vector>

#include "absl/status/statusor.h"
#include "buds/shuffler.h"

namespace buds {

// Closed-form accounting for one shuffling scheme.
//
// For a single batch of n1 rows permuted independently by S shufflers, a row
// keeps its slot in every group with probability (1/n1)^S and leaves it in
// every group with probability ((n1-1)/n1)^S. Their ratio is the batch
// randomized-response ratio 1/(n1-1)^S; the shuffler-choice factor 1/S!
// appears in both and cancels.
//
// IS adds t equal batch terms: RR = t/(n1-1)^S. CIS adds 1/(i*n1-1)^S for the
// growing stages, and only the leading term is kept: RR = 1/(n1-1)^S, which
// yields epsilon <= 0.
struct PrivacyAccount {
  ShuffleMode mode = ShuffleMode::kIterative;
  std::int64_t t = 0;
  std::int64_t n1 = 0;
  int S = 0;
  std::vector<double> rr_per_batch;
  double rr_total = 0;
  double epsilon = 0;         // signed, ln(rr_total)
  double epsilon_report = 0;  // |epsilon|
};

absl::StatusOr<double> RrBatch(std::int64_t n1, int S);

// ln(t / (n1-1)^S), evaluated in log space.
absl::StatusOr<double> EpsilonIs(std::int64_t t, std::int64_t n1, int S);

// -S * ln(n1-1).
absl::StatusOr<double> EpsilonCis(std::int64_t n1, int S);

absl::StatusOr<PrivacyAccount> AccountIterative(std::int64_t t, std::int64_t n1,
                                                int S);
absl::StatusOr<PrivacyAccount> AccountCumulative(std::int64_t t,
                                                 std::int64_t n1, int S);
absl::StatusOr<PrivacyAccount> Account(ShuffleMode mode, std::int64_t t,
                                       std::int64_t n1, int S);

struct RrEstimate {
  double ratio = 0;
  double standard_error = 0;
  std::int64_t fixed_in_all = 0;      // row 1 kept its slot in every group
  std::int64_t displaced_in_all = 0;  // row 1 left its slot in every group
  std::int64_t trials = 0;
};

struct RrEstimateOptions {
  // Draws the group-to-shuffler bijection each trial. The estimate is
  // identical either way since the set of permutations applied is the same.
  bool draw_assignment = true;
  int num_threads = 1;
};

inline constexpr std::int64_t kMinOracleTrials = 10000;

// Monte-Carlo estimate of the single-batch ratio. The standard error is the
// delta-method error of a ratio of two multinomial counts,
// ratio * sqrt(1/fixed + 1/displaced).
absl::StatusOr<RrEstimate> EstimateRrMonteCarlo(
    std::int64_t n1, int S, std::int64_t trials, std::uint64_t seed,
    const RrEstimateOptions& options = {});

}  // namespace buds

#endif  // BUDS_PRIVACY_H_
