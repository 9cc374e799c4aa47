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
#include <optional>
#include <thread>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "buds/partition.h"
#include "buds/random.h"
#include "buds/status_macros.h"

namespace buds {
namespace {

absl::Status ValidateBatch(std::int64_t n1, int S) {
  if (n1 < 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "batch size n1 must be >= 2 (ratio undefined at n1=", n1, ")"));
  }
  if (S < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("shuffler count S must be >= 2, got ", S));
  }
  return absl::OkStatus();
}

absl::Status ValidateBatchCount(std::int64_t t) {
  if (t < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("batch count t must be >= 1, got ", t));
  }
  return absl::OkStatus();
}

// (rows-1)^S when it is exactly representable as a double.
std::optional<double> ExactBatchDenominator(std::int64_t rows, int S) {
  constexpr std::uint64_t kExactLimit = std::uint64_t{1} << 53;
  const auto base = static_cast<std::uint64_t>(rows - 1);
  std::uint64_t power = 1;
  for (int i = 0; i < S; ++i) {
    if (base != 0 && power > kExactLimit / base) return std::nullopt;
    power *= base;
  }
  return static_cast<double>(power);
}

double LogBatchDenominator(std::int64_t rows, int S) {
  if (std::optional<double> exact = ExactBatchDenominator(rows, S)) {
    return std::log(*exact);
  }
  return S * std::log(static_cast<double>(rows - 1));
}

// ln(numerator / (rows-1)^S). The quotient is formed directly when exact so
// that balanced configurations give exactly 0.
double LogRatio(double numerator, std::int64_t rows, int S) {
  if (std::optional<double> exact = ExactBatchDenominator(rows, S)) {
    return std::log(numerator / *exact);
  }
  return std::log(numerator) - S * std::log(static_cast<double>(rows - 1));
}

}  // namespace

absl::StatusOr<double> RrBatch(std::int64_t n1, int S) {
  BUDS_RETURN_IF_ERROR(ValidateBatch(n1, S));
  return std::exp(-LogBatchDenominator(n1, S));
}

absl::StatusOr<double> EpsilonIs(std::int64_t t, std::int64_t n1, int S) {
  BUDS_RETURN_IF_ERROR(ValidateBatch(n1, S));
  BUDS_RETURN_IF_ERROR(ValidateBatchCount(t));
  return LogRatio(static_cast<double>(t), n1, S);
}

absl::StatusOr<double> EpsilonCis(std::int64_t n1, int S) {
  BUDS_RETURN_IF_ERROR(ValidateBatch(n1, S));
  return -LogBatchDenominator(n1, S);
}

absl::StatusOr<PrivacyAccount> AccountIterative(std::int64_t t, std::int64_t n1,
                                                int S) {
  BUDS_ASSIGN_OR_RETURN(double epsilon, EpsilonIs(t, n1, S));
  BUDS_ASSIGN_OR_RETURN(double rr, RrBatch(n1, S));
  PrivacyAccount account;
  account.mode = ShuffleMode::kIterative;
  account.t = t;
  account.n1 = n1;
  account.S = S;
  account.rr_per_batch.assign(static_cast<std::size_t>(t), rr);
  account.epsilon = epsilon;
  account.rr_total = std::exp(epsilon);
  account.epsilon_report = std::abs(epsilon);
  return account;
}

absl::StatusOr<PrivacyAccount> AccountCumulative(std::int64_t t,
                                                 std::int64_t n1, int S) {
  BUDS_RETURN_IF_ERROR(ValidateBatchCount(t));
  BUDS_ASSIGN_OR_RETURN(double epsilon, EpsilonCis(n1, S));
  PrivacyAccount account;
  account.mode = ShuffleMode::kCumulative;
  account.t = t;
  account.n1 = n1;
  account.S = S;
  account.rr_per_batch.reserve(static_cast<std::size_t>(t));
  for (std::int64_t stage = 1; stage <= t; ++stage) {
    account.rr_per_batch.push_back(
        std::exp(-LogBatchDenominator(stage * n1, S)));
  }
  // Later stage terms are dropped from the total.
  account.epsilon = epsilon;
  account.rr_total = std::exp(epsilon);
  account.epsilon_report = std::abs(epsilon);
  return account;
}

absl::StatusOr<PrivacyAccount> Account(ShuffleMode mode, std::int64_t t,
                                       std::int64_t n1, int S) {
  return mode == ShuffleMode::kIterative ? AccountIterative(t, n1, S)
                                         : AccountCumulative(t, n1, S);
}

absl::StatusOr<RrEstimate> EstimateRrMonteCarlo(
    std::int64_t n1, int S, std::int64_t trials, std::uint64_t seed,
    const RrEstimateOptions& options) {
  BUDS_RETURN_IF_ERROR(ValidateBatch(n1, S));
  if (trials < kMinOracleTrials) {
    return absl::InvalidArgumentError(absl::StrCat(
        "need at least ", kMinOracleTrials, " trials, got ", trials));
  }
  const std::size_t rows = static_cast<std::size_t>(n1);
  // Only the group-to-shuffler structure matters; channel names are dummies.
  AttributeGroups groups(static_cast<std::size_t>(S));

  const std::size_t workers = static_cast<std::size_t>(
      std::clamp<std::int64_t>(options.num_threads, 1, trials));
  std::vector<std::int64_t> fixed(workers, 0);
  std::vector<std::int64_t> displaced(workers, 0);
  auto run = [&](std::size_t worker) {
    std::vector<Permutation> by_shuffler(static_cast<std::size_t>(S));
    for (std::int64_t trial = static_cast<std::int64_t>(worker); trial < trials;
         trial += static_cast<std::int64_t>(workers)) {
      const auto trial_index = static_cast<std::uint64_t>(trial);
      for (int s = 0; s < S; ++s) {
        Rng rng(DeriveSeed(seed, "oracle-rr-shuffle",
                           {trial_index, static_cast<std::uint64_t>(s)}));
        by_shuffler[s] = RandomPermutation(rows, rng);
      }
      ShufflerAssignment assignment(static_cast<std::size_t>(S));
      for (int s = 0; s < S; ++s) assignment[s] = s;
      if (options.draw_assignment) {
        Rng rng(DeriveSeed(seed, "oracle-rr-assign", {trial_index}));
        assignment = *AssignShufflers(groups, S, rng);
      }
      int kept = 0;
      for (int group = 0; group < S; ++group) {
        if (by_shuffler[assignment[group]][0] == 0) ++kept;
      }
      if (kept == S) ++fixed[worker];
      if (kept == 0) ++displaced[worker];
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (std::thread& thread : threads) thread.join();
  }

  RrEstimate estimate;
  estimate.trials = trials;
  for (std::size_t w = 0; w < workers; ++w) {
    estimate.fixed_in_all += fixed[w];
    estimate.displaced_in_all += displaced[w];
  }
  if (estimate.fixed_in_all == 0 || estimate.displaced_in_all == 0) {
    return absl::FailedPreconditionError(absl::StrCat(
        "too few trials to estimate the ratio: fixed=", estimate.fixed_in_all,
        " displaced=", estimate.displaced_in_all));
  }
  const double a = static_cast<double>(estimate.fixed_in_all);
  const double b = static_cast<double>(estimate.displaced_in_all);
  estimate.ratio = a / b;
  estimate.standard_error = estimate.ratio * std::sqrt(1.0 / a + 1.0 / b);
  return estimate;
}

}  // namespace buds
