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

#ifndef BUDS_UTILITY_H_
#define BUDS_UTILITY_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "buds/dataset.h"
#include "buds/query.h"
#include "buds/shuffler.h"
#include "nlohmann/json_fwd.hpp"

namespace buds {

// Number of row slots matching every clause. Tables must be one-hot legal.
absl::StatusOr<std::int64_t> CountQuery(const EncodedDataset& table,
                                        const CompiledQuery& query);
absl::StatusOr<std::int64_t> CountQuery(const EncodedDataset& table,
                                        const QuerySpec& query);
absl::StatusOr<std::int64_t> CountQuery(const ShuffledDataset& shuffled,
                                        const QuerySpec& query);

// Sum of per-batch counts; equals the whole-table count.
absl::StatusOr<std::int64_t> CountQueryBatched(
    const EncodedDataset& table, const QuerySpec& query,
    absl::Span<const std::size_t> batch_sizes);

// |c - c'|.
double Loss(std::int64_t c, std::int64_t c_prime);

// c' * |e^epsilon - 1|.
double LossBound(std::int64_t c_prime, double epsilon);

struct UtilityReport {
  std::int64_t c = 0;
  std::int64_t c_prime = 0;
  double loss = 0;
  double loss_bound = 0;
  bool bound_satisfied = false;
  double epsilon_used = 0;
};

UtilityReport MakeUtilityReport(std::int64_t c, std::int64_t c_prime,
                                double epsilon);

// A candidate randomization scheme: t batches, S shufflers, always IS.
struct Scheme {
  std::int64_t t = 1;
  int S = 2;

  bool operator==(const Scheme&) const = default;
};

using Regularizer = std::function<double(const Scheme&)>;

// S + ln(t).
double DefaultRegularizer(const Scheme& scheme);

struct EmpiricalRisk {
  double mean_loss = 0;
  double penalty = 0;  // lambda * G(scheme)
  double risk = 0;     // mean_loss + penalty
  double bound = 0;    // mean(e^epsilon * c') + penalty
  // Whether risk <= bound. Only guaranteed for workloads inside the tied
  // channel; cross-channel queries may break it.
  bool bound_holds = false;
};

absl::StatusOr<EmpiricalRisk> ComputeEmpiricalRisk(
    absl::Span<const double> losses, absl::Span<const std::int64_t> c_primes,
    double epsilon, double lambda, const Scheme& scheme,
    const Regularizer& regularizer = DefaultRegularizer);

inline constexpr double kDefaultLambda = 0.01;

struct RiskConfig {
  double lambda = kDefaultLambda;
  std::vector<Scheme> hypothesis_grid;
  std::vector<QuerySpec> workload;
  int trials_per_scheme = 20;
  Regularizer regularizer = DefaultRegularizer;
  int num_threads = 1;
};

struct SchemeRisk {
  Scheme scheme;
  std::int64_t n1 = 0;
  double epsilon = 0;
  EmpiricalRisk risk;
};

struct SchemeSelection {
  Scheme best;
  std::vector<SchemeRisk> ranked;  // ascending risk, ties by S then t
};

// Regularized empirical-risk minimization over the hypothesis grid. Every
// candidate is shuffled `trials_per_scheme` times per workload query with
// seeds derived from (seed, t, S, query, trial).
absl::StatusOr<SchemeSelection> SelectScheme(const RiskConfig& config,
                                             const EncodedDataset& dataset,
                                             std::uint64_t seed);

nlohmann::json SelectionToJson(const SchemeSelection& selection);

}  // namespace buds

#endif  // BUDS_UTILITY_H_
