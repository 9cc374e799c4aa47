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

#ifndef BUDS_PIPELINE_H_
#define BUDS_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <functional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "buds/dataset.h"
#include "buds/shuffler.h"
#include "buds/utility.h"
#include "nlohmann/json_fwd.hpp"

namespace buds {

inline constexpr int kDefaultMaxRetries = 16;

struct PipelineConfig {
  std::uint64_t seed = 0;
  // Fixed scheme; when either is absent the scheme is chosen from
  // `hypothesis_grid` by regularized empirical risk.
  std::optional<std::int64_t> t;
  std::optional<int> S;
  double lambda = kDefaultLambda;
  int max_retries = kDefaultMaxRetries;
  std::vector<Scheme> hypothesis_grid;
  int trials = 20;
  ShuffleMode mode = ShuffleMode::kIterative;
  int num_threads = 1;
  // Extra queries for risk sweeps.
  std::vector<std::string> workload;
};

// Reads {seed, t, S, lambda, max_retries, hypothesis_grid, trials, mode,
// threads, workload}. Grid entries are {"t": .., "S": ..} objects.
absl::StatusOr<PipelineConfig> ParsePipelineConfig(const nlohmann::json& json);
absl::StatusOr<PipelineConfig> LoadPipelineConfig(const std::string& path);

// The published answer. Carries no row values, IDs, or permutations.
struct DPReport {
  std::string query;
  std::int64_t c_prime = 0;
  double epsilon_signed = 0;
  double epsilon_report = 0;
  double loss_bound = 0;
  std::string plan_digest;
  std::uint64_t seed = 0;
  int retries_used = 0;
  Scheme scheme;
  std::int64_t n1 = 0;
  ShuffleMode mode = ShuffleMode::kIterative;
  std::string bound_status;
};

nlohmann::json ReportToJson(const DPReport& report);
std::string ReportToText(const DPReport& report);

// Outcome of the accepted attempt of RetryUntilBounded.
struct RetryOutcome {
  int attempt = 0;
  UtilityReport utility;
};

// Calls `attempt(k)` for k = 0..max_retries until the returned c' satisfies
// |c - c'| <= c'|e^eps - 1|. ResourceExhausted lists every violation.
absl::StatusOr<RetryOutcome> RetryUntilBounded(
    std::int64_t c, double epsilon, int max_retries,
    const std::function<absl::StatusOr<std::int64_t>(int)>& attempt);

// encode -> query -> tie -> partition -> shuffle -> account -> report.
// Whenever |c - c'| exceeds c'|e^eps - 1| the shuffle is redone with a fresh
// derived seed, up to `max_retries` times.
//
// Errors: FailedPrecondition when CIS is requested and epsilon < 0;
// ResourceExhausted when every retry violates the bound; InvalidArgument for
// bad configs, queries or data. When `shuffled_out` is non-null it receives
// the output database of the accepted attempt.
absl::StatusOr<DPReport> RunPipeline(const PipelineConfig& config,
                                     const Dataset& dataset,
                                     absl::string_view query_text,
                                     ShuffledDataset* shuffled_out = nullptr);
absl::StatusOr<DPReport> RunPipeline(const PipelineConfig& config,
                                     const Schema& schema,
                                     const std::string& dataset_path,
                                     absl::string_view query_text,
                                     ShuffledDataset* shuffled_out = nullptr);

// Risk sweep over the config's grid for the query plus config.workload.
absl::StatusOr<SchemeSelection> RunRiskSweep(const PipelineConfig& config,
                                             const Dataset& dataset,
                                             absl::string_view query_text);

inline constexpr double kTable3Tolerance = 0.015;
// Rows whose |delta| exceeds this fraction of the published value are
// flagged even when inside the absolute tolerance.
inline constexpr double kTable3RelativeFlag = 0.25;

struct Table3Row {
  std::int64_t n = 0;
  std::int64_t t = 0;
  std::int64_t n1 = 0;
  int S = 0;
  double epsilon_signed = 0;
  double epsilon_magnitude = 0;
  double epsilon_published = 0;
  double delta = 0;  // |magnitude - published|
  bool within_tolerance = false;
  bool discrepancy = false;
  std::string note;
};

struct Table3Comparison {
  std::vector<Table3Row> rows;
  int matches = 0;  // rows within tolerance
};

// Evaluates ln(t/(n1-1)^S) on the ten published reference configurations
// (n1 as published) and compares magnitudes against the published epsilon.
Table3Comparison ReproduceTable3();
nlohmann::json Table3ToJson(const Table3Comparison& comparison);
std::string Table3ToText(const Table3Comparison& comparison);

}  // namespace buds

#endif  // BUDS_PIPELINE_H_
