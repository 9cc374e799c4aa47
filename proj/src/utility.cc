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

#include <algorithm>
#include <cmath>
#include <thread>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "buds/partition.h"
#include "buds/privacy.h"
#include "buds/random.h"
#include "buds/status_macros.h"
#include "nlohmann/json.hpp"

namespace buds {
namespace {

absl::StatusOr<std::int64_t> CountRange(const EncodedDataset& table,
                                        const CompiledQuery& query,
                                        std::size_t begin, std::size_t end) {
  std::vector<std::size_t> hot(table.num_attributes(), 0);
  std::int64_t count = 0;
  for (std::size_t r = begin; r < end; ++r) {
    for (const CompiledQuery::Clause& clause : query.clauses) {
      BUDS_ASSIGN_OR_RETURN(hot[clause.attribute],
                            HotIndex(table.columns[clause.attribute][r]));
      if (hot[clause.attribute] >= clause.accepts.size()) {
        return absl::InvalidArgumentError("one-hot width exceeds domain");
      }
    }
    if (query.Matches(hot)) ++count;
  }
  return count;
}

bool NearlyEqual(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= 1e-12 * scale;
}

bool RanksBefore(const SchemeRisk& a, const SchemeRisk& b) {
  if (!NearlyEqual(a.risk.risk, b.risk.risk)) return a.risk.risk < b.risk.risk;
  if (a.scheme.S != b.scheme.S) return a.scheme.S < b.scheme.S;
  return a.scheme.t < b.scheme.t;
}

struct PreparedQuery {
  TiedDataset tied;
  CompiledQuery compiled;
  std::int64_t c = 0;
};

absl::StatusOr<SchemeRisk> EvaluateScheme(
    const RiskConfig& config, const std::vector<PreparedQuery>& prepared,
    const Scheme& scheme, std::size_t num_rows, std::uint64_t seed) {
  SchemeRisk result;
  result.scheme = scheme;
  BUDS_ASSIGN_OR_RETURN(std::vector<std::size_t> sizes,
                        PlanBatches(num_rows, static_cast<std::size_t>(scheme.t)));
  result.n1 = static_cast<std::int64_t>(sizes.front());
  BUDS_ASSIGN_OR_RETURN(result.epsilon, EpsilonIs(scheme.t, result.n1, scheme.S));

  std::vector<double> losses;
  std::vector<std::int64_t> c_primes;
  for (std::size_t q = 0; q < prepared.size(); ++q) {
    const std::vector<std::string> channels = prepared[q].tied.ChannelNames();
    for (int trial = 0; trial < config.trials_per_scheme; ++trial) {
      const std::uint64_t trial_seed = DeriveSeed(
          seed, "risk-trial",
          {static_cast<std::uint64_t>(scheme.t),
           static_cast<std::uint64_t>(scheme.S), q,
           static_cast<std::uint64_t>(trial)});
      BUDS_ASSIGN_OR_RETURN(
          ShufflePlan plan,
          MakeShufflePlan(num_rows, static_cast<std::size_t>(scheme.t),
                          channels, scheme.S, trial_seed));
      BUDS_ASSIGN_OR_RETURN(ShuffledDataset shuffled,
                            IterativeShuffle(prepared[q].tied, plan));
      BUDS_ASSIGN_OR_RETURN(std::int64_t c_prime,
                            CountQuery(shuffled.table, prepared[q].compiled));
      losses.push_back(Loss(prepared[q].c, c_prime));
      c_primes.push_back(c_prime);
    }
  }
  BUDS_ASSIGN_OR_RETURN(
      result.risk,
      ComputeEmpiricalRisk(losses, c_primes, result.epsilon, config.lambda,
                           scheme, config.regularizer));
  return result;
}

}  // namespace

absl::StatusOr<std::int64_t> CountQuery(const EncodedDataset& table,
                                        const CompiledQuery& query) {
  return CountRange(table, query, 0, table.num_rows());
}

absl::StatusOr<std::int64_t> CountQuery(const EncodedDataset& table,
                                        const QuerySpec& query) {
  BUDS_ASSIGN_OR_RETURN(CompiledQuery compiled,
                        CompileQuery(query, table.schema));
  return CountQuery(table, compiled);
}

absl::StatusOr<std::int64_t> CountQuery(const ShuffledDataset& shuffled,
                                        const QuerySpec& query) {
  return CountQuery(shuffled.table, query);
}

absl::StatusOr<std::int64_t> CountQueryBatched(
    const EncodedDataset& table, const QuerySpec& query,
    absl::Span<const std::size_t> batch_sizes) {
  BUDS_ASSIGN_OR_RETURN(CompiledQuery compiled,
                        CompileQuery(query, table.schema));
  std::size_t begin = 0;
  std::int64_t total = 0;
  for (std::size_t size : batch_sizes) {
    if (begin + size > table.num_rows()) {
      return absl::InvalidArgumentError("batch sizes exceed the table");
    }
    BUDS_ASSIGN_OR_RETURN(std::int64_t count,
                          CountRange(table, compiled, begin, begin + size));
    total += count;
    begin += size;
  }
  if (begin != table.num_rows()) {
    return absl::InvalidArgumentError("batch sizes do not cover the table");
  }
  return total;
}

double Loss(std::int64_t c, std::int64_t c_prime) {
  return std::abs(static_cast<double>(c - c_prime));
}

double LossBound(std::int64_t c_prime, double epsilon) {
  return static_cast<double>(c_prime) * std::abs(std::expm1(epsilon));
}

UtilityReport MakeUtilityReport(std::int64_t c, std::int64_t c_prime,
                                double epsilon) {
  UtilityReport report;
  report.c = c;
  report.c_prime = c_prime;
  report.loss = Loss(c, c_prime);
  report.loss_bound = LossBound(c_prime, epsilon);
  report.bound_satisfied = report.loss <= report.loss_bound;
  report.epsilon_used = epsilon;
  return report;
}

double DefaultRegularizer(const Scheme& scheme) {
  return scheme.S + std::log(static_cast<double>(scheme.t));
}

absl::StatusOr<EmpiricalRisk> ComputeEmpiricalRisk(
    absl::Span<const double> losses, absl::Span<const std::int64_t> c_primes,
    double epsilon, double lambda, const Scheme& scheme,
    const Regularizer& regularizer) {
  if (losses.empty()) return absl::InvalidArgumentError("empty workload");
  if (losses.size() != c_primes.size()) {
    return absl::InvalidArgumentError(
        "losses and reported counts must have equal length");
  }
  if (lambda < 0) return absl::InvalidArgumentError("lambda must be >= 0");
  const double n = static_cast<double>(losses.size());
  const double growth = std::exp(epsilon);
  double loss_sum = 0;
  double bound_sum = 0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    loss_sum += losses[i];
    bound_sum += growth * static_cast<double>(c_primes[i]);
  }
  EmpiricalRisk risk;
  risk.mean_loss = loss_sum / n;
  risk.penalty = lambda * regularizer(scheme);
  risk.risk = risk.mean_loss + risk.penalty;
  risk.bound = bound_sum / n + risk.penalty;
  risk.bound_holds = risk.risk <= risk.bound;
  return risk;
}

absl::StatusOr<SchemeSelection> SelectScheme(const RiskConfig& config,
                                             const EncodedDataset& dataset,
                                             std::uint64_t seed) {
  if (config.hypothesis_grid.empty()) {
    return absl::InvalidArgumentError("hypothesis grid is empty");
  }
  if (config.workload.empty()) {
    return absl::InvalidArgumentError("workload is empty");
  }
  if (dataset.num_rows() == 0) {
    return absl::InvalidArgumentError("dataset is empty");
  }
  if (config.trials_per_scheme < 1) {
    return absl::InvalidArgumentError("trials_per_scheme must be >= 1");
  }
  const std::size_t n = dataset.num_rows();
  for (const Scheme& scheme : config.hypothesis_grid) {
    if (scheme.S < 2) {
      return absl::InvalidArgumentError(
          absl::StrCat("candidate (t=", scheme.t, ", S=", scheme.S,
                       ") needs S >= 2"));
    }
    if (scheme.t < 1 || static_cast<std::size_t>(scheme.t) > n) {
      return absl::InvalidArgumentError(absl::StrCat(
          "candidate (t=", scheme.t, ", S=", scheme.S, ") needs 1 <= t <= n"));
    }
    const std::size_t n1 = (n + scheme.t - 1) / scheme.t;
    if (n1 < 2) {
      return absl::InvalidArgumentError(
          absl::StrCat("candidate (t=", scheme.t, ", S=", scheme.S,
                       ") has batch size n1=", n1, " < 2"));
    }
  }

  std::vector<PreparedQuery> prepared;
  for (const QuerySpec& query : config.workload) {
    BUDS_ASSIGN_OR_RETURN(std::vector<std::string> relevant,
                          RelevantAttributes(query, dataset.schema));
    PreparedQuery p;
    BUDS_ASSIGN_OR_RETURN(p.tied, TieAttributes(dataset, relevant));
    BUDS_ASSIGN_OR_RETURN(p.compiled, CompileQuery(query, dataset.schema));
    BUDS_ASSIGN_OR_RETURN(p.c, CountQuery(dataset, p.compiled));
    prepared.push_back(std::move(p));
  }

  const std::size_t candidates = config.hypothesis_grid.size();
  std::vector<absl::StatusOr<SchemeRisk>> results(
      candidates, absl::UnknownError("not evaluated"));
  const std::size_t workers = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(config.num_threads, 1)), 1, candidates);
  auto run = [&](std::size_t first) {
    for (std::size_t k = first; k < candidates; k += workers) {
      results[k] = EvaluateScheme(config, prepared, config.hypothesis_grid[k],
                                  n, seed);
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (std::thread& thread : threads) thread.join();
  }

  SchemeSelection selection;
  for (auto& result : results) {
    if (!result.ok()) return result.status();
    selection.ranked.push_back(*std::move(result));
  }
  std::stable_sort(selection.ranked.begin(), selection.ranked.end(),
                   RanksBefore);
  selection.best = selection.ranked.front().scheme;
  return selection;
}

nlohmann::json SelectionToJson(const SchemeSelection& selection) {
  nlohmann::json json;
  json["selected"] = {{"t", selection.best.t}, {"S", selection.best.S}};
  json["ranked"] = nlohmann::json::array();
  for (const SchemeRisk& entry : selection.ranked) {
    json["ranked"].push_back({{"t", entry.scheme.t},
                              {"S", entry.scheme.S},
                              {"n1", entry.n1},
                              {"epsilon", entry.epsilon},
                              {"mean_loss", entry.risk.mean_loss},
                              {"penalty", entry.risk.penalty},
                              {"risk", entry.risk.risk},
                              {"risk_bound", entry.risk.bound},
                              {"bound_holds", entry.risk.bound_holds}});
  }
  return json;
}

}  // namespace buds
