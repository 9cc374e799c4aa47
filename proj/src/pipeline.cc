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

#include "buds/pipeline.h"

#include <cmath>
#include <fstream>
#include <optional>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "buds/partition.h"
#include "buds/privacy.h"
#include "buds/query.h"
#include "buds/status_macros.h"
#include "nlohmann/json.hpp"

namespace buds {
namespace {

struct PublishedRow {
  std::int64_t n;
  std::int64_t t;
  std::int64_t n1;
  int S;
  double epsilon;
};

// Reference configurations with their published epsilon values.
constexpr PublishedRow kPublishedRows[] = {
    {1000, 130, 7, 3, 0.50},
    {11000, 1000, 11, 3, 0.0},
    {100000, 5500, 18, 3, 0.11},
    {1000000, 31000, 32, 3, 0.03},
    {100000000, 1000000, 99, 3, 0.03},
    {1000, 100, 10, 2, 0.2},
    {11000, 500, 22, 2, 0.12},
    {100000, 2200, 45, 2, 0.1},
    {1000000, 10000, 100, 2, 0.02},
    {100000000, 218000, 458, 2, 0.04},
};

absl::StatusOr<Scheme> ParseScheme(const nlohmann::json& entry) {
  if (entry.is_object()) {
    return Scheme{entry.at("t").get<std::int64_t>(), entry.at("S").get<int>()};
  }
  if (entry.is_array() && entry.size() == 2) {
    return Scheme{entry[0].get<std::int64_t>(), entry[1].get<int>()};
  }
  return absl::InvalidArgumentError(
      "hypothesis_grid entries must be {\"t\":..,\"S\":..} or [t, S]");
}

absl::StatusOr<ShuffleMode> ParseMode(std::string mode) {
  mode = absl::AsciiStrToUpper(mode);
  if (mode == "IS") return ShuffleMode::kIterative;
  if (mode == "CIS") return ShuffleMode::kCumulative;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mode '", mode, "'; expected IS or CIS"));
}

absl::Status ValidateConfig(const PipelineConfig& config) {
  if (config.max_retries < 0) {
    return absl::InvalidArgumentError("max_retries must be >= 0");
  }
  if (config.lambda < 0) {
    return absl::InvalidArgumentError("lambda must be >= 0");
  }
  if (config.trials < 1) {
    return absl::InvalidArgumentError("trials must be >= 1");
  }
  if (config.t.has_value() != config.S.has_value()) {
    return absl::InvalidArgumentError("t and S must be given together");
  }
  if (!config.t.has_value() && config.hypothesis_grid.empty()) {
    return absl::InvalidArgumentError(
        "config needs either (t, S) or a hypothesis_grid");
  }
  if (config.S.has_value() && *config.S < 2) {
    return absl::InvalidArgumentError("S must be > 1");
  }
  if (config.t.has_value() && *config.t < 1) {
    return absl::InvalidArgumentError("t must be >= 1");
  }
  return absl::OkStatus();
}

RiskConfig MakeRiskConfig(const PipelineConfig& config,
                          std::vector<QuerySpec> workload) {
  RiskConfig risk;
  risk.lambda = config.lambda;
  risk.hypothesis_grid = config.hypothesis_grid;
  risk.workload = std::move(workload);
  risk.trials_per_scheme = config.trials;
  risk.num_threads = config.num_threads;
  return risk;
}

}  // namespace

absl::StatusOr<PipelineConfig> ParsePipelineConfig(const nlohmann::json& json) {
  if (!json.is_object()) {
    return absl::InvalidArgumentError("config must be a JSON object");
  }
  PipelineConfig config;
  try {
    config.seed = json.value("seed", std::uint64_t{0});
    if (json.contains("t")) config.t = json["t"].get<std::int64_t>();
    if (json.contains("S")) config.S = json["S"].get<int>();
    config.lambda = json.value("lambda", kDefaultLambda);
    config.max_retries = json.value("max_retries", kDefaultMaxRetries);
    config.trials = json.value("trials", 20);
    config.num_threads = json.value("threads", 1);
    if (json.contains("hypothesis_grid")) {
      for (const nlohmann::json& entry : json["hypothesis_grid"]) {
        BUDS_ASSIGN_OR_RETURN(Scheme scheme, ParseScheme(entry));
        config.hypothesis_grid.push_back(scheme);
      }
    }
    if (json.contains("mode")) {
      BUDS_ASSIGN_OR_RETURN(config.mode,
                            ParseMode(json["mode"].get<std::string>()));
    }
    if (json.contains("workload")) {
      config.workload = json["workload"].get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed config: ", e.what()));
  }
  BUDS_RETURN_IF_ERROR(ValidateConfig(config));
  return config;
}

absl::StatusOr<PipelineConfig> LoadPipelineConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  nlohmann::json json = nlohmann::json::parse(in, nullptr, false);
  if (json.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path, " is not valid JSON"));
  }
  return ParsePipelineConfig(json);
}

nlohmann::json ReportToJson(const DPReport& report) {
  nlohmann::json json;
  json["query"] = report.query;
  json["c_prime"] = report.c_prime;
  json["epsilon_signed"] = report.epsilon_signed;
  json["epsilon_report"] = report.epsilon_report;
  json["loss_bound"] = report.loss_bound;
  json["plan_digest"] = report.plan_digest;
  json["seed"] = report.seed;
  json["retries_used"] = report.retries_used;
  json["scheme"] = {{"t", report.scheme.t},
                    {"S", report.scheme.S},
                    {"n1", report.n1},
                    {"mode", std::string(ShuffleModeName(report.mode))}};
  json["bound_status"] = report.bound_status;
  return json;
}

std::string ReportToText(const DPReport& report) {
  return absl::StrFormat(
      "query          %s\n"
      "answer (c')    %d\n"
      "epsilon        %.6f (reported |eps| = %.6f)\n"
      "loss bound     %.6f (%s)\n"
      "scheme         %s t=%d S=%d n1=%d\n"
      "seed           %d\n"
      "plan digest    %s\n"
      "retries used   %d\n",
      report.query, report.c_prime, report.epsilon_signed,
      report.epsilon_report, report.loss_bound, report.bound_status,
      ShuffleModeName(report.mode), report.scheme.t, report.scheme.S, report.n1,
      report.seed, report.plan_digest, report.retries_used);
}

absl::StatusOr<RetryOutcome> RetryUntilBounded(
    std::int64_t c, double epsilon, int max_retries,
    const std::function<absl::StatusOr<std::int64_t>(int)>& attempt) {
  if (max_retries < 0) {
    return absl::InvalidArgumentError("max_retries must be >= 0");
  }
  std::vector<std::string> violations;
  for (int k = 0; k <= max_retries; ++k) {
    BUDS_ASSIGN_OR_RETURN(std::int64_t c_prime, attempt(k));
    const UtilityReport utility = MakeUtilityReport(c, c_prime, epsilon);
    if (utility.bound_satisfied) return RetryOutcome{k, utility};
    violations.push_back(absl::StrFormat("attempt %d: c'=%d, loss bound %.6f violated",
                                         k, c_prime, utility.loss_bound));
  }
  return absl::ResourceExhaustedError(
      absl::StrCat("loss bound violated on all ", max_retries + 1,
                   " attempts: ", absl::StrJoin(violations, "; ")));
}

absl::StatusOr<DPReport> RunPipeline(const PipelineConfig& config,
                                     const Dataset& dataset,
                                     absl::string_view query_text,
                                     ShuffledDataset* shuffled_out) {
  BUDS_RETURN_IF_ERROR(ValidateConfig(config));
  if (dataset.num_rows() == 0) {
    return absl::InvalidArgumentError("dataset has no rows");
  }
  BUDS_ASSIGN_OR_RETURN(EncodedDataset encoded, OneHotEncode(dataset));
  BUDS_ASSIGN_OR_RETURN(QuerySpec query, ParseQuery(query_text));
  BUDS_ASSIGN_OR_RETURN(CompiledQuery compiled,
                        CompileQuery(query, encoded.schema));
  BUDS_ASSIGN_OR_RETURN(std::vector<std::string> relevant,
                        RelevantAttributes(query, encoded.schema));

  Scheme scheme;
  if (config.t.has_value()) {
    scheme = {*config.t, *config.S};
  } else {
    if (config.mode == ShuffleMode::kCumulative) {
      return absl::InvalidArgumentError(
          "scheme selection only considers IS; give t and S for CIS");
    }
    BUDS_ASSIGN_OR_RETURN(
        SchemeSelection selection,
        SelectScheme(MakeRiskConfig(config, {query}), encoded,
                     DeriveSeed(config.seed, "scheme-selection")));
    scheme = selection.best;
  }

  const std::size_t n = encoded.num_rows();
  BUDS_ASSIGN_OR_RETURN(std::vector<std::size_t> batch_sizes,
                        PlanBatches(n, static_cast<std::size_t>(scheme.t)));
  const auto n1 = static_cast<std::int64_t>(batch_sizes.front());
  BUDS_ASSIGN_OR_RETURN(PrivacyAccount account,
                        Account(config.mode, scheme.t, n1, scheme.S));
  if (config.mode == ShuffleMode::kCumulative && account.epsilon < 0) {
    return absl::FailedPreconditionError(absl::StrFormat(
        "refusing CIS report: epsilon = ln(1/(n1-1)^S) = %.6f is negative "
        "(n1=%d, S=%d); use IS",
        account.epsilon, n1, scheme.S));
  }

  BUDS_ASSIGN_OR_RETURN(TiedDataset tied, TieAttributes(encoded, relevant));
  BUDS_ASSIGN_OR_RETURN(std::int64_t c, CountQuery(encoded, compiled));
  const std::vector<std::string> channels = tied.ChannelNames();

  std::optional<ShuffledDataset> last;
  BUDS_ASSIGN_OR_RETURN(
      RetryOutcome outcome,
      RetryUntilBounded(
          c, account.epsilon, config.max_retries,
          [&](int attempt) -> absl::StatusOr<std::int64_t> {
            const std::uint64_t attempt_seed =
                DeriveSeed(config.seed, "pipeline-attempt",
                           {static_cast<std::uint64_t>(attempt)});
            BUDS_ASSIGN_OR_RETURN(
                ShufflePlan plan,
                MakeShufflePlan(n, static_cast<std::size_t>(scheme.t),
                                channels, scheme.S, attempt_seed));
            absl::StatusOr<ShuffledDataset> shuffled =
                config.mode == ShuffleMode::kIterative
                    ? IterativeShuffle(tied, plan, {config.num_threads})
                    : CumulativeIterativeShuffle(tied, plan);
            if (!shuffled.ok()) return shuffled.status();
            last = *std::move(shuffled);
            return CountQuery(last->table, compiled);
          }));

  DPReport report;
  report.query = query.ToString();
  report.c_prime = outcome.utility.c_prime;
  report.epsilon_signed = account.epsilon;
  report.epsilon_report = account.epsilon_report;
  report.loss_bound = outcome.utility.loss_bound;
  report.plan_digest = last->plan_digest;
  report.seed = config.seed;
  report.retries_used = outcome.attempt;
  report.scheme = scheme;
  report.n1 = n1;
  report.mode = config.mode;
  report.bound_status = "satisfied";
  if (shuffled_out != nullptr) *shuffled_out = *std::move(last);
  return report;
}

absl::StatusOr<DPReport> RunPipeline(const PipelineConfig& config,
                                     const Schema& schema,
                                     const std::string& dataset_path,
                                     absl::string_view query_text,
                                     ShuffledDataset* shuffled_out) {
  BUDS_ASSIGN_OR_RETURN(Dataset dataset, LoadCsv(dataset_path, schema));
  return RunPipeline(config, dataset, query_text, shuffled_out);
}

absl::StatusOr<SchemeSelection> RunRiskSweep(const PipelineConfig& config,
                                             const Dataset& dataset,
                                             absl::string_view query_text) {
  if (config.hypothesis_grid.empty()) {
    return absl::InvalidArgumentError("risk sweep needs a hypothesis_grid");
  }
  std::vector<QuerySpec> workload;
  if (!query_text.empty()) {
    BUDS_ASSIGN_OR_RETURN(QuerySpec query, ParseQuery(query_text));
    workload.push_back(std::move(query));
  }
  for (const std::string& text : config.workload) {
    BUDS_ASSIGN_OR_RETURN(QuerySpec query, ParseQuery(text));
    workload.push_back(std::move(query));
  }
  BUDS_ASSIGN_OR_RETURN(EncodedDataset encoded, OneHotEncode(dataset));
  return SelectScheme(MakeRiskConfig(config, std::move(workload)), encoded,
                      DeriveSeed(config.seed, "scheme-selection"));
}

Table3Comparison ReproduceTable3() {
  Table3Comparison comparison;
  for (const PublishedRow& published : kPublishedRows) {
    Table3Row row;
    row.n = published.n;
    row.t = published.t;
    row.n1 = published.n1;
    row.S = published.S;
    row.epsilon_signed = *EpsilonIs(published.t, published.n1, published.S);
    row.epsilon_magnitude = std::abs(row.epsilon_signed);
    row.epsilon_published = published.epsilon;
    row.delta = std::abs(row.epsilon_magnitude - row.epsilon_published);
    row.within_tolerance = row.delta <= kTable3Tolerance;

    std::vector<std::string> notes;
    if (!row.within_tolerance) {
      notes.push_back(absl::StrFormat("|delta| %.4f exceeds %.3f", row.delta,
                                      kTable3Tolerance));
    }
    if (row.epsilon_signed < 0) {
      notes.push_back("formula epsilon is negative; published value is its "
                      "magnitude");
    }
    if (row.epsilon_published > 0 &&
        row.delta > kTable3RelativeFlag * row.epsilon_published) {
      notes.push_back(absl::StrFormat("relative deviation %.0f%%",
                                      100 * row.delta / row.epsilon_published));
    }
    const std::int64_t ceil_n1 = (row.n + row.t - 1) / row.t;
    if (!notes.empty() && ceil_n1 != row.n1) {
      notes.push_back(
          absl::StrFormat("published n1=%d, ceil(n/t)=%d", row.n1, ceil_n1));
    }
    row.discrepancy = !notes.empty();
    row.note = absl::StrJoin(notes, "; ");
    if (row.within_tolerance) ++comparison.matches;
    comparison.rows.push_back(std::move(row));
  }
  return comparison;
}

nlohmann::json Table3ToJson(const Table3Comparison& comparison) {
  nlohmann::json json;
  json["tolerance"] = kTable3Tolerance;
  json["matches_within_tolerance"] = comparison.matches;
  json["rows"] = nlohmann::json::array();
  json["discrepancies"] = nlohmann::json::array();
  for (std::size_t i = 0; i < comparison.rows.size(); ++i) {
    const Table3Row& row = comparison.rows[i];
    nlohmann::json entry = {{"row", i + 1},
                            {"n", row.n},
                            {"t", row.t},
                            {"n1", row.n1},
                            {"S", row.S},
                            {"epsilon_formula_signed", row.epsilon_signed},
                            {"epsilon_formula_magnitude", row.epsilon_magnitude},
                            {"epsilon_published", row.epsilon_published},
                            {"abs_difference", row.delta},
                            {"within_tolerance", row.within_tolerance}};
    json["rows"].push_back(entry);
    if (row.discrepancy) {
      entry["note"] = row.note;
      json["discrepancies"].push_back(std::move(entry));
    }
  }
  return json;
}

std::string Table3ToText(const Table3Comparison& comparison) {
  std::string out = absl::StrFormat(
      "%3s %10s %8s %4s %2s %12s %10s %10s %9s %s\n", "row", "n", "t", "n1",
      "S", "eps_signed", "|eps|", "published", "|diff|", "match");
  for (std::size_t i = 0; i < comparison.rows.size(); ++i) {
    const Table3Row& row = comparison.rows[i];
    absl::StrAppend(
        &out, absl::StrFormat("%3d %10d %8d %4d %2d %12.4f %10.4f %10.2f %9.4f %s\n",
                              i + 1, row.n, row.t, row.n1, row.S,
                              row.epsilon_signed, row.epsilon_magnitude,
                              row.epsilon_published, row.delta,
                              row.within_tolerance ? "yes" : "no"));
  }
  absl::StrAppend(&out,
                  absl::StrFormat("\n%d of %d rows within +/-%.3f\n",
                                  comparison.matches, comparison.rows.size(),
                                  kTable3Tolerance));
  absl::StrAppend(&out, "\nDiscrepancies:\n");
  for (std::size_t i = 0; i < comparison.rows.size(); ++i) {
    const Table3Row& row = comparison.rows[i];
    if (!row.discrepancy) continue;
    absl::StrAppend(&out, absl::StrFormat(
                              "  row %d: computed %.4f vs published %.2f "
                              "(delta %+.4f): %s\n",
                              i + 1, row.epsilon_signed, row.epsilon_published,
                              row.epsilon_magnitude - row.epsilon_published,
                              row.note));
  }
  return out;
}

}  // namespace buds
