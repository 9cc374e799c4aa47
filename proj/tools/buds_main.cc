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

// Command-line front end: run, epsilon, risk-sweep, table3, oracle-rr.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "buds/dataset.h"
#include "buds/pipeline.h"
#include "buds/privacy.h"
#include "buds/shuffler.h"
#include "buds/utility.h"
#include "nlohmann/json.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitRefused = 2;
constexpr int kExitRetriesExhausted = 3;

int Fail(const absl::Status& status) {
  std::cerr << "error: " << status << "\n";
  switch (status.code()) {
    case absl::StatusCode::kFailedPrecondition:
      return kExitRefused;
    case absl::StatusCode::kResourceExhausted:
      return kExitRetriesExhausted;
    default:
      return kExitError;
  }
}

bool WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  out << contents;
  return static_cast<bool>(out);
}

struct RunArgs {
  std::string schema;
  std::string data;
  std::string query;
  std::string config;
  std::string output;
  std::string export_shuffled;
  std::string epsilon_log;
  bool json = false;
};

int Run(const RunArgs& args) {
  absl::StatusOr<buds::Schema> schema = buds::Schema::Load(args.schema);
  if (!schema.ok()) return Fail(schema.status());
  for (const std::string& warning : buds::LargeDomainWarnings(*schema)) {
    std::cerr << "warning: " << warning << "\n";
  }
  absl::StatusOr<buds::PipelineConfig> config =
      buds::LoadPipelineConfig(args.config);
  if (!config.ok()) return Fail(config.status());

  buds::ShuffledDataset shuffled;
  absl::StatusOr<buds::DPReport> report = buds::RunPipeline(
      *config, *schema, args.data, args.query,
      args.export_shuffled.empty() ? nullptr : &shuffled);
  if (!report.ok()) return Fail(report.status());

  const std::string json = buds::ReportToJson(*report).dump(2) + "\n";
  if (!args.output.empty() && !WriteFile(args.output, json)) {
    return Fail(absl::UnavailableError("cannot write " + args.output));
  }
  if (!args.export_shuffled.empty()) {
    absl::Status status = buds::ExportShuffledCsv(shuffled, args.export_shuffled);
    if (!status.ok()) return Fail(status);
  }
  if (!args.epsilon_log.empty()) {
    // Per-query epsilon history; entries are not composed.
    std::ofstream log(args.epsilon_log, std::ios::app);
    log << nlohmann::json{{"query", report->query},
                          {"epsilon_signed", report->epsilon_signed},
                          {"seed", report->seed}}
               .dump()
        << "\n";
  }
  std::cout << (args.json ? json : buds::ReportToText(*report));
  return 0;
}

struct EpsilonArgs {
  std::optional<std::int64_t> n;
  std::optional<std::int64_t> n1;
  std::int64_t t = 1;
  int S = 2;
  bool json = false;
};

int Epsilon(const EpsilonArgs& args) {
  if (args.n.has_value() == args.n1.has_value()) {
    return Fail(absl::InvalidArgumentError("give exactly one of --n or --n1"));
  }
  std::int64_t n1 = 0;
  if (args.n.has_value()) {
    if (args.t < 1 || args.t > *args.n) {
      return Fail(absl::InvalidArgumentError("need 1 <= t <= n"));
    }
    n1 = (*args.n + args.t - 1) / args.t;
  } else {
    n1 = *args.n1;
  }
  absl::StatusOr<buds::PrivacyAccount> is =
      buds::AccountIterative(args.t, n1, args.S);
  if (!is.ok()) return Fail(is.status());
  absl::StatusOr<buds::PrivacyAccount> cis =
      buds::AccountCumulative(args.t, n1, args.S);
  if (!cis.ok()) return Fail(cis.status());

  constexpr std::size_t kShownTerms = 5;
  nlohmann::json json;
  if (args.n.has_value()) json["n"] = *args.n;
  json["t"] = args.t;
  json["n1"] = n1;
  json["S"] = args.S;
  json["rr_batch"] = is->rr_per_batch.front();
  json["IS"] = {{"rr_total", is->rr_total},
                {"epsilon_signed", is->epsilon},
                {"epsilon_report", is->epsilon_report}};
  std::vector<double> cis_terms(
      cis->rr_per_batch.begin(),
      cis->rr_per_batch.begin() +
          std::min(kShownTerms, cis->rr_per_batch.size()));
  json["CIS"] = {{"rr_terms_leading", cis_terms},
                 {"rr_total", cis->rr_total},
                 {"epsilon_signed", cis->epsilon},
                 {"epsilon_report", cis->epsilon_report},
                 {"refused", cis->epsilon < 0}};
  json["epsilon_difference_is_minus_cis"] = is->epsilon - cis->epsilon;

  if (args.json) {
    std::cout << json.dump(2) << "\n";
    return 0;
  }
  std::cout << absl::StrFormat("t=%d n1=%d S=%d\n", args.t, n1, args.S);
  std::cout << absl::StrFormat("%-5s %14s %14s %12s\n", "mode", "RR_total",
                               "eps_signed", "|eps|");
  std::cout << absl::StrFormat("%-5s %14.6g %14.6f %12.6f\n", "IS",
                               is->rr_total, is->epsilon, is->epsilon_report);
  std::cout << absl::StrFormat("%-5s %14.6g %14.6f %12.6f%s\n", "CIS",
                               cis->rr_total, cis->epsilon, cis->epsilon_report,
                               cis->epsilon < 0 ? "  (negative: refused)" : "");
  std::cout << absl::StrFormat("RR per batch = 1/(n1-1)^S = %.6g\n",
                               is->rr_per_batch.front());
  std::cout << "CIS stage terms:";
  for (double term : cis_terms) std::cout << absl::StrFormat(" %.3g", term);
  std::cout << (cis->rr_per_batch.size() > kShownTerms ? " ...\n" : "\n");
  return 0;
}

struct SweepArgs {
  std::string schema;
  std::string data;
  std::string config;
  std::string query;
  bool json = false;
};

int RiskSweep(const SweepArgs& args) {
  absl::StatusOr<buds::Schema> schema = buds::Schema::Load(args.schema);
  if (!schema.ok()) return Fail(schema.status());
  absl::StatusOr<buds::PipelineConfig> config =
      buds::LoadPipelineConfig(args.config);
  if (!config.ok()) return Fail(config.status());
  absl::StatusOr<buds::Dataset> dataset = buds::LoadCsv(args.data, *schema);
  if (!dataset.ok()) return Fail(dataset.status());
  absl::StatusOr<buds::SchemeSelection> selection =
      buds::RunRiskSweep(*config, *dataset, args.query);
  if (!selection.ok()) return Fail(selection.status());

  if (args.json) {
    std::cout << buds::SelectionToJson(*selection).dump(2) << "\n";
    return 0;
  }
  std::cout << absl::StrFormat("%4s %8s %3s %6s %10s %10s %10s %12s\n", "rank",
                               "t", "S", "n1", "epsilon", "mean_loss", "risk",
                               "risk_bound");
  for (std::size_t i = 0; i < selection->ranked.size(); ++i) {
    const buds::SchemeRisk& row = selection->ranked[i];
    std::cout << absl::StrFormat("%4d %8d %3d %6d %10.4f %10.4f %10.4f %12.4f\n",
                                 i + 1, row.scheme.t, row.scheme.S, row.n1,
                                 row.epsilon, row.risk.mean_loss,
                                 row.risk.risk, row.risk.bound);
  }
  std::cout << absl::StrFormat("selected: t=%d S=%d\n", selection->best.t,
                               selection->best.S);
  return 0;
}

int Table3(const std::string& output, bool json) {
  const buds::Table3Comparison comparison = buds::ReproduceTable3();
  const std::string json_text = buds::Table3ToJson(comparison).dump(2) + "\n";
  if (!output.empty() && !WriteFile(output, json_text)) {
    return Fail(absl::UnavailableError("cannot write " + output));
  }
  std::cout << (json ? json_text : buds::Table3ToText(comparison));
  return 0;
}

struct OracleArgs {
  std::int64_t n1 = 3;
  int S = 2;
  std::int64_t trials = 1000000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool json = false;
};

int OracleRr(const OracleArgs& args) {
  absl::StatusOr<buds::RrEstimate> estimate = buds::EstimateRrMonteCarlo(
      args.n1, args.S, args.trials, args.seed, {true, args.threads});
  if (!estimate.ok()) return Fail(estimate.status());
  absl::StatusOr<double> analytic = buds::RrBatch(args.n1, args.S);
  if (!analytic.ok()) return Fail(analytic.status());
  const double z = (estimate->ratio - *analytic) / estimate->standard_error;
  if (args.json) {
    std::cout << nlohmann::json{{"n1", args.n1},
                                {"S", args.S},
                                {"trials", estimate->trials},
                                {"seed", args.seed},
                                {"fixed_in_all", estimate->fixed_in_all},
                                {"displaced_in_all", estimate->displaced_in_all},
                                {"ratio", estimate->ratio},
                                {"standard_error", estimate->standard_error},
                                {"analytic", *analytic},
                                {"z", z}}
                     .dump(2)
              << "\n";
    return 0;
  }
  std::cout << absl::StrFormat(
      "n1=%d S=%d trials=%d\nempirical RR = %.6g +/- %.2g (fixed %d, "
      "displaced %d)\nanalytic  RR = 1/(n1-1)^S = %.6g\nz = %+.3f\n",
      args.n1, args.S, estimate->trials, estimate->ratio,
      estimate->standard_error, estimate->fixed_in_all,
      estimate->displaced_in_all, *analytic, z);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shuffle-model differentially private count reports"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Produce a DP report for a query");
  run->add_option("--schema", run_args.schema, "Schema JSON")->required();
  run->add_option("--data", run_args.data, "Dataset CSV")->required();
  run->add_option("--query", run_args.query, "Count query text")->required();
  run->add_option("--config", run_args.config, "Pipeline config JSON")
      ->required();
  run->add_option("--output", run_args.output, "Write report JSON here");
  run->add_option("--export-shuffled", run_args.export_shuffled,
                  "Write the shuffled table as CSV (+ provenance sidecar)");
  run->add_option("--epsilon-log", run_args.epsilon_log,
                  "Append the query's epsilon to this JSON-lines log");
  run->add_flag("--json", run_args.json, "Print JSON instead of text");

  EpsilonArgs eps_args;
  CLI::App* epsilon =
      app.add_subcommand("epsilon", "Privacy budget for IS and CIS");
  epsilon->add_option("--n", eps_args.n, "Row count (n1 = ceil(n/t))");
  epsilon->add_option("--n1", eps_args.n1, "Batch size");
  epsilon->add_option("--t", eps_args.t, "Batch count")->required();
  epsilon->add_option("--S", eps_args.S, "Shuffler count")->required();
  epsilon->add_flag("--json", eps_args.json, "Print JSON");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand(
      "risk-sweep", "Rank the hypothesis grid by regularized empirical risk");
  sweep->add_option("--schema", sweep_args.schema, "Schema JSON")->required();
  sweep->add_option("--data", sweep_args.data, "Dataset CSV")->required();
  sweep->add_option("--config", sweep_args.config, "Config JSON")->required();
  sweep->add_option("--query", sweep_args.query,
                    "Workload query (in addition to config.workload)");
  sweep->add_flag("--json", sweep_args.json, "Print JSON");

  std::string table3_output;
  bool table3_json = false;
  CLI::App* table3 = app.add_subcommand(
      "table3", "Compare the epsilon formula with the published reference grid");
  table3->add_option("--output", table3_output, "Write comparison JSON here");
  table3->add_flag("--json", table3_json, "Print JSON");

  OracleArgs oracle_args;
  CLI::App* oracle = app.add_subcommand(
      "oracle-rr", "Monte-Carlo estimate of the batch randomized-response ratio");
  oracle->add_option("--n1", oracle_args.n1, "Batch size")->required();
  oracle->add_option("--S", oracle_args.S, "Shuffler count")->required();
  oracle->add_option("--trials", oracle_args.trials, "Trials");
  oracle->add_option("--seed", oracle_args.seed, "Seed");
  oracle->add_option("--threads", oracle_args.threads, "Worker threads");
  oracle->add_flag("--json", oracle_args.json, "Print JSON");

  CLI11_PARSE(app, argc, argv);

  if (*run) return Run(run_args);
  if (*epsilon) return Epsilon(eps_args);
  if (*sweep) return RiskSweep(sweep_args);
  if (*table3) return Table3(table3_output, table3_json);
  if (*oracle) return OracleRr(oracle_args);
  return kExitError;
}
