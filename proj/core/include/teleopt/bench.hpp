#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "teleopt/meta.hpp"
#include "teleopt/optim.hpp"
#include "teleopt/tasks.hpp"

namespace teleopt::bench {

struct DistributionSpec {
  tasks::Family family = tasks::Family::kEllipse;
  tasks::Mode mode = tasks::Mode::kFixed;
  double det_min = tasks::kDetMin;    // rejection-threshold knobs
  double coef_min = tasks::kCoefMin;

  tasks::TaskDistribution to_distribution() const {
    return {family, mode, det_min, coef_min};
  }
};

// One optimizer entry of a suite. `kind` is one of gd, momentum, newton,
// teleport_gd, l2o. alpha_auto picks 1/L per task (exact for ellipses, local
// Hessian estimate for Rosenbrock).
struct OptimizerSpec {
  std::string kind = "gd";
  std::string label;  // defaults to kind (or l2o_<variant>)
  double alpha = 0.0;
  bool alpha_auto = true;
  double beta = 0.9;                   // momentum only
  std::vector<int> teleport_schedule;  // teleport_gd; empty = every step
  sym::OracleSettings oracle;          // teleport_gd knobs
  meta::L2OConfig train;               // l2o only
  std::uint64_t train_seed = 1;
  std::string checkpoint;  // l2o: load instead of training when non-empty

  std::string effective_label() const;
};

struct ExperimentConfig {
  std::string name = "suite";
  DistributionSpec dist;
  std::vector<OptimizerSpec> optimizers;
  std::vector<std::uint64_t> seeds;  // held-out evaluation task seeds
  int steps = 40;
  std::string out_dir = "out";
  bool plots = true;
};

void validate(const ExperimentConfig& config);

// JSON: a single suite object or {"suites": [...]}.
std::vector<ExperimentConfig> parse_configs(const std::string& json_text);
std::vector<ExperimentConfig> load_configs(const std::filesystem::path& path);

struct ResultRow {
  std::string optimizer;
  std::uint64_t seed = 0;
  int step = 0;
  double f = 0.0;
  double grad_norm = 0.0;
};

struct AggregateRow {
  std::string optimizer;
  int step = 0;
  double mean = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  int count = 0;
};

// Per-(optimizer, seed, step) objective values plus derived aggregates.
// A run is divergent when it stopped before `steps` or its final f breaches
// the guard; divergent runs are excluded from aggregates but counted.
struct ResultsTable {
  int steps = 0;
  std::vector<ResultRow> rows;  // sorted by (optimizer, seed, step)
  std::map<std::string, double> divergence_rate;
  std::map<std::string, std::string> notes;  // e.g. held-out seed check

  std::vector<AggregateRow> aggregates() const;
  std::vector<std::string> optimizer_labels() const;
};

// Trains (or loads) the L2O entries, evaluates every optimizer on the same
// held-out task set, and aggregates. Per-run failures are recorded and the
// suite continues; it throws only if every run failed.
ResultsTable run_suite(const ExperimentConfig& config);

// CSV schema: optimizer,seed,step,f,grad_norm.
void export_csv(const ResultsTable& table, std::ostream& os);
void export_csv(const ResultsTable& table, const std::filesystem::path& path);
ResultsTable import_csv(std::istream& is);
ResultsTable import_csv(const std::filesystem::path& path);

// JSON mirror of the CSV plus aggregates and divergence rates.
void export_json(const ResultsTable& table, const std::filesystem::path& path);

// Median + IQR log-loss plot, one line per optimizer.
void emit_plots(const ResultsTable& table, const std::filesystem::path& svg_path,
                const std::string& title);

// Entry point behind the `teleopt` binary; args exclude the program name.
// Exit codes: 0 success, 1 failed verification property, 2 config/usage error.
int run_cli(std::vector<std::string> args);

}  // namespace teleopt::bench
