#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbfpa/envs.hpp"
#include "cbfpa/rl_adapt.hpp"
#include "cbfpa/scalar_flow.hpp"

namespace cbfpa {

enum class ExperimentKind {
  IllustrativeSweep,
  CartpolePretrain,
  CartpoleAdapt,
  UnicyclePretrain,
  UnicycleAdaptGoal,
  UnicycleAdaptObstacle,
  OracleFuzz,
};

const char* experiment_kind_name(ExperimentKind kind);

struct EvalConfig {
  int episodes = 5;   // evaluation rollouts per trial
  int horizon = 500;  // evaluation episode length
  int starts = 10;    // seeded initial states for unicycle goal/collision checks
};

struct FuzzConfig {
  int instances = 10000;
  double component_range = 10.0;  // gradient components drawn from [-r, r]
  double value_range = 5.0;       // g_ref / g_now drawn from [-r, r]
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Declarative experiment description. Parsed strictly from a JSON file:
// unknown keys are rejected, ranges are checked, and the parsed form
// round-trips to an identical canonical serialization.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::IllustrativeSweep;
  std::string output_dir;
  int trials = 1;
  std::uint64_t base_seed = 0;
  std::vector<double> w_grid{0.001, 0.01, 0.1, 1.0, 10.0};
  std::vector<double> gamma_h_grid{10.0};
  std::vector<double> alpha_grid{0.001};
  int steps = 20000;                                    // illustrative flow length
  std::vector<FlowMethod> methods{FlowMethod::CbfPa, FlowMethod::Gd, FlowMethod::Mogd};
  std::vector<TrainMode> adapt_modes{TrainMode::AdaptCbfPa, TrainMode::AdaptMorl,
                                     TrainMode::AdaptBc};
  TrainConfig train;     // adaptation stage (or the only stage for pretrain kinds)
  TrainConfig pretrain;  // pretraining stage of adapt kinds
  // When set, adapt kinds load checkpoints named pretrain_trial<k>_{actor,
  // critic}.net from this directory instead of pretraining in-run.
  std::string pretrained_dir;
  EvalConfig eval;
  CartpoleParams cartpole;
  UnicycleParams unicycle;
  FuzzConfig fuzz;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
std::string canonical_config(const ExperimentConfig& config);

// One logged metric value for one grid cell and trial.
struct MetricRow {
  std::string method;
  double w = 0.0, gamma_h = 0.0, alpha = 0.0;
  std::string metric;
  int trial = 0;
  double value = 0.0;
};

struct AggregateRow {
  std::string method;
  double w = 0.0, gamma_h = 0.0, alpha = 0.0;
  std::string metric;
  double mean = 0.0, std_dev = 0.0, min = 0.0, max = 0.0;
  int count = 0;
};

struct AggregateReport {
  std::vector<AggregateRow> rows;
  const AggregateRow* find(const std::string& method, double w, double gamma_h,
                           double alpha, const std::string& metric) const;
};

AggregateReport aggregate_metrics(std::vector<MetricRow> rows);
void write_metrics_csv(const std::vector<MetricRow>& rows, const std::string& path);
void write_aggregate_csv(const AggregateReport& report, const std::string& path);
AggregateReport load_aggregate_csv(const std::string& path);
std::vector<MetricRow> load_metrics_csv(const std::string& path);

// Executes every grid cell x trial (trial seed = base_seed + trial index),
// writing raw per-trial CSVs, metrics.csv and aggregate.csv under
// output_dir. Reruns of the same config produce byte-identical files.
// CBFPA_OUTPUT_DIR overrides the output directory, CBFPA_PARALLEL the
// worker count; nothing else is read from the environment.
AggregateReport run_experiment(const ExperimentConfig& config);

struct MethodCell {
  double final_j = 0.0;
  double g_bar = 0.0;
  double violations = 0.0;
};

struct ComparisonRow {
  double w = 0.0, gamma_h = 0.0, alpha = 0.0;
  std::map<std::string, MethodCell> per_method;
  bool cbfpa_le_mogd = false;  // Remark-1 inequality marker for this cell
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
};

// Merges illustrative-sweep aggregates and builds the per-w comparison of
// final J, G-bar and violation counts per method. Throws on grid mismatch.
ComparisonTable compare_methods(const std::vector<AggregateReport>& reports);
void write_comparison_csv(const ComparisonTable& table, const std::string& path);
std::string format_comparison(const ComparisonTable& table);

struct OracleFuzzResult {
  int instances = 0;
  double max_da_inf = 0.0;    // worst |a_closed - a_oracle| (infinity norm)
  double max_dc = 0.0;        // worst |c*_closed - c*_oracle|
  double min_residual = 0.0;  // most negative barrier residual seen
  std::uint64_t hard_active = 0;
  double seconds = 0.0;
};

// Randomized equivalence sweep between the closed-form controller and the
// KKT enumeration oracle over p in {1..8}, gamma_h in {0.1,1,10} and
// w in {0.01,1,100}. Writes one row per instance when raw_csv_path is set.
OracleFuzzResult run_oracle_fuzz(int instances, std::uint64_t seed,
                                 double component_range = 10.0,
                                 double value_range = 5.0,
                                 const std::string& raw_csv_path = "");

}  // namespace cbfpa
