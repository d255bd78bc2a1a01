#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbfpa/experiment.hpp"

namespace {

// Failures print one machine-readable JSON line to stderr.
int fail(const std::string& kind, const std::string& message) {
  nlohmann::json diag;
  diag["error"] = kind;
  diag["message"] = message;
  std::cerr << diag.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CBF-based policy adaptation experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("config", config_path, "config file")->required();

  std::string validate_path;
  auto* validate_cmd =
      app.add_subcommand("validate", "parse a config and print its canonical form");
  validate_cmd->add_option("config", validate_path, "config file")->required();

  std::vector<std::string> compare_dirs;
  std::string compare_out = "comparison.csv";
  auto* compare_cmd =
      app.add_subcommand("compare", "compare method aggregates from run directories");
  compare_cmd->add_option("dirs", compare_dirs, "run output directories")->required();
  compare_cmd->add_option("--out", compare_out, "comparison CSV path");

  int fuzz_instances = 10000;
  std::uint64_t fuzz_seed = 0;
  auto* fuzz_cmd = app.add_subcommand("fuzz-oracle",
                                      "closed form vs KKT oracle equivalence sweep");
  fuzz_cmd->add_option("--instances", fuzz_instances, "instance count");
  fuzz_cmd->add_option("--seed", fuzz_seed, "rng seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const cbfpa::ExperimentConfig config = cbfpa::parse_config_file(config_path);
      const cbfpa::AggregateReport report = cbfpa::run_experiment(config);
      std::cout << "wrote " << report.rows.size() << " aggregate rows under "
                << config.output_dir << "\n";
      for (const cbfpa::AggregateRow& r : report.rows) {
        std::printf("%s w=%g gamma_h=%g alpha=%g %s mean=%.6g std=%.3g n=%d\n",
                    r.method.c_str(), r.w, r.gamma_h, r.alpha, r.metric.c_str(), r.mean,
                    r.std_dev, r.count);
      }
      return 0;
    }
    if (*validate_cmd) {
      const cbfpa::ExperimentConfig config = cbfpa::parse_config_file(validate_path);
      std::cout << cbfpa::canonical_config(config);
      return 0;
    }
    if (*compare_cmd) {
      std::vector<cbfpa::AggregateReport> reports;
      for (const std::string& dir : compare_dirs) {
        reports.push_back(cbfpa::load_aggregate_csv(dir + "/aggregate.csv"));
      }
      const cbfpa::ComparisonTable table = cbfpa::compare_methods(reports);
      cbfpa::write_comparison_csv(table, compare_out);
      std::cout << cbfpa::format_comparison(table);
      return 0;
    }
    if (*fuzz_cmd) {
      const cbfpa::OracleFuzzResult r = cbfpa::run_oracle_fuzz(fuzz_instances, fuzz_seed);
      std::printf("instances=%d max|da|_inf=%.3e max|dc|=%.3e min_residual=%.3e "
                  "hard_active=%llu seconds=%.2f\n",
                  r.instances, r.max_da_inf, r.max_dc, r.min_residual,
                  static_cast<unsigned long long>(r.hard_active), r.seconds);
      if (r.max_da_inf > 1e-8 || r.max_dc > 1e-8 || r.min_residual < -1e-10) {
        return fail("oracle_mismatch", "closed form and KKT oracle disagree");
      }
      return 0;
    }
  } catch (const cbfpa::ConfigError& e) {
    return fail("config", e.what()) + 1;  // exit 2 on config problems
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}
