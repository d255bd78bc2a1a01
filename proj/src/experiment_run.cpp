#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

#include "cbfpa/csv.hpp"
#include "cbfpa/experiment.hpp"

namespace fs = std::filesystem;

namespace cbfpa {

namespace {

// Discretization slack used when counting constraint violations in logs;
// matches the forward-invariance tolerance at alpha = 0.001.
constexpr double kEpsDisc = 1e-2;

int parallel_width() {
  if (const char* env = std::getenv("CBFPA_PARALLEL")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(0..n-1) on a fixed-size worker pool. Tasks write into
// preallocated slots, so scheduling order never affects the output.
void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(n, parallel_width());
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string cell_tag(const std::string& stem, double w, double gamma_h, double alpha,
                     int trial) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s_w%g_g%g_a%g_trial%d", stem.c_str(), w, gamma_h,
                alpha, trial);
  return buf;
}

struct Cell {
  double w, gamma_h, alpha;
};

std::vector<Cell> make_cells(const ExperimentConfig& c) {
  std::vector<Cell> cells;
  for (double w : c.w_grid) {
    for (double g : c.gamma_h_grid) {
      for (double a : c.alpha_grid) cells.push_back({w, g, a});
    }
  }
  return cells;
}

const char* mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::Pretrain: return "pretrain";
    case TrainMode::AdaptCbfPa: return "cbfpa";
    case TrainMode::AdaptMorl: return "morl";
    case TrainMode::AdaptBc: return "bc";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Illustrative sweep

std::vector<MetricRow> run_illustrative_task(const ExperimentConfig& c, const Cell& cell,
                                             FlowMethod method, int trial,
                                             const fs::path& dir) {
  const ObjectivePair obj = illustrative_objectives();
  const FlowTrace trace =
      run_flow(obj, method, c.steps, cell.alpha, cell.gamma_h, cell.w);
  write_flow_csv(trace, (dir / flow_csv_name(method, cell.w, cell.gamma_h, cell.alpha)).string());

  int violations = 0;
  for (std::size_t k = 0; k < trace.g_values.size(); ++k) {
    if (trace.g_values[k] - obj.g_ref > trace.c_stars[k] + kEpsDisc) ++violations;
  }
  const std::string m = flow_method_name(method);
  std::vector<MetricRow> rows;
  auto add = [&](const std::string& metric, double value) {
    rows.push_back({m, cell.w, cell.gamma_h, cell.alpha, metric, trial, value});
  };
  add("final_j", trace.j_values.back());
  add("final_g", trace.g_values.back());
  add("g_bar", trace.g_bar);
  add("final_c_star", trace.c_stars.back());
  add("violations", static_cast<double>(violations));
  add("diverged", trace.diverged ? 1.0 : 0.0);
  return rows;
}

std::vector<MetricRow> run_illustrative(const ExperimentConfig& c, const fs::path& out) {
  const std::vector<Cell> cells = make_cells(c);
  struct Task {
    Cell cell;
    FlowMethod method;
    int trial;
  };
  std::vector<Task> tasks;
  for (int trial = 0; trial < c.trials; ++trial) {
    for (const Cell& cell : cells) {
      for (FlowMethod m : c.methods) tasks.push_back({cell, m, trial});
    }
  }
  for (int trial = 0; trial < c.trials; ++trial) {
    fs::create_directories(out / ("trial" + std::to_string(trial)));
  }
  std::vector<std::vector<MetricRow>> slots(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), [&](int i) {
    const Task& t = tasks[i];
    slots[i] = run_illustrative_task(c, t.cell, t.method, t.trial,
                                     out / ("trial" + std::to_string(t.trial)));
  });
  std::vector<MetricRow> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  return rows;
}

// ---------------------------------------------------------------------------
// RL experiments

std::unique_ptr<Environment> make_env(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::CartpolePretrain:
    case ExperimentKind::CartpoleAdapt:
      return std::make_unique<CartpoleEnv>(c.cartpole);
    case ExperimentKind::UnicyclePretrain:
      return std::make_unique<UnicycleEnv>(c.unicycle, UnicycleTask::AvoidOnly);
    case ExperimentKind::UnicycleAdaptGoal:
      return std::make_unique<UnicycleEnv>(c.unicycle, UnicycleTask::AvoidOnly);
    case ExperimentKind::UnicycleAdaptObstacle:
      return std::make_unique<UnicycleEnv>(c.unicycle, UnicycleTask::TwoObstacles);
    default:
      throw std::logic_error("make_env: not an environment kind");
  }
}

// Pretraining stage environment: the second unicycle adaptation pretrains on
// the combined avoid+goal original task.
std::unique_ptr<Environment> make_pretrain_env(const ExperimentConfig& c) {
  if (c.kind == ExperimentKind::UnicycleAdaptObstacle) {
    return std::make_unique<UnicycleEnv>(c.unicycle, UnicycleTask::AvoidPlusGoal);
  }
  return make_env(c);
}

struct EvalSummary {
  double cost_original = 0.0;         // mean over eval episodes of the episode sum
  double cost_additional_mean = 0.0;  // mean over eval episodes of per-step mean
};

EvalSummary summarize_eval(const std::vector<EvalEpisode>& eps) {
  EvalSummary s;
  for (const EvalEpisode& e : eps) {
    s.cost_original += e.cost_original_sum;
    s.cost_additional_mean += e.cost_additional_mean;
  }
  const double n = static_cast<double>(eps.size());
  s.cost_original /= n;
  s.cost_additional_mean /= n;
  return s;
}

struct UnicycleEvalStats {
  int reach_count = 0;
  int collision1_steps = 0;
  int collision2_steps = 0;
  double mean_min_goal_dist = 0.0;
};

// Rolls the policy out from `starts` seeded initial states. Seeds whose
// start is already inside an obstacle are skipped (an episode spawned in
// collision cannot certify avoidance); the policy is judged on whether it
// ever steers into an obstacle afterwards.
UnicycleEvalStats evaluate_unicycle(const UnicycleEnv& env, const Mlp& actor, int starts,
                                    int horizon, std::uint64_t seed, bool check_obstacle2) {
  const UnicycleParams& p = env.params();
  UnicycleEvalStats stats;
  int accepted = 0;
  std::uint64_t attempt = 0;
  while (accepted < starts && attempt < 1000) {
    EnvState s = env.reset(derive_seed(seed, attempt));
    ++attempt;
    const bool bad_start =
        unicycle_in_collision(p.obstacle1, s.x[0], s.x[1]) ||
        (check_obstacle2 && unicycle_in_collision(p.obstacle2, s.x[0], s.x[1]));
    if (bad_start) continue;
    ++accepted;

    double min_dist = std::hypot(s.x[0] - p.goal_x, s.x[1] - p.goal_y);
    for (int t = 0; t < horizon; ++t) {
      Vector u = actor.forward(s.x);
      for (Eigen::Index i = 0; i < u.size(); ++i) {
        u[i] = std::clamp(u[i], -1.0, 1.0);
      }
      const auto sr = env.step(s, u);
      s = sr.next;
      min_dist = std::min(min_dist, std::hypot(s.x[0] - p.goal_x, s.x[1] - p.goal_y));
      if (unicycle_in_collision(p.obstacle1, s.x[0], s.x[1])) ++stats.collision1_steps;
      if (check_obstacle2 && unicycle_in_collision(p.obstacle2, s.x[0], s.x[1])) {
        ++stats.collision2_steps;
      }
      if (s.terminal) break;
    }
    if (min_dist <= 0.2) ++stats.reach_count;
    stats.mean_min_goal_dist += min_dist;
  }
  if (accepted > 0) stats.mean_min_goal_dist /= accepted;
  return stats;
}

TrainConfig cell_train_config(TrainConfig base, const Cell& cell, std::uint64_t seed) {
  base.w = cell.w;
  base.gamma_h = cell.gamma_h;
  base.alpha_q = cell.alpha;
  base.seed = seed;
  return base;
}

std::vector<MetricRow> pretrain_metrics(const std::string& method, const Cell& cell,
                                        int trial, const TrainResult& result,
                                        const EvalSummary* eval) {
  std::vector<MetricRow> rows;
  auto add = [&](const std::string& metric, double value) {
    rows.push_back({method, cell.w, cell.gamma_h, cell.alpha, metric, trial, value});
  };
  if (eval) {
    add("eval_cost_original", eval->cost_original);
    add("eval_cost_additional_mean", eval->cost_additional_mean);
  }
  add("train_final_ep_cost",
      result.log.empty() ? 0.0 : result.log.back().ep_cost_original);
  add("diverged", result.diverged ? 1.0 : 0.0);
  return rows;
}

std::vector<MetricRow> run_rl_pretrain(const ExperimentConfig& c, const fs::path& out) {
  const std::vector<Cell> cells = make_cells(c);
  struct Task {
    Cell cell;
    int trial;
  };
  std::vector<Task> tasks;
  for (int trial = 0; trial < c.trials; ++trial) {
    for (const Cell& cell : cells) tasks.push_back({cell, trial});
  }
  std::vector<std::vector<MetricRow>> slots(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), [&](int i) {
    const Task& t = tasks[i];
    const auto env = make_env(c);
    const TrainConfig tc =
        cell_train_config(c.train, t.cell, c.base_seed + static_cast<std::uint64_t>(t.trial));
    const TrainResult result = train(tc, *env, TrainMode::Pretrain);
    const std::string tag = cell_tag("pretrain", t.cell.w, t.cell.gamma_h, t.cell.alpha, t.trial);
    write_training_log_csv(result.log, (out / (tag + ".csv")).string());
    if (result.diverged) {
      slots[i] = pretrain_metrics("pretrain", t.cell, t.trial, result, nullptr);
      return;
    }
    save_bundle(result.bundle, out.string(), tag);
    const EvalSummary eval = summarize_eval(evaluate_policy(
        *env, result.bundle.actor, c.eval.episodes, c.eval.horizon, derive_seed(tc.seed, 77)));
    slots[i] = pretrain_metrics("pretrain", t.cell, t.trial, result, &eval);
  });
  std::vector<MetricRow> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  return rows;
}

std::vector<MetricRow> run_rl_adapt(const ExperimentConfig& c, const fs::path& out) {
  const std::vector<Cell> cells = make_cells(c);
  const bool unicycle = c.kind == ExperimentKind::UnicycleAdaptGoal ||
                        c.kind == ExperimentKind::UnicycleAdaptObstacle;
  const bool check_obstacle2 = c.kind == ExperimentKind::UnicycleAdaptObstacle;

  // Stage 1: one pretraining run per trial, shared across grid cells; a
  // configured pretrained_dir substitutes saved checkpoints for the run.
  std::vector<TrainResult> pretrained(c.trials);
  if (!c.pretrained_dir.empty()) {
    for (int trial = 0; trial < c.trials; ++trial) {
      const std::string stem =
          (fs::path(c.pretrained_dir) / ("pretrain_trial" + std::to_string(trial)))
              .string();
      pretrained[trial].bundle.actor = Mlp::load(stem + "_actor.net");
      pretrained[trial].bundle.critic = Mlp::load(stem + "_critic.net");
      pretrained[trial].bundle.target_actor = pretrained[trial].bundle.actor;
      pretrained[trial].bundle.target_critic = pretrained[trial].bundle.critic;
      pretrained[trial].bundle.pretrained_actor = pretrained[trial].bundle.actor;
      pretrained[trial].bundle.pretrained_critic = pretrained[trial].bundle.critic;
    }
  } else {
    parallel_for(c.trials, [&](int trial) {
      const auto env = make_pretrain_env(c);
      TrainConfig pc = c.pretrain;
      pc.seed = c.base_seed + static_cast<std::uint64_t>(trial);
      pretrained[trial] = train(pc, *env, TrainMode::Pretrain);
      const std::string tag = "pretrain_trial" + std::to_string(trial);
      write_training_log_csv(pretrained[trial].log, (out / (tag + ".csv")).string());
      save_bundle(pretrained[trial].bundle, out.string(), tag);
    });
  }

  // Stage 2: adaptation per cell x trial x mode, plus the pretrained
  // baseline evaluated once per cell x trial.
  struct Task {
    Cell cell;
    int trial;
    int mode_index;  // -1 = evaluate the pretrained policy only
  };
  std::vector<Task> tasks;
  for (int trial = 0; trial < c.trials; ++trial) {
    for (const Cell& cell : cells) {
      tasks.push_back({cell, trial, -1});
      for (std::size_t m = 0; m < c.adapt_modes.size(); ++m) {
        tasks.push_back({cell, trial, static_cast<int>(m)});
      }
    }
  }
  std::vector<std::vector<MetricRow>> slots(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), [&](int i) {
    const Task& t = tasks[i];
    const auto env = make_env(c);
    const std::uint64_t trial_seed = c.base_seed + static_cast<std::uint64_t>(t.trial);
    std::vector<MetricRow> rows;
    auto add = [&](const std::string& method, const std::string& metric, double value) {
      rows.push_back({method, t.cell.w, t.cell.gamma_h, t.cell.alpha, metric, t.trial, value});
    };

    if (pretrained[t.trial].diverged) {
      add(t.mode_index < 0 ? "pretrained" : mode_name(c.adapt_modes[t.mode_index]),
          "pretrain_diverged", 1.0);
      slots[i] = std::move(rows);
      return;
    }
    if (t.mode_index < 0) {
      const Mlp& actor = pretrained[t.trial].bundle.actor;
      const EvalSummary eval = summarize_eval(evaluate_policy(
          *env, actor, c.eval.episodes, c.eval.horizon, derive_seed(trial_seed, 77)));
      add("pretrained", "eval_cost_original", eval.cost_original);
      add("pretrained", "eval_cost_additional_mean", eval.cost_additional_mean);
      if (unicycle) {
        const auto stats = evaluate_unicycle(static_cast<const UnicycleEnv&>(*env), actor,
                                             c.eval.starts, c.eval.horizon,
                                             derive_seed(trial_seed, 78), check_obstacle2);
        add("pretrained", "reach_count", stats.reach_count);
        add("pretrained", "collision1_steps", stats.collision1_steps);
        add("pretrained", "collision2_steps", stats.collision2_steps);
        add("pretrained", "mean_min_goal_dist", stats.mean_min_goal_dist);
      }
    } else {
      const TrainMode mode = c.adapt_modes[t.mode_index];
      const std::string method = mode_name(mode);
      const TrainConfig ac = cell_train_config(c.train, t.cell, trial_seed);
      const TrainResult result = train(ac, *env, mode, &pretrained[t.trial].bundle);
      const std::string tag =
          cell_tag("adapt_" + method, t.cell.w, t.cell.gamma_h, t.cell.alpha, t.trial);
      write_training_log_csv(result.log, (out / (tag + ".csv")).string());
      add(method, "diverged", result.diverged ? 1.0 : 0.0);
      if (!result.diverged) {
        save_bundle(result.bundle, out.string(), tag);
        const EvalSummary eval = summarize_eval(
            evaluate_policy(*env, result.bundle.actor, c.eval.episodes, c.eval.horizon,
                            derive_seed(trial_seed, 77)));
        add(method, "eval_cost_original", eval.cost_original);
        add(method, "eval_cost_additional_mean", eval.cost_additional_mean);
        if (mode == TrainMode::AdaptCbfPa) {
          add(method, "surrogate_violations",
              static_cast<double>(result.total_surrogate_violations));
        }
        if (unicycle) {
          const auto stats = evaluate_unicycle(
              static_cast<const UnicycleEnv&>(*env), result.bundle.actor, c.eval.starts,
              c.eval.horizon, derive_seed(trial_seed, 78), check_obstacle2);
          add(method, "reach_count", stats.reach_count);
          add(method, "collision1_steps", stats.collision1_steps);
          add(method, "collision2_steps", stats.collision2_steps);
          add(method, "mean_min_goal_dist", stats.mean_min_goal_dist);
        }
      }
    }
    slots[i] = std::move(rows);
  });
  std::vector<MetricRow> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  return rows;
}

std::vector<MetricRow> run_fuzz(const ExperimentConfig& c, const fs::path& out) {
  const OracleFuzzResult r =
      run_oracle_fuzz(c.fuzz.instances, c.base_seed, c.fuzz.component_range,
                      c.fuzz.value_range, (out / "fuzz_instances.csv").string());
  std::vector<MetricRow> rows;
  auto add = [&](const std::string& metric, double value) {
    rows.push_back({"oracle", 0.0, 0.0, 0.0, metric, 0, value});
  };
  add("max_da_inf", r.max_da_inf);
  add("max_dc", r.max_dc);
  add("min_residual", r.min_residual);
  add("hard_active", static_cast<double>(r.hard_active));
  add("instances", static_cast<double>(r.instances));
  return rows;
}

}  // namespace

const AggregateRow* AggregateReport::find(const std::string& method, double w,
                                          double gamma_h, double alpha,
                                          const std::string& metric) const {
  for (const AggregateRow& r : rows) {
    if (r.method == method && r.w == w && r.gamma_h == gamma_h && r.alpha == alpha &&
        r.metric == metric) {
      return &r;
    }
  }
  return nullptr;
}

AggregateReport aggregate_metrics(std::vector<MetricRow> rows) {
  auto key_less = [](const MetricRow& a, const MetricRow& b) {
    return std::tie(a.method, a.w, a.gamma_h, a.alpha, a.metric, a.trial) <
           std::tie(b.method, b.w, b.gamma_h, b.alpha, b.metric, b.trial);
  };
  std::sort(rows.begin(), rows.end(), key_less);

  AggregateReport report;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    double sum = 0.0;
    double lo = rows[i].value, hi = rows[i].value;
    while (j < rows.size() && rows[j].method == rows[i].method && rows[j].w == rows[i].w &&
           rows[j].gamma_h == rows[i].gamma_h && rows[j].alpha == rows[i].alpha &&
           rows[j].metric == rows[i].metric) {
      sum += rows[j].value;
      lo = std::min(lo, rows[j].value);
      hi = std::max(hi, rows[j].value);
      ++j;
    }
    const int n = static_cast<int>(j - i);
    const double mean = sum / n;
    double var = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      var += (rows[k].value - mean) * (rows[k].value - mean);
    }
    var /= n;  // population variance: std is exactly 0 for a single trial
    AggregateRow row;
    row.method = rows[i].method;
    row.w = rows[i].w;
    row.gamma_h = rows[i].gamma_h;
    row.alpha = rows[i].alpha;
    row.metric = rows[i].metric;
    row.mean = mean;
    row.std_dev = std::sqrt(var);
    row.min = lo;
    row.max = hi;
    row.count = n;
    report.rows.push_back(row);
    i = j;
  }
  return report;
}

void write_metrics_csv(const std::vector<MetricRow>& rows, const std::string& path) {
  CsvWriter out(path);
  out.write_header({"method", "w", "gamma_h", "alpha", "metric", "trial", "value"});
  for (const MetricRow& r : rows) {
    out.write_row({r.method, format_double(r.w), format_double(r.gamma_h),
                   format_double(r.alpha), r.metric, std::to_string(r.trial),
                   format_double(r.value)});
  }
}

void write_aggregate_csv(const AggregateReport& report, const std::string& path) {
  CsvWriter out(path);
  out.write_header({"method", "w", "gamma_h", "alpha", "metric", "mean", "std", "min",
                    "max", "count"});
  for (const AggregateRow& r : report.rows) {
    out.write_row({r.method, format_double(r.w), format_double(r.gamma_h),
                   format_double(r.alpha), r.metric, format_double(r.mean),
                   format_double(r.std_dev), format_double(r.min), format_double(r.max),
                   std::to_string(r.count)});
  }
}

AggregateReport load_aggregate_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  AggregateReport report;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    AggregateRow r;
    r.method = table.rows[i][0];
    r.w = table.value(i, "w");
    r.gamma_h = table.value(i, "gamma_h");
    r.alpha = table.value(i, "alpha");
    r.metric = table.rows[i][static_cast<std::size_t>(table.column_index("metric"))];
    r.mean = table.value(i, "mean");
    r.std_dev = table.value(i, "std");
    r.min = table.value(i, "min");
    r.max = table.value(i, "max");
    r.count = static_cast<int>(table.value(i, "count"));
    report.rows.push_back(r);
  }
  return report;
}

std::vector<MetricRow> load_metrics_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  std::vector<MetricRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    MetricRow r;
    r.method = table.rows[i][0];
    r.w = table.value(i, "w");
    r.gamma_h = table.value(i, "gamma_h");
    r.alpha = table.value(i, "alpha");
    r.metric = table.rows[i][static_cast<std::size_t>(table.column_index("metric"))];
    r.trial = static_cast<int>(table.value(i, "trial"));
    r.value = table.value(i, "value");
    rows.push_back(r);
  }
  return rows;
}

AggregateReport run_experiment(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  if (const char* env = std::getenv("CBFPA_OUTPUT_DIR")) c.output_dir = env;
  const fs::path out(c.output_dir);
  fs::create_directories(out);

  std::vector<MetricRow> rows;
  switch (c.kind) {
    case ExperimentKind::IllustrativeSweep:
      rows = run_illustrative(c, out);
      break;
    case ExperimentKind::CartpolePretrain:
    case ExperimentKind::UnicyclePretrain:
      rows = run_rl_pretrain(c, out);
      break;
    case ExperimentKind::CartpoleAdapt:
    case ExperimentKind::UnicycleAdaptGoal:
    case ExperimentKind::UnicycleAdaptObstacle:
      rows = run_rl_adapt(c, out);
      break;
    case ExperimentKind::OracleFuzz:
      rows = run_fuzz(c, out);
      break;
  }

  write_metrics_csv(rows, (out / "metrics.csv").string());
  AggregateReport report = aggregate_metrics(rows);
  write_aggregate_csv(report, (out / "aggregate.csv").string());
  std::ofstream((out / "config.canonical.json").string(), std::ios::binary | std::ios::trunc)
      << canonical_config(c);
  return report;
}

ComparisonTable compare_methods(const std::vector<AggregateReport>& reports) {
  std::map<std::tuple<double, double, double>, std::map<std::string, MethodCell>> cells;
  std::vector<std::string> methods;
  for (const AggregateReport& report : reports) {
    for (const AggregateRow& r : report.rows) {
      if (r.metric != "final_j" && r.metric != "g_bar" && r.metric != "violations") continue;
      auto& cell = cells[{r.w, r.gamma_h, r.alpha}][r.method];
      if (r.metric == "final_j") cell.final_j = r.mean;
      if (r.metric == "g_bar") cell.g_bar = r.mean;
      if (r.metric == "violations") cell.violations = r.mean;
      if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
        methods.push_back(r.method);
      }
    }
  }
  if (cells.empty()) throw std::runtime_error("compare: no flow metrics found");
  for (const auto& [key, per_method] : cells) {
    for (const std::string& m : methods) {
      if (!per_method.count(m)) {
        std::ostringstream msg;
        msg << "compare: grid mismatch, method '" << m << "' missing cell w="
            << std::get<0>(key) << " gamma_h=" << std::get<1>(key)
            << " alpha=" << std::get<2>(key);
        throw std::runtime_error(msg.str());
      }
    }
  }

  ComparisonTable table;
  for (const auto& [key, per_method] : cells) {
    ComparisonRow row;
    row.w = std::get<0>(key);
    row.gamma_h = std::get<1>(key);
    row.alpha = std::get<2>(key);
    row.per_method = per_method;
    const auto cbfpa = per_method.find("cbfpa");
    const auto mogd = per_method.find("mogd");
    row.cbfpa_le_mogd = cbfpa != per_method.end() && mogd != per_method.end() &&
                        cbfpa->second.g_bar <= mogd->second.g_bar;
    table.rows.push_back(row);
  }
  return table;
}

void write_comparison_csv(const ComparisonTable& table, const std::string& path) {
  CsvWriter out(path);
  out.write_header({"w", "gamma_h", "alpha", "method", "final_j", "g_bar", "violations",
                    "cbfpa_le_mogd"});
  for (const ComparisonRow& row : table.rows) {
    for (const auto& [method, cell] : row.per_method) {
      out.write_row({format_double(row.w), format_double(row.gamma_h),
                     format_double(row.alpha), method, format_double(cell.final_j),
                     format_double(cell.g_bar), format_double(cell.violations),
                     row.cbfpa_le_mogd ? "1" : "0"});
    }
  }
}

std::string format_comparison(const ComparisonTable& table) {
  std::ostringstream out;
  out << "w gamma_h alpha | method final_J G_bar violations | cbfpa<=mogd\n";
  for (const ComparisonRow& row : table.rows) {
    for (const auto& [method, cell] : row.per_method) {
      out << row.w << ' ' << row.gamma_h << ' ' << row.alpha << " | " << method << ' '
          << cell.final_j << ' ' << cell.g_bar << ' ' << cell.violations << " | "
          << (row.cbfpa_le_mogd ? "yes" : "no") << '\n';
    }
  }
  return out.str();
}

OracleFuzzResult run_oracle_fuzz(int instances, std::uint64_t seed, double component_range,
                                 double value_range, const std::string& raw_csv_path) {
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> dim_pick(1, 8);
  std::uniform_int_distribution<int> three(0, 2);
  std::uniform_real_distribution<double> comp(-component_range, component_range);
  std::uniform_real_distribution<double> val(-value_range, value_range);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double gammas[3] = {0.1, 1.0, 10.0};
  const double ws[3] = {0.01, 1.0, 100.0};

  std::unique_ptr<CsvWriter> raw;
  if (!raw_csv_path.empty()) {
    raw = std::make_unique<CsvWriter>(raw_csv_path);
    raw->write_header({"instance", "p", "gamma_h", "w", "da_inf", "dc", "residual"});
  }

  OracleFuzzResult result;
  result.instances = instances;
  const std::uint64_t hard_before = hard_active_count();
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < instances; ++i) {
    const int p = dim_pick(rng);
    const double gamma_h = gammas[three(rng)];
    const double w = ws[three(rng)];
    Vector grad_j(p), grad_g(p);
    for (int k = 0; k < p; ++k) grad_j[k] = comp(rng);
    if (unit(rng) < 0.05) {
      grad_g.setZero();  // degenerate L_g = 0 case stays exercised
    } else {
      for (int k = 0; k < p; ++k) grad_g[k] = comp(rng);
    }
    const LieTerms t = lie_terms(grad_j, grad_g, val(rng), val(rng), gamma_h, w);
    const CbfDecision closed = closed_form_controller(t);
    const CbfDecision oracle = qp_oracle(t);

    const double da = (closed.a - oracle.a).lpNorm<Eigen::Infinity>();
    const double dc = std::abs(closed.c_star - oracle.c_star);
    const double residual = std::min(closed.residual, oracle.residual);
    result.max_da_inf = std::max(result.max_da_inf, da);
    result.max_dc = std::max(result.max_dc, dc);
    result.min_residual = std::min(result.min_residual, residual);
    if (raw) {
      raw->write_row(std::vector<double>{static_cast<double>(i), static_cast<double>(p),
                                         gamma_h, w, da, dc, residual});
    }
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.hard_active = hard_active_count() - hard_before;
  return result;
}

}  // namespace cbfpa
