#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cbfpa/experiment.hpp"

namespace cbfpa {

using nlohmann::json;

namespace {

const char* kKindNames[] = {"illustrative_sweep",    "cartpole_pretrain",
                            "cartpole_adapt",        "unicycle_pretrain",
                            "unicycle_adapt_goal",   "unicycle_adapt_obstacle",
                            "oracle_fuzz"};

ExperimentKind kind_from_name(const std::string& name) {
  for (int i = 0; i < 7; ++i) {
    if (name == kKindNames[i]) return static_cast<ExperimentKind>(i);
  }
  throw ConfigError("config: unknown kind '" + name +
                    "' (expected one of illustrative_sweep, cartpole_pretrain, "
                    "cartpole_adapt, unicycle_pretrain, unicycle_adapt_goal, "
                    "unicycle_adapt_obstacle, oracle_fuzz)");
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("config: unknown key '" + it.key() + "' in " + context);
    }
  }
}

double get_number(const json& obj, const std::string& key, double fallback,
                  const std::string& context) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    throw ConfigError("config: " + context + "." + key + " must be a number");
  }
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& key, int fallback,
            const std::string& context) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    throw ConfigError("config: " + context + "." + key + " must be an integer");
  }
  return obj[key].get<int>();
}

bool get_bool(const json& obj, const std::string& key, bool fallback,
              const std::string& context) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) {
    throw ConfigError("config: " + context + "." + key + " must be a boolean");
  }
  return obj[key].get<bool>();
}

std::vector<double> get_grid(const json& obj, const std::string& key,
                             std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_array() || obj[key].empty()) {
    throw ConfigError("config: grid." + key + " must be a nonempty array");
  }
  std::vector<double> out;
  for (const auto& v : obj[key]) {
    if (!v.is_number()) throw ConfigError("config: grid." + key + " entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

NoiseParams parse_noise(const json& obj, NoiseParams fallback) {
  check_keys(obj, {"kind", "sigma", "ou_rate", "ou_mean", "ou_dt", "anneal"}, "noise");
  NoiseParams n = fallback;
  if (obj.contains("kind")) {
    const std::string kind = obj["kind"].get<std::string>();
    if (kind == "gaussian") {
      n.kind = NoiseKind::Gaussian;
    } else if (kind == "ornstein_uhlenbeck") {
      n.kind = NoiseKind::OrnsteinUhlenbeck;
    } else {
      throw ConfigError("config: noise.kind must be gaussian or ornstein_uhlenbeck");
    }
  }
  n.sigma = get_number(obj, "sigma", n.sigma, "noise");
  n.ou_rate = get_number(obj, "ou_rate", n.ou_rate, "noise");
  n.ou_mean = get_number(obj, "ou_mean", n.ou_mean, "noise");
  n.ou_dt = get_number(obj, "ou_dt", n.ou_dt, "noise");
  n.anneal = get_bool(obj, "anneal", n.anneal, "noise");
  if (n.sigma < 0.0) throw ConfigError("config: noise.sigma must be >= 0");
  if (n.ou_rate < 0.0) throw ConfigError("config: noise.ou_rate must be >= 0");
  if (!(n.ou_dt > 0.0)) throw ConfigError("config: noise.ou_dt must be > 0");
  return n;
}

TrainConfig parse_train(const json& obj, TrainConfig base, const std::string& context) {
  check_keys(obj,
             {"episodes", "horizon", "batch", "tau", "alpha_q", "epsilon", "gamma_h", "w",
              "discount", "discount_hat", "buffer_capacity", "hidden",
              "use_target_networks", "critic_init", "surrogate_slack_factor",
              "updates_per_step", "bootstrap_on_truncation", "noise"},
             context);
  TrainConfig t = base;
  t.episodes = get_int(obj, "episodes", t.episodes, context);
  t.horizon = get_int(obj, "horizon", t.horizon, context);
  t.batch = get_int(obj, "batch", t.batch, context);
  t.tau = get_number(obj, "tau", t.tau, context);
  t.alpha_q = get_number(obj, "alpha_q", t.alpha_q, context);
  t.epsilon = get_number(obj, "epsilon", t.epsilon, context);
  t.gamma_h = get_number(obj, "gamma_h", t.gamma_h, context);
  t.w = get_number(obj, "w", t.w, context);
  t.discount = get_number(obj, "discount", t.discount, context);
  t.discount_hat = get_number(obj, "discount_hat", t.discount_hat, context);
  t.buffer_capacity = static_cast<std::size_t>(
      get_int(obj, "buffer_capacity", static_cast<int>(t.buffer_capacity), context));
  t.hidden = get_int(obj, "hidden", t.hidden, context);
  t.updates_per_step = get_int(obj, "updates_per_step", t.updates_per_step, context);
  t.bootstrap_on_truncation =
      get_bool(obj, "bootstrap_on_truncation", t.bootstrap_on_truncation, context);
  t.use_target_networks =
      get_bool(obj, "use_target_networks", t.use_target_networks, context);
  if (obj.contains("critic_init")) {
    const std::string init = obj["critic_init"].get<std::string>();
    if (init == "fresh") {
      t.adapt_critic_init = CriticInit::Fresh;
    } else if (init == "pretrained") {
      t.adapt_critic_init = CriticInit::Pretrained;
    } else {
      throw ConfigError("config: " + context + ".critic_init must be fresh or pretrained");
    }
  }
  t.surrogate_slack_factor =
      get_number(obj, "surrogate_slack_factor", t.surrogate_slack_factor, context);
  if (obj.contains("noise")) t.noise = parse_noise(obj["noise"], t.noise);

  if (t.episodes < 0) throw ConfigError("config: " + context + ".episodes must be >= 0");
  if (t.horizon < 1) throw ConfigError("config: " + context + ".horizon must be >= 1");
  if (t.batch < 1) throw ConfigError("config: " + context + ".batch must be >= 1");
  if (!(t.tau > 0.0 && t.tau <= 1.0)) {
    throw ConfigError("config: " + context + ".tau must be in (0,1]");
  }
  if (!(t.alpha_q > 0.0)) throw ConfigError("config: " + context + ".alpha_q must be > 0");
  if (!(t.epsilon > 0.0 && t.epsilon < 1.0)) {
    throw ConfigError("config: " + context + ".epsilon must be in (0,1)");
  }
  if (!(t.gamma_h > 0.0)) throw ConfigError("config: " + context + ".gamma_h must be > 0");
  if (t.w < 0.0) throw ConfigError("config: " + context + ".w must be >= 0");
  if (!(t.discount > 0.0 && t.discount <= 1.0)) {
    throw ConfigError("config: " + context + ".discount must be in (0,1]");
  }
  if (!(t.discount_hat > 0.0 && t.discount_hat <= 1.0)) {
    throw ConfigError("config: " + context + ".discount_hat must be in (0,1]");
  }
  if (t.hidden < 1) throw ConfigError("config: " + context + ".hidden must be >= 1");
  if (t.updates_per_step < 1) {
    throw ConfigError("config: " + context + ".updates_per_step must be >= 1");
  }
  return t;
}

CartpoleParams parse_cartpole(const json& obj, CartpoleParams base) {
  check_keys(obj,
             {"l", "g", "m_c", "m_p", "dt", "force_scale", "theta_limit", "x_limit",
              "horizon"},
             "env");
  CartpoleParams p = base;
  p.l = get_number(obj, "l", p.l, "env");
  p.g = get_number(obj, "g", p.g, "env");
  p.m_c = get_number(obj, "m_c", p.m_c, "env");
  p.m_p = get_number(obj, "m_p", p.m_p, "env");
  p.dt = get_number(obj, "dt", p.dt, "env");
  p.force_scale = get_number(obj, "force_scale", p.force_scale, "env");
  p.theta_limit = get_number(obj, "theta_limit", p.theta_limit, "env");
  p.x_limit = get_number(obj, "x_limit", p.x_limit, "env");
  p.horizon = get_int(obj, "horizon", p.horizon, "env");
  if (!(p.l > 0 && p.g > 0 && p.m_c > 0 && p.m_p > 0 && p.dt > 0 && p.force_scale > 0)) {
    throw ConfigError("config: env cartpole physical constants must be > 0");
  }
  return p;
}

Obstacle parse_obstacle(const json& obj, Obstacle base, const std::string& context) {
  check_keys(obj, {"x", "y", "radius"}, context);
  Obstacle o = base;
  o.cx = get_number(obj, "x", o.cx, context);
  o.cy = get_number(obj, "y", o.cy, context);
  o.radius = get_number(obj, "radius", o.radius, context);
  if (!(o.radius > 0.0)) throw ConfigError("config: " + context + ".radius must be > 0");
  return o;
}

UnicycleParams parse_unicycle(const json& obj, UnicycleParams base) {
  check_keys(obj,
             {"dt", "horizon", "goal_x", "goal_y", "obstacle1", "obstacle2", "x_min",
              "x_max", "y_min", "y_max", "v_max", "omega_max"},
             "env");
  UnicycleParams p = base;
  p.dt = get_number(obj, "dt", p.dt, "env");
  p.horizon = get_int(obj, "horizon", p.horizon, "env");
  p.goal_x = get_number(obj, "goal_x", p.goal_x, "env");
  p.goal_y = get_number(obj, "goal_y", p.goal_y, "env");
  p.x_min = get_number(obj, "x_min", p.x_min, "env");
  p.x_max = get_number(obj, "x_max", p.x_max, "env");
  p.y_min = get_number(obj, "y_min", p.y_min, "env");
  p.y_max = get_number(obj, "y_max", p.y_max, "env");
  p.v_max = get_number(obj, "v_max", p.v_max, "env");
  p.omega_max = get_number(obj, "omega_max", p.omega_max, "env");
  if (obj.contains("obstacle1")) p.obstacle1 = parse_obstacle(obj["obstacle1"], p.obstacle1, "env.obstacle1");
  if (obj.contains("obstacle2")) p.obstacle2 = parse_obstacle(obj["obstacle2"], p.obstacle2, "env.obstacle2");
  if (!(p.dt > 0.0)) throw ConfigError("config: env.dt must be > 0");
  if (p.goal_x < p.x_min || p.goal_x > p.x_max || p.goal_y < p.y_min || p.goal_y > p.y_max) {
    throw ConfigError("config: env goal must lie inside the position bounds");
  }
  return p;
}

bool is_cartpole_kind(ExperimentKind k) {
  return k == ExperimentKind::CartpolePretrain || k == ExperimentKind::CartpoleAdapt;
}

bool is_unicycle_kind(ExperimentKind k) {
  return k == ExperimentKind::UnicyclePretrain || k == ExperimentKind::UnicycleAdaptGoal ||
         k == ExperimentKind::UnicycleAdaptObstacle;
}

json noise_to_json(const NoiseParams& n) {
  json o;
  o["kind"] = n.kind == NoiseKind::Gaussian ? "gaussian" : "ornstein_uhlenbeck";
  o["sigma"] = n.sigma;
  o["ou_rate"] = n.ou_rate;
  o["ou_mean"] = n.ou_mean;
  o["ou_dt"] = n.ou_dt;
  o["anneal"] = n.anneal;
  return o;
}

json train_to_json(const TrainConfig& t) {
  json o;
  o["episodes"] = t.episodes;
  o["horizon"] = t.horizon;
  o["batch"] = t.batch;
  o["tau"] = t.tau;
  o["alpha_q"] = t.alpha_q;
  o["epsilon"] = t.epsilon;
  o["gamma_h"] = t.gamma_h;
  o["w"] = t.w;
  o["discount"] = t.discount;
  o["discount_hat"] = t.discount_hat;
  o["buffer_capacity"] = static_cast<int>(t.buffer_capacity);
  o["hidden"] = t.hidden;
  o["updates_per_step"] = t.updates_per_step;
  o["bootstrap_on_truncation"] = t.bootstrap_on_truncation;
  o["use_target_networks"] = t.use_target_networks;
  o["critic_init"] = t.adapt_critic_init == CriticInit::Fresh ? "fresh" : "pretrained";
  o["surrogate_slack_factor"] = t.surrogate_slack_factor;
  o["noise"] = noise_to_json(t.noise);
  return o;
}

}  // namespace

const char* experiment_kind_name(ExperimentKind kind) {
  return kKindNames[static_cast<int>(kind)];
}

ExperimentConfig parse_config_text(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ConfigError(
        "config: empty file; a config is a JSON object with required keys: "
        "kind, output_dir");
  }
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) {
    throw ConfigError(
        "config: root must be a JSON object (required keys: kind, output_dir)");
  }
  check_keys(root,
             {"kind", "output_dir", "trials", "base_seed", "grid", "steps", "methods",
              "adapt_modes", "train", "pretrain", "pretrained_dir", "eval", "env",
              "fuzz"},
             "root");
  if (!root.contains("kind")) {
    throw ConfigError("config: missing required key 'kind' (required keys: kind, output_dir)");
  }
  if (!root.contains("output_dir")) {
    throw ConfigError(
        "config: missing required key 'output_dir' (required keys: kind, output_dir)");
  }

  ExperimentConfig c;
  c.kind = kind_from_name(root["kind"].get<std::string>());
  c.output_dir = root["output_dir"].get<std::string>();
  c.trials = get_int(root, "trials", c.trials, "root");
  if (c.trials < 1) throw ConfigError("config: trials must be >= 1");
  if (root.contains("base_seed")) {
    if (!root["base_seed"].is_number_unsigned() && !root["base_seed"].is_number_integer()) {
      throw ConfigError("config: base_seed must be an integer");
    }
    c.base_seed = root["base_seed"].get<std::uint64_t>();
  }

  if (root.contains("grid")) {
    const json& grid = root["grid"];
    check_keys(grid, {"w", "gamma_h", "alpha"}, "grid");
    c.w_grid = get_grid(grid, "w", c.w_grid);
    c.gamma_h_grid = get_grid(grid, "gamma_h", c.gamma_h_grid);
    c.alpha_grid = get_grid(grid, "alpha", c.alpha_grid);
  }
  for (double g : c.gamma_h_grid) {
    if (!(g > 0.0)) throw ConfigError("config: grid.gamma_h entries must be > 0");
  }
  for (double w : c.w_grid) {
    if (w < 0.0) throw ConfigError("config: grid.w entries must be >= 0");
  }
  for (double a : c.alpha_grid) {
    if (!(a > 0.0)) throw ConfigError("config: grid.alpha entries must be > 0");
  }

  c.steps = get_int(root, "steps", c.steps, "root");
  if (c.steps < 1) throw ConfigError("config: steps must be >= 1");

  if (root.contains("methods")) {
    if (!root["methods"].is_array() || root["methods"].empty()) {
      throw ConfigError("config: methods must be a nonempty array");
    }
    c.methods.clear();
    for (const auto& m : root["methods"]) {
      const std::string name = m.get<std::string>();
      if (name == "cbfpa") {
        c.methods.push_back(FlowMethod::CbfPa);
      } else if (name == "gd") {
        c.methods.push_back(FlowMethod::Gd);
      } else if (name == "mogd") {
        c.methods.push_back(FlowMethod::Mogd);
      } else {
        throw ConfigError("config: methods entries must be cbfpa, gd or mogd");
      }
    }
  }

  if (root.contains("adapt_modes")) {
    if (!root["adapt_modes"].is_array() || root["adapt_modes"].empty()) {
      throw ConfigError("config: adapt_modes must be a nonempty array");
    }
    c.adapt_modes.clear();
    for (const auto& m : root["adapt_modes"]) {
      const std::string name = m.get<std::string>();
      if (name == "cbfpa") {
        c.adapt_modes.push_back(TrainMode::AdaptCbfPa);
      } else if (name == "morl") {
        c.adapt_modes.push_back(TrainMode::AdaptMorl);
      } else if (name == "bc") {
        c.adapt_modes.push_back(TrainMode::AdaptBc);
      } else {
        throw ConfigError("config: adapt_modes entries must be cbfpa, morl or bc");
      }
    }
  }

  if (root.contains("train")) c.train = parse_train(root["train"], c.train, "train");
  c.pretrain = c.train;
  if (root.contains("pretrain")) {
    c.pretrain = parse_train(root["pretrain"], c.pretrain, "pretrain");
  }
  if (root.contains("pretrained_dir")) {
    if (!root["pretrained_dir"].is_string()) {
      throw ConfigError("config: pretrained_dir must be a string");
    }
    c.pretrained_dir = root["pretrained_dir"].get<std::string>();
  }

  if (root.contains("eval")) {
    const json& ev = root["eval"];
    check_keys(ev, {"episodes", "horizon", "starts"}, "eval");
    c.eval.episodes = get_int(ev, "episodes", c.eval.episodes, "eval");
    c.eval.horizon = get_int(ev, "horizon", c.eval.horizon, "eval");
    c.eval.starts = get_int(ev, "starts", c.eval.starts, "eval");
    if (c.eval.episodes < 1) throw ConfigError("config: eval.episodes must be >= 1");
    if (c.eval.horizon < 1) throw ConfigError("config: eval.horizon must be >= 1");
    if (c.eval.starts < 1) throw ConfigError("config: eval.starts must be >= 1");
  }

  if (root.contains("env")) {
    if (is_cartpole_kind(c.kind)) {
      c.cartpole = parse_cartpole(root["env"], c.cartpole);
    } else if (is_unicycle_kind(c.kind)) {
      c.unicycle = parse_unicycle(root["env"], c.unicycle);
    } else {
      throw ConfigError("config: env overrides are only valid for environment kinds");
    }
  }

  if (root.contains("fuzz")) {
    const json& fz = root["fuzz"];
    check_keys(fz, {"instances", "component_range", "value_range"}, "fuzz");
    c.fuzz.instances = get_int(fz, "instances", c.fuzz.instances, "fuzz");
    c.fuzz.component_range = get_number(fz, "component_range", c.fuzz.component_range, "fuzz");
    c.fuzz.value_range = get_number(fz, "value_range", c.fuzz.value_range, "fuzz");
    if (c.fuzz.instances < 1) throw ConfigError("config: fuzz.instances must be >= 1");
    if (!(c.fuzz.component_range > 0.0)) {
      throw ConfigError("config: fuzz.component_range must be > 0");
    }
  }
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string canonical_config(const ExperimentConfig& c) {
  json root;
  root["kind"] = experiment_kind_name(c.kind);
  root["output_dir"] = c.output_dir;
  root["trials"] = c.trials;
  root["base_seed"] = c.base_seed;
  root["grid"]["w"] = c.w_grid;
  root["grid"]["gamma_h"] = c.gamma_h_grid;
  root["grid"]["alpha"] = c.alpha_grid;
  root["steps"] = c.steps;
  {
    json methods = json::array();
    for (FlowMethod m : c.methods) methods.push_back(flow_method_name(m));
    root["methods"] = methods;
  }
  {
    json modes = json::array();
    for (TrainMode m : c.adapt_modes) {
      modes.push_back(m == TrainMode::AdaptCbfPa ? "cbfpa"
                                                 : (m == TrainMode::AdaptMorl ? "morl" : "bc"));
    }
    root["adapt_modes"] = modes;
  }
  root["train"] = train_to_json(c.train);
  root["pretrain"] = train_to_json(c.pretrain);
  root["pretrained_dir"] = c.pretrained_dir;
  root["eval"]["episodes"] = c.eval.episodes;
  root["eval"]["horizon"] = c.eval.horizon;
  root["eval"]["starts"] = c.eval.starts;
  if (is_cartpole_kind(c.kind)) {
    json env;
    env["l"] = c.cartpole.l;
    env["g"] = c.cartpole.g;
    env["m_c"] = c.cartpole.m_c;
    env["m_p"] = c.cartpole.m_p;
    env["dt"] = c.cartpole.dt;
    env["force_scale"] = c.cartpole.force_scale;
    env["theta_limit"] = c.cartpole.theta_limit;
    env["x_limit"] = c.cartpole.x_limit;
    env["horizon"] = c.cartpole.horizon;
    root["env"] = env;
  } else if (is_unicycle_kind(c.kind)) {
    json env;
    env["dt"] = c.unicycle.dt;
    env["horizon"] = c.unicycle.horizon;
    env["goal_x"] = c.unicycle.goal_x;
    env["goal_y"] = c.unicycle.goal_y;
    env["x_min"] = c.unicycle.x_min;
    env["x_max"] = c.unicycle.x_max;
    env["y_min"] = c.unicycle.y_min;
    env["y_max"] = c.unicycle.y_max;
    env["v_max"] = c.unicycle.v_max;
    env["omega_max"] = c.unicycle.omega_max;
    env["obstacle1"] = {{"x", c.unicycle.obstacle1.cx},
                        {"y", c.unicycle.obstacle1.cy},
                        {"radius", c.unicycle.obstacle1.radius}};
    env["obstacle2"] = {{"x", c.unicycle.obstacle2.cx},
                        {"y", c.unicycle.obstacle2.cy},
                        {"radius", c.unicycle.obstacle2.radius}};
    root["env"] = env;
  }
  root["fuzz"]["instances"] = c.fuzz.instances;
  root["fuzz"]["component_range"] = c.fuzz.component_range;
  root["fuzz"]["value_range"] = c.fuzz.value_range;
  return root.dump(2) + "\n";
}

}  // namespace cbfpa
