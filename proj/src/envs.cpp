#include "cbfpa/envs.hpp"

#include <cmath>
#include <stdexcept>

#include "cbfpa/csv.hpp"

namespace cbfpa {

namespace {

double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

}  // namespace

Eigen::Vector4d cartpole_step(const CartpoleParams& p, const Eigen::Vector4d& state,
                              double u, bool* saturated) {
  if (!state.allFinite()) throw std::invalid_argument("cartpole_step: non-finite state");
  const double u_clamped = clamp(u, -1.0, 1.0);
  if (saturated) *saturated = (u_clamped != u);

  const double force = p.force_scale * u_clamped;
  const double theta = state[2];
  const double theta_dot = state[3];
  const double sin_t = std::sin(theta);
  const double cos_t = std::cos(theta);
  const double total_mass = p.m_c + p.m_p;

  const double temp = (force + p.l * p.m_p * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_ddot =
      (p.g * sin_t - cos_t * temp) /
      (p.l * (4.0 / 3.0 - p.m_p * cos_t * cos_t / total_mass));
  const double x_ddot = temp - p.l * p.m_p * theta_ddot * cos_t / total_mass;

  Eigen::Vector4d next;
  next[0] = state[0] + p.dt * state[1];
  next[1] = state[1] + p.dt * x_ddot;
  next[2] = state[2] + p.dt * theta_dot;
  next[3] = state[3] + p.dt * theta_ddot;
  return next;
}

std::pair<double, double> cartpole_costs(const Eigen::Vector4d& state, double /*u*/) {
  const double theta = state[2];
  const double original = (theta >= -0.2095 && theta <= 0.2095) ? -1.0 : 0.0;
  const double dx = state[0] - 2.0;
  const double additional = 0.1 * dx * dx + 0.001 * state[1] * state[1];
  return {original, additional};
}

std::pair<double, double> cartpole_baseline_costs(const Eigen::Vector4d& state, double u,
                                                  double actor_out, double pretrained_out,
                                                  double w) {
  const auto [original, additional] = cartpole_costs(state, u);
  const double morl = original + w * additional;
  const double diff = actor_out - pretrained_out;
  const double bc = additional + w * diff * diff;
  return {morl, bc};
}

Eigen::Vector3d unicycle_step(const UnicycleParams& p, const Eigen::Vector3d& state,
                              const Eigen::Vector2d& u) {
  if (!state.allFinite()) throw std::invalid_argument("unicycle_step: non-finite state");
  const double v = clamp(u[0], -p.v_max, p.v_max);
  const double omega = clamp(u[1], -p.omega_max, p.omega_max);
  Eigen::Vector3d next;
  next[0] = state[0] + p.dt * v * std::cos(state[2]);
  next[1] = state[1] + p.dt * v * std::sin(state[2]);
  next[2] = wrap_angle(state[2] + p.dt * omega);
  return next;
}

bool unicycle_in_collision(const Obstacle& obs, double px, double py) {
  const double dx = px - obs.cx;
  const double dy = py - obs.cy;
  return std::sqrt(dx * dx + dy * dy) <= obs.radius;
}

std::pair<double, double> unicycle_costs(const UnicycleParams& p,
                                         const Eigen::Vector3d& state, UnicycleTask task) {
  const double px = state[0];
  const double py = state[1];
  const double avoid = -(px * px + py * py) +
                       (unicycle_in_collision(p.obstacle1, px, py) ? 100.0 : 0.0);
  const double gx = px - p.goal_x;
  const double gy = py - p.goal_y;
  const double goal = std::sqrt(gx * gx + gy * gy);

  switch (task) {
    case UnicycleTask::AvoidOnly:
      return {avoid, goal};
    case UnicycleTask::AvoidPlusGoal:
      // Original task for the second adaptation stage: the policy resulting
      // from the first adaptation avoids obstacle 1 and reaches the goal.
      return {avoid + goal, goal};
    case UnicycleTask::TwoObstacles:
      return {avoid + goal,
              goal + (unicycle_in_collision(p.obstacle2, px, py) ? 10.0 : 0.0)};
  }
  return {avoid, goal};
}

CartpoleEnv::CartpoleEnv(CartpoleParams params) : params_(params) {}

EnvState CartpoleEnv::reset(std::uint64_t seed) const {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  EnvState s;
  s.x = Vector(4);
  for (int i = 0; i < 4; ++i) s.x[i] = dist(rng);
  return s;
}

Environment::StepResult CartpoleEnv::step(const EnvState& state, const Vector& u) const {
  if (u.size() != 1) throw std::invalid_argument("cartpole: action must be scalar");
  const Eigen::Vector4d x = state.x;
  const auto [original, additional] = cartpole_costs(x, u[0]);
  const Eigen::Vector4d next = cartpole_step(params_, x, u[0]);

  StepResult result;
  result.cost_original = original;
  result.cost_additional = additional;
  result.next.x = next;
  result.next.t = state.t + 1;
  if (std::abs(next[2]) > params_.theta_limit || std::abs(next[0]) > params_.x_limit) {
    result.next.terminal = true;
    result.next.reason = TerminationReason::BoundViolation;
  } else if (result.next.t >= params_.horizon) {
    result.next.terminal = true;
    result.next.reason = TerminationReason::HorizonReached;
  }
  return result;
}

std::unique_ptr<Environment> CartpoleEnv::clone() const {
  return std::make_unique<CartpoleEnv>(params_);
}

UnicycleEnv::UnicycleEnv(UnicycleParams params, UnicycleTask task)
    : params_(params), task_(task) {}

EnvState UnicycleEnv::reset(std::uint64_t seed) const {
  Rng rng = make_rng(seed);
  const double lo[3] = {-1.9, -0.2, -0.2};
  const double hi[3] = {1.5, 0.2, 0.2};
  EnvState s;
  s.x = Vector(3);
  for (int i = 0; i < 3; ++i) {
    std::uniform_real_distribution<double> dist(lo[i], hi[i]);
    s.x[i] = dist(rng);
  }
  return s;
}

Environment::StepResult UnicycleEnv::step(const EnvState& state, const Vector& u) const {
  if (u.size() != 2) throw std::invalid_argument("unicycle: action must have 2 components");
  const Eigen::Vector3d x = state.x;
  const auto [original, additional] = unicycle_costs(params_, x, task_);
  // Normalized policy action in [-1,1]^2 scaled to the physical input boxes.
  Eigen::Vector2d phys;
  phys[0] = clamp(u[0], -1.0, 1.0) * params_.v_max;
  phys[1] = clamp(u[1], -1.0, 1.0) * params_.omega_max;
  const Eigen::Vector3d next = unicycle_step(params_, x, phys);

  StepResult result;
  result.cost_original = original;
  result.cost_additional = additional;
  result.next.x = next;
  result.next.t = state.t + 1;
  const bool out_of_bounds = next[0] < params_.x_min || next[0] > params_.x_max ||
                             next[1] < params_.y_min || next[1] > params_.y_max;
  if (out_of_bounds) {
    result.next.terminal = true;
    result.next.reason = TerminationReason::BoundViolation;
  } else if (result.next.t >= params_.horizon) {
    result.next.terminal = true;
    result.next.reason = TerminationReason::HorizonReached;
  }
  return result;
}

std::unique_ptr<Environment> UnicycleEnv::clone() const {
  return std::make_unique<UnicycleEnv>(params_, task_);
}

void write_episode_csv(const std::vector<Transition>& episode, const std::string& path) {
  CsvWriter out(path);
  if (episode.empty()) {
    out.write_header({"step"});
    return;
  }
  std::vector<std::string> header = {"step"};
  for (Eigen::Index i = 0; i < episode.front().x_t.size(); ++i) {
    header.push_back("x_" + std::to_string(i));
  }
  for (Eigen::Index i = 0; i < episode.front().u_t.size(); ++i) {
    header.push_back("u_" + std::to_string(i));
  }
  header.insert(header.end(), {"cost_original", "cost_additional", "terminal"});
  out.write_header(header);
  for (std::size_t k = 0; k < episode.size(); ++k) {
    const Transition& tr = episode[k];
    std::vector<double> row = {static_cast<double>(k)};
    for (Eigen::Index i = 0; i < tr.x_t.size(); ++i) row.push_back(tr.x_t[i]);
    for (Eigen::Index i = 0; i < tr.u_t.size(); ++i) row.push_back(tr.u_t[i]);
    row.push_back(tr.cost_original);
    row.push_back(tr.cost_additional);
    row.push_back(tr.terminal ? 1.0 : 0.0);
    out.write_row(row);
  }
}

}  // namespace cbfpa
