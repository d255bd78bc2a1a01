#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cbfpa/cbf_core.hpp"  // Vector
#include "cbfpa/rng.hpp"

namespace cbfpa {

enum class TerminationReason { None, BoundViolation, HorizonReached };

struct EnvState {
  Vector x;
  int t = 0;
  bool terminal = false;
  TerminationReason reason = TerminationReason::None;
};

// One environment step as stored in the replay memory. u_t is the normalized
// policy action, componentwise in [-1, 1].
struct Transition {
  Vector x_t;
  Vector u_t;
  Vector x_next;
  double cost_original = 0.0;
  double cost_additional = 0.0;
  bool terminal = false;
};

// ---------------------------------------------------------------------------
// Cartpole

struct CartpoleParams {
  double l = 0.5;    // pole half-length proxy
  double g = 9.8;
  double m_c = 1.0;  // cart mass
  double m_p = 0.1;  // pole mass
  double dt = 0.05;
  double force_scale = 10.0;
  double theta_limit = 0.418;  // termination bound on the pole angle
  double x_limit = 4.8;        // termination bound on the cart position
  int horizon = 200;
};

// State layout [p_x, p_x_dot, theta, theta_dot]; u is the normalized input
// in [-1, 1], applied force = force_scale * u. theta_ddot is computed first
// (its formula is self-contained), then x_ddot from it, then one Euler step.
Eigen::Vector4d cartpole_step(const CartpoleParams& p, const Eigen::Vector4d& state,
                              double u, bool* saturated = nullptr);

// (original, additional) stage costs: -1 while the pole is within the
// 0.2095 rad band, and a quadratic pull toward p_x = 2.
std::pair<double, double> cartpole_costs(const Eigen::Vector4d& state, double u);

// (MORL, BC) baseline stage costs at the given actor/pretrained outputs.
std::pair<double, double> cartpole_baseline_costs(const Eigen::Vector4d& state, double u,
                                                  double actor_out, double pretrained_out,
                                                  double w);

// ---------------------------------------------------------------------------
// Unicycle

struct Obstacle {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

enum class UnicycleTask { AvoidOnly, AvoidPlusGoal, TwoObstacles };

struct UnicycleParams {
  double dt = 0.1;
  int horizon = 200;
  double x_min = -2.4, x_max = 2.4;
  double y_min = -1.8, y_max = 1.6;
  double v_max = 1.0;      // |u_v| bound, m/s
  double omega_max = 3.0;  // |u_omega| bound, rad/s
  Obstacle obstacle1{-0.5, 0.0, 0.595};
  Obstacle obstacle2{0.5, 0.2, 0.42};
  double goal_x = 1.5, goal_y = 0.0;
};

// State layout [p_x, p_y, theta]; u = (u_v, u_omega) in physical units,
// saturated to its boxes. theta is wrapped to [-pi, pi] after the step.
Eigen::Vector3d unicycle_step(const UnicycleParams& p, const Eigen::Vector3d& state,
                              const Eigen::Vector2d& u);

// (original, additional) stage costs for the given task configuration.
std::pair<double, double> unicycle_costs(const UnicycleParams& p,
                                         const Eigen::Vector3d& state, UnicycleTask task);

bool unicycle_in_collision(const Obstacle& obs, double px, double py);

// ---------------------------------------------------------------------------
// Common environment interface used by the training loop. Instances own
// their parameters only; state is passed explicitly, so steps and costs are
// pure functions and independent instances can run in parallel.

class Environment {
 public:
  virtual ~Environment() = default;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual const std::string& name() const = 0;
  virtual int horizon() const = 0;

  // Deterministic initial state for the given seed.
  virtual EnvState reset(std::uint64_t seed) const = 0;

  // Advances one step under normalized action u in [-1, 1]^m. Returns the
  // next state with terminal/horizon bookkeeping plus both stage costs
  // evaluated at (state, u).
  struct StepResult {
    EnvState next;
    double cost_original = 0.0;
    double cost_additional = 0.0;
  };
  virtual StepResult step(const EnvState& state, const Vector& u) const = 0;

  virtual std::unique_ptr<Environment> clone() const = 0;
};

class CartpoleEnv final : public Environment {
 public:
  explicit CartpoleEnv(CartpoleParams params = {});
  int state_dim() const override { return 4; }
  int action_dim() const override { return 1; }
  const std::string& name() const override { return name_; }
  int horizon() const override { return params_.horizon; }
  EnvState reset(std::uint64_t seed) const override;
  StepResult step(const EnvState& state, const Vector& u) const override;
  std::unique_ptr<Environment> clone() const override;
  const CartpoleParams& params() const { return params_; }

 private:
  CartpoleParams params_;
  std::string name_ = "cartpole";
};

class UnicycleEnv final : public Environment {
 public:
  explicit UnicycleEnv(UnicycleParams params = {}, UnicycleTask task = UnicycleTask::AvoidOnly);
  int state_dim() const override { return 3; }
  int action_dim() const override { return 2; }
  const std::string& name() const override { return name_; }
  int horizon() const override { return params_.horizon; }
  EnvState reset(std::uint64_t seed) const override;
  StepResult step(const EnvState& state, const Vector& u) const override;
  std::unique_ptr<Environment> clone() const override;
  const UnicycleParams& params() const { return params_; }
  UnicycleTask task() const { return task_; }

 private:
  UnicycleParams params_;
  UnicycleTask task_;
  std::string name_ = "unicycle";
};

// Episode log CSV: step, state components, action components, costs, terminal.
void write_episode_csv(const std::vector<Transition>& episode, const std::string& path);

}  // namespace cbfpa
