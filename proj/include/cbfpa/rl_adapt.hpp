#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbfpa/cbf_core.hpp"
#include "cbfpa/envs.hpp"
#include "cbfpa/mlp.hpp"
#include "cbfpa/rng.hpp"

namespace cbfpa {

enum class CostChannel { Original, Additional, Morl, Bc };
enum class TrainMode { Pretrain, AdaptCbfPa, AdaptMorl, AdaptBc };
enum class BaselineVariant { Plain, Morl, BehaviorClone };
enum class NoiseKind { Gaussian, OrnsteinUhlenbeck };
enum class CriticInit { Fresh, Pretrained };

struct NoiseParams {
  NoiseKind kind = NoiseKind::Gaussian;
  double sigma = 0.2;
  double ou_rate = 0.15;  // mean reversion rate
  double ou_mean = 0.0;
  double ou_dt = 1.0;
  bool anneal = true;  // scale sigma linearly to 0 over training
};

// Seeded, reproducible exploration noise stream. OU state persists across
// sample() calls until reset().
class ExplorationNoise {
 public:
  ExplorationNoise(const NoiseParams& params, int dim, std::uint64_t seed);
  void reset();
  Vector sample(double scale);

 private:
  NoiseParams params_;
  int dim_;
  Rng rng_;
  Vector state_;
};

// Fixed-capacity ring of transitions with seeded uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::uint64_t seed);
  void push(Transition tr);
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return storage_[i]; }
  std::vector<const Transition*> sample(int n);

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t next_ = 0;  // overwrite cursor once full
  Rng rng_;
};

// Online networks plus their targets and the frozen pretrained pair that
// defines the original objective during adaptation.
struct AgentBundle {
  Mlp actor;
  Mlp critic;
  Mlp target_actor;
  Mlp target_critic;
  Mlp pretrained_actor;
  Mlp pretrained_critic;
};

struct TrainConfig {
  int episodes = 200;
  int horizon = 200;
  int batch = 64;
  double tau = 0.005;
  double alpha_q = 1e-3;
  double epsilon = 0.1;  // alpha_mu = epsilon * alpha_q
  double gamma_h = 10.0;
  double w = 1.0;
  double discount = 1.0;      // bootstrap discount for the adaptation critic
  double discount_hat = 1.0;  // bootstrap discount for the pretraining critic
  NoiseParams noise;
  std::size_t buffer_capacity = 100000;
  std::uint64_t seed = 0;
  int hidden = 64;
  // Gradient updates per environment step. The adaptation loop keeps the
  // one-update-per-step schedule; pretraining configs may raise this the way
  // any off-the-shelf DDPG implementation would.
  int updates_per_step = 1;
  // Horizon truncation is a data-collection window, not an environment
  // outcome: stored transitions keep terminal = false there so the TD target
  // bootstraps through it. Bound violations always store terminal = true.
  bool bootstrap_on_truncation = true;
  // TD target uses the copied (target) networks by default; disabling gives
  // the literal update with the online networks in the target.
  bool use_target_networks = true;
  bool force_inactive_controller = false;  // makes CBF-PA reduce to plain DDPG
  CriticInit adapt_critic_init = CriticInit::Fresh;
  double surrogate_slack_factor = 0.1;
};

struct EpisodeLog {
  int episode = 0;
  double ep_cost_original = 0.0;        // sum over the episode
  double ep_cost_additional_mean = 0.0; // mean over the episode
  double c_star_mean = 0.0;             // mean over updates in the episode
  double h_term_mean = 0.0;
  double actor_grad_norm = 0.0;
  double critic_loss = 0.0;
  int steps = 0;
  int surrogate_violations = 0;
};

struct TrainResult {
  AgentBundle bundle;
  std::vector<EpisodeLog> log;
  bool diverged = false;
  int diverged_episode = -1;
  int total_surrogate_violations = 0;
};

// Mean squared TD residual over the batch and its gradient with respect to
// the critic parameters. The bootstrap term is dropped on terminal
// transitions. Morl/Bc channels assemble their stage cost from the stored
// costs (Bc recomputes the imitation penalty with the current actor).
GradReport td_loss_grad(const AgentBundle& bundle,
                        const std::vector<const Transition*>& batch, CostChannel channel,
                        double discount, double cost_w = 0.0, bool use_targets = true);

// One gradient-descent step on the TD loss; returns the loss value.
double critic_update(AgentBundle& bundle, const std::vector<const Transition*>& batch,
                     double alpha_q, CostChannel channel, double discount,
                     double cost_w = 0.0, bool use_targets = true);

// Barrier terms of the actor update: l_f is the batch mean of the per-sample
// inner products grad Q-hat . grad Q (both through the actor parameters),
// l_g the negated mean pretrained-critic gradient, and the h-term the mean
// pretrained-critic drop from the pretrained policy's action to the current
// policy's action.
LieTerms cbf_actor_terms(const AgentBundle& bundle,
                         const std::vector<const Transition*>& batch, double gamma_h,
                         double w);

struct CbfActorUpdate {
  CbfDecision decision;
  double h_term = 0.0;       // mean Q-hat difference (terms.h)
  double q_hat_scale = 0.0;  // mean |Q-hat| at the pretrained action
  double grad_norm = 0.0;    // |mean grad Q|
};

// Barrier-filtered actor step: theta <- theta - alpha_mu (mean grad Q - a).
CbfActorUpdate actor_update_cbfpa(AgentBundle& bundle,
                                  const std::vector<const Transition*>& batch,
                                  double alpha_mu, double gamma_h, double w,
                                  bool force_inactive = false);

// Plain DDPG actor step; the variant only selects which critic channel the
// caller trained, the update rule is identical. Returns |mean grad Q|.
double actor_update_baseline(AgentBundle& bundle,
                             const std::vector<const Transition*>& batch, double alpha_mu,
                             BaselineVariant variant);

// target <- tau * online + (1 - tau) * target, elementwise on flat params.
void soft_update(Mlp& target, const Mlp& online, double tau);

// Runs the episode/update loop for the requested mode. Adapt modes require a
// pretrained bundle whose actor/critic become the frozen references; the
// online actor starts as an exact copy of the pretrained actor.
TrainResult train(const TrainConfig& config, const Environment& env, TrainMode mode,
                  const AgentBundle* pretrained = nullptr);

struct EvalEpisode {
  double cost_original_sum = 0.0;
  double cost_additional_mean = 0.0;
  int steps = 0;
  bool bound_violation = false;
};

// Noise-free rollouts of the actor from seeded initial states.
std::vector<EvalEpisode> evaluate_policy(const Environment& env, const Mlp& actor,
                                         int episodes, int horizon, std::uint64_t seed);

void write_training_log_csv(const std::vector<EpisodeLog>& log, const std::string& path);
void save_bundle(const AgentBundle& bundle, const std::string& dir,
                 const std::string& prefix);

double median(std::vector<double> values);

}  // namespace cbfpa
