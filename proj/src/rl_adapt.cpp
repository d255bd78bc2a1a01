#include "cbfpa/rl_adapt.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "cbfpa/csv.hpp"

namespace cbfpa {

namespace {

double clamp01(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }

struct BatchView {
  Eigen::MatrixXd x;
  Eigen::MatrixXd u;
  Eigen::MatrixXd x_next;
  Eigen::VectorXd cost_original;
  Eigen::VectorXd cost_additional;
  Eigen::VectorXd not_terminal;
};

BatchView make_view(const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw std::invalid_argument("rl_adapt: empty batch");
  const int n = static_cast<int>(batch.size());
  const auto sd = batch.front()->x_t.size();
  const auto ad = batch.front()->u_t.size();
  BatchView v;
  v.x.resize(sd, n);
  v.u.resize(ad, n);
  v.x_next.resize(sd, n);
  v.cost_original.resize(n);
  v.cost_additional.resize(n);
  v.not_terminal.resize(n);
  for (int i = 0; i < n; ++i) {
    const Transition& tr = *batch[i];
    v.x.col(i) = tr.x_t;
    v.u.col(i) = tr.u_t;
    v.x_next.col(i) = tr.x_next;
    v.cost_original[i] = tr.cost_original;
    v.cost_additional[i] = tr.cost_additional;
    v.not_terminal[i] = tr.terminal ? 0.0 : 1.0;
  }
  return v;
}

Eigen::VectorXd stage_cost(const AgentBundle& bundle, const BatchView& v,
                           CostChannel channel, double cost_w) {
  switch (channel) {
    case CostChannel::Original:
      return v.cost_original;
    case CostChannel::Additional:
      return v.cost_additional;
    case CostChannel::Morl:
      return v.cost_original + cost_w * v.cost_additional;
    case CostChannel::Bc: {
      // Imitation penalty recomputed with the current actor.
      const Eigen::MatrixXd cur = bundle.actor.forward_batch(v.x);
      const Eigen::MatrixXd pre = bundle.pretrained_actor.forward_batch(v.x);
      const Eigen::VectorXd penalty = (cur - pre).colwise().squaredNorm();
      return v.cost_additional + cost_w * penalty;
    }
  }
  throw std::logic_error("stage_cost: bad channel");
}

Eigen::MatrixXd concat_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

// Sum over the batch of per-sample parameter-gradient inner products for two
// cotangent streams backpropagated through the same tape. The per-sample
// weight gradient of layer l is the outer product delta_l x acts_l, so the
// inner product collapses to (delta_a . delta_b) * (|acts_l|^2 + 1) per layer.
double per_sample_grad_inner_sum(const Mlp& net, const Mlp::BatchTape& tape,
                                 const std::vector<Eigen::MatrixXd>& deltas_a,
                                 const std::vector<Eigen::MatrixXd>& deltas_b) {
  double total = 0.0;
  for (int l = 0; l < net.layer_count(); ++l) {
    const Eigen::RowVectorXd dd =
        (deltas_a[l].array() * deltas_b[l].array()).colwise().sum();
    const Eigen::RowVectorXd aa = tape.acts[l].colwise().squaredNorm();
    total += (dd.array() * (aa.array() + 1.0)).sum();
  }
  return total;
}

struct ActorTermsDetail {
  LieTerms terms;
  Vector mean_grad_q;
  double q_hat_scale = 0.0;
};

// Mean actor-parameter gradient of the given critic over the batch states,
// through the actor's own actions.
Vector mean_grad_through_actor(const Mlp& critic, const Mlp& actor,
                               const Eigen::MatrixXd& x) {
  const int n = static_cast<int>(x.cols());
  Mlp::BatchTape actor_tape;
  const Eigen::MatrixXd u = actor.forward_batch(x, &actor_tape);
  Mlp::BatchTape critic_tape;
  critic.forward_batch(concat_rows(x, u), &critic_tape);
  Eigen::MatrixXd dinput;
  critic.backward_batch(critic_tape, Eigen::MatrixXd::Ones(1, n), nullptr, &dinput);
  Vector grad_sum;
  actor.backward_batch(actor_tape, dinput.bottomRows(actor.output_size()), &grad_sum,
                       nullptr);
  return grad_sum / static_cast<double>(n);
}

ActorTermsDetail actor_terms_detail(const AgentBundle& bundle, const BatchView& v,
                                    double gamma_h, double w) {
  const int n = static_cast<int>(v.x.cols());
  const int ad = bundle.actor.output_size();

  Mlp::BatchTape actor_tape;
  const Eigen::MatrixXd u_cur = bundle.actor.forward_batch(v.x, &actor_tape);
  const Eigen::MatrixXd critic_in = concat_rows(v.x, u_cur);

  Mlp::BatchTape q_tape, qhat_tape;
  bundle.critic.forward_batch(critic_in, &q_tape);
  const Eigen::MatrixXd qhat_cur = bundle.pretrained_critic.forward_batch(critic_in, &qhat_tape);

  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(1, n);
  Eigen::MatrixXd dq_din, dqhat_din;
  bundle.critic.backward_batch(q_tape, ones, nullptr, &dq_din);
  bundle.pretrained_critic.backward_batch(qhat_tape, ones, nullptr, &dqhat_din);

  Vector grad_q_sum, grad_qhat_sum;
  std::vector<Eigen::MatrixXd> q_deltas, qhat_deltas;
  bundle.actor.backward_batch(actor_tape, dq_din.bottomRows(ad), &grad_q_sum, nullptr,
                              &q_deltas);
  bundle.actor.backward_batch(actor_tape, dqhat_din.bottomRows(ad), &grad_qhat_sum,
                              nullptr, &qhat_deltas);

  const Eigen::MatrixXd u_pre = bundle.pretrained_actor.forward_batch(v.x);
  const Eigen::MatrixXd qhat_pre =
      bundle.pretrained_critic.forward_batch(concat_rows(v.x, u_pre));

  ActorTermsDetail d;
  d.mean_grad_q = grad_q_sum / static_cast<double>(n);
  d.q_hat_scale = qhat_pre.cwiseAbs().mean();

  LieTerms& t = d.terms;
  t.gamma_h = gamma_h;
  t.w = w;
  // l_f is the mean of per-sample gradient inner products, not the inner
  // product of the mean gradients.
  t.l_f = per_sample_grad_inner_sum(bundle.actor, actor_tape, qhat_deltas, q_deltas) /
          static_cast<double>(n);
  t.l_g = -(grad_qhat_sum / static_cast<double>(n));
  t.h = (qhat_pre - qhat_cur).mean();
  t.l_a = t.l_f + gamma_h * t.h;
  t.l_b = -gamma_h * t.l_a / (w * t.l_g.squaredNorm() + gamma_h * gamma_h);
  return d;
}

}  // namespace

ExplorationNoise::ExplorationNoise(const NoiseParams& params, int dim, std::uint64_t seed)
    : params_(params), dim_(dim), rng_(make_rng(seed)) {
  if (params_.sigma < 0.0) throw std::invalid_argument("noise: sigma must be >= 0");
  if (params_.ou_rate < 0.0) throw std::invalid_argument("noise: ou_rate must be >= 0");
  state_ = Vector::Zero(dim_);
}

void ExplorationNoise::reset() { state_.setZero(); }

Vector ExplorationNoise::sample(double scale) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector xi(dim_);
  for (int i = 0; i < dim_; ++i) xi[i] = gauss(rng_);
  const double sigma = params_.sigma * scale;
  if (params_.kind == NoiseKind::Gaussian) {
    return sigma * xi;
  }
  state_ += params_.ou_rate * (Vector::Constant(dim_, params_.ou_mean) - state_) *
                params_.ou_dt +
            sigma * std::sqrt(params_.ou_dt) * xi;
  return state_;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(make_rng(seed)) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
  storage_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(Transition tr) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(tr));
  } else {
    storage_[next_] = std::move(tr);
    next_ = (next_ + 1) % capacity_;
  }
}

std::vector<const Transition*> ReplayBuffer::sample(int n) {
  if (storage_.empty()) throw std::runtime_error("ReplayBuffer: sample from empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
  std::vector<const Transition*> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(&storage_[pick(rng_)]);
  return out;
}

GradReport td_loss_grad(const AgentBundle& bundle,
                        const std::vector<const Transition*>& batch, CostChannel channel,
                        double discount, double cost_w, bool use_targets) {
  const BatchView v = make_view(batch);
  const int n = static_cast<int>(batch.size());

  const Mlp& boot_actor = use_targets ? bundle.target_actor : bundle.actor;
  const Mlp& boot_critic = use_targets ? bundle.target_critic : bundle.critic;
  const Eigen::MatrixXd u_next = boot_actor.forward_batch(v.x_next);
  const Eigen::MatrixXd q_next = boot_critic.forward_batch(concat_rows(v.x_next, u_next));

  const Eigen::VectorXd cost = stage_cost(bundle, v, channel, cost_w);
  const Eigen::VectorXd target =
      cost + discount * (v.not_terminal.array() * q_next.row(0).transpose().array()).matrix();

  Mlp::BatchTape q_tape;
  const Eigen::MatrixXd q = bundle.critic.forward_batch(concat_rows(v.x, v.u), &q_tape);
  const Eigen::RowVectorXd resid = q.row(0) - target.transpose();

  GradReport report;
  report.value = resid.squaredNorm() / static_cast<double>(n);
  const Eigen::MatrixXd dy = (2.0 / static_cast<double>(n)) * resid;
  bundle.critic.backward_batch(q_tape, dy, &report.grad, nullptr);
  return report;
}

double critic_update(AgentBundle& bundle, const std::vector<const Transition*>& batch,
                     double alpha_q, CostChannel channel, double discount, double cost_w,
                     bool use_targets) {
  const GradReport g = td_loss_grad(bundle, batch, channel, discount, cost_w, use_targets);
  bundle.critic.unflatten(bundle.critic.flatten() - alpha_q * g.grad);
  return g.value;
}

LieTerms cbf_actor_terms(const AgentBundle& bundle,
                         const std::vector<const Transition*>& batch, double gamma_h,
                         double w) {
  return actor_terms_detail(bundle, make_view(batch), gamma_h, w).terms;
}

CbfActorUpdate actor_update_cbfpa(AgentBundle& bundle,
                                  const std::vector<const Transition*>& batch,
                                  double alpha_mu, double gamma_h, double w,
                                  bool force_inactive) {
  const BatchView v = make_view(batch);
  const ActorTermsDetail d = actor_terms_detail(bundle, v, gamma_h, w);

  CbfActorUpdate update;
  if (force_inactive) {
    update.decision.a = Vector::Zero(d.mean_grad_q.size());
    update.decision.branch = CbfBranch::Inactive;
  } else {
    update.decision = closed_form_controller(d.terms);
  }
  update.h_term = d.terms.h;
  update.q_hat_scale = d.q_hat_scale;
  update.grad_norm = d.mean_grad_q.norm();

  bundle.actor.unflatten(bundle.actor.flatten() -
                         alpha_mu * (d.mean_grad_q - update.decision.a));
  return update;
}

double actor_update_baseline(AgentBundle& bundle,
                             const std::vector<const Transition*>& batch, double alpha_mu,
                             BaselineVariant /*variant*/) {
  const BatchView v = make_view(batch);
  const Vector grad = mean_grad_through_actor(bundle.critic, bundle.actor, v.x);
  bundle.actor.unflatten(bundle.actor.flatten() - alpha_mu * grad);
  return grad.norm();
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (!target.same_architecture(online)) {
    throw std::invalid_argument("soft_update: architecture mismatch");
  }
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("soft_update: tau in [0,1]");
  target.unflatten(tau * online.flatten() + (1.0 - tau) * target.flatten());
}

namespace {

void check_config(const TrainConfig& c) {
  if (c.episodes < 0) throw std::invalid_argument("train: episodes must be >= 0");
  if (c.horizon < 1) throw std::invalid_argument("train: horizon must be >= 1");
  if (c.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  if (!(c.tau > 0.0 && c.tau <= 1.0)) throw std::invalid_argument("train: tau in (0,1]");
  if (!(c.alpha_q > 0.0)) throw std::invalid_argument("train: alpha_q must be > 0");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) {
    throw std::invalid_argument("train: epsilon in (0,1)");
  }
  if (!(c.gamma_h > 0.0)) throw std::invalid_argument("train: gamma_h must be > 0");
  if (c.w < 0.0) throw std::invalid_argument("train: w must be >= 0");
}

bool bundle_finite(const AgentBundle& b) {
  return b.actor.flatten().allFinite() && b.critic.flatten().allFinite();
}

}  // namespace

TrainResult train(const TrainConfig& config, const Environment& env, TrainMode mode,
                  const AgentBundle* pretrained) {
  check_config(config);
  const int sd = env.state_dim();
  const int ad = env.action_dim();
  const int h = config.hidden;

  AgentBundle b;
  if (mode == TrainMode::Pretrain) {
    b.actor = Mlp::random({sd, h, h, ad}, Activation::Tanh, OutputActivation::TanhScaled,
                          1.0, derive_seed(config.seed, 1));
    b.critic = Mlp::random({sd + ad, h, h, 1}, Activation::Tanh,
                           OutputActivation::Identity, 1.0, derive_seed(config.seed, 2));
    b.pretrained_actor = b.actor;
    b.pretrained_critic = b.critic;
  } else {
    if (!pretrained) throw std::invalid_argument("train: adapt modes need a pretrained bundle");
    b.pretrained_actor = pretrained->actor;
    b.pretrained_critic = pretrained->critic;
    b.actor = pretrained->actor;  // theta_mu starts exactly at the pretrained optimum
    if (config.adapt_critic_init == CriticInit::Fresh) {
      b.critic = Mlp::random({sd + ad, h, h, 1}, Activation::Tanh,
                             OutputActivation::Identity, 1.0, derive_seed(config.seed, 2));
    } else {
      b.critic = pretrained->critic;
    }
  }
  b.target_actor = b.actor;
  b.target_critic = b.critic;

  CostChannel channel = CostChannel::Original;
  switch (mode) {
    case TrainMode::Pretrain: channel = CostChannel::Original; break;
    case TrainMode::AdaptCbfPa: channel = CostChannel::Additional; break;
    case TrainMode::AdaptMorl: channel = CostChannel::Morl; break;
    case TrainMode::AdaptBc: channel = CostChannel::Bc; break;
  }
  const double discount =
      mode == TrainMode::Pretrain ? config.discount_hat : config.discount;
  const double alpha_mu = config.epsilon * config.alpha_q;

  ReplayBuffer buffer(config.buffer_capacity, derive_seed(config.seed, 3));
  ExplorationNoise noise(config.noise, ad, derive_seed(config.seed, 4));

  TrainResult result;
  for (int e = 0; e < config.episodes; ++e) {
    const double noise_scale =
        config.noise.anneal && config.episodes > 1
            ? 1.0 - static_cast<double>(e) / static_cast<double>(config.episodes)
            : 1.0;
    EnvState s = env.reset(derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(e)));
    noise.reset();

    EpisodeLog log;
    log.episode = e;
    double add_sum = 0.0, c_star_sum = 0.0, h_sum = 0.0, grad_sum = 0.0, loss_sum = 0.0;
    int updates = 0;

    for (int t = 0; t < config.horizon && !s.terminal; ++t) {
      Vector u = b.actor.forward(s.x) + noise.sample(noise_scale);
      if (!u.allFinite()) {
        result.diverged = true;
        result.diverged_episode = e;
        break;
      }
      for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = clamp01(u[i]);
      const auto sr = env.step(s, u);
      const bool truncated = sr.next.terminal &&
                             sr.next.reason == TerminationReason::HorizonReached;
      const bool stored_terminal =
          sr.next.terminal && !(config.bootstrap_on_truncation && truncated);
      buffer.push(Transition{s.x, u, sr.next.x, sr.cost_original, sr.cost_additional,
                             stored_terminal});
      log.ep_cost_original += sr.cost_original;
      add_sum += sr.cost_additional;
      ++log.steps;

      if (buffer.size() >= static_cast<std::size_t>(config.batch)) {
        for (int round = 0; round < config.updates_per_step; ++round) {
          const auto batch = buffer.sample(config.batch);
          loss_sum += critic_update(b, batch, config.alpha_q, channel, discount,
                                    config.w, config.use_target_networks);
          if (mode == TrainMode::AdaptCbfPa) {
            const CbfActorUpdate up =
                actor_update_cbfpa(b, batch, alpha_mu, config.gamma_h, config.w,
                                   config.force_inactive_controller);
            c_star_sum += up.decision.c_star;
            h_sum += up.h_term;
            grad_sum += up.grad_norm;
            const double eps_rl = config.surrogate_slack_factor * up.q_hat_scale;
            if (up.h_term < -up.decision.c_star - eps_rl) ++log.surrogate_violations;
          } else {
            const BaselineVariant variant = mode == TrainMode::AdaptMorl
                                                ? BaselineVariant::Morl
                                                : (mode == TrainMode::AdaptBc
                                                       ? BaselineVariant::BehaviorClone
                                                       : BaselineVariant::Plain);
            grad_sum += actor_update_baseline(b, batch, alpha_mu, variant);
          }
          soft_update(b.target_actor, b.actor, config.tau);
          soft_update(b.target_critic, b.critic, config.tau);
          ++updates;
        }
      }
      s = sr.next;
    }

    if (log.steps > 0) log.ep_cost_additional_mean = add_sum / log.steps;
    if (updates > 0) {
      log.c_star_mean = c_star_sum / updates;
      log.h_term_mean = h_sum / updates;
      log.actor_grad_norm = grad_sum / updates;
      log.critic_loss = loss_sum / updates;
    }
    result.total_surrogate_violations += log.surrogate_violations;
    result.log.push_back(log);

    if (!bundle_finite(b)) {
      result.diverged = true;
      result.diverged_episode = e;
    }
    if (result.diverged) break;
  }
  result.bundle = std::move(b);
  return result;
}

std::vector<EvalEpisode> evaluate_policy(const Environment& env, const Mlp& actor,
                                         int episodes, int horizon, std::uint64_t seed) {
  std::vector<EvalEpisode> out;
  out.reserve(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    EnvState s = env.reset(derive_seed(seed, static_cast<std::uint64_t>(ep)));
    EvalEpisode stats;
    double add_sum = 0.0;
    for (int t = 0; t < horizon; ++t) {
      Vector u = actor.forward(s.x);
      for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = clamp01(u[i]);
      const auto sr = env.step(s, u);
      stats.cost_original_sum += sr.cost_original;
      add_sum += sr.cost_additional;
      ++stats.steps;
      if (sr.next.terminal && sr.next.reason == TerminationReason::BoundViolation) {
        stats.bound_violation = true;
        break;
      }
      s = sr.next;
    }
    if (stats.steps > 0) stats.cost_additional_mean = add_sum / stats.steps;
    out.push_back(stats);
  }
  return out;
}

void write_training_log_csv(const std::vector<EpisodeLog>& log, const std::string& path) {
  CsvWriter out(path);
  out.write_header({"episode", "ep_cost_original", "ep_cost_additional_mean",
                    "c_star_mean", "h_term_mean", "actor_grad_norm", "critic_loss"});
  for (const EpisodeLog& e : log) {
    out.write_row(std::vector<double>{static_cast<double>(e.episode), e.ep_cost_original,
                                      e.ep_cost_additional_mean, e.c_star_mean,
                                      e.h_term_mean, e.actor_grad_norm, e.critic_loss});
  }
}

void save_bundle(const AgentBundle& bundle, const std::string& dir,
                 const std::string& prefix) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  bundle.actor.save((fs::path(dir) / (prefix + "_actor.net")).string());
  bundle.critic.save((fs::path(dir) / (prefix + "_critic.net")).string());
  bundle.target_actor.save((fs::path(dir) / (prefix + "_target_actor.net")).string());
  bundle.target_critic.save((fs::path(dir) / (prefix + "_target_critic.net")).string());
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace cbfpa
