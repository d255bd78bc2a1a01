#include "cbfpa/cbf_core.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cbfpa/rng.hpp"

namespace cbfpa {

namespace {

std::atomic<std::uint64_t> g_hard_active_count{0};

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string("lie_terms: non-finite ") + field);
  }
}

void require_finite(const Vector& v, const char* field) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw std::invalid_argument(std::string("lie_terms: non-finite ") + field +
                                  "[" + std::to_string(i) + "]");
    }
  }
}

}  // namespace

LieTerms lie_terms(const Vector& grad_j, const Vector& grad_g, double g_ref,
                   double g_now, double gamma_h, double w) {
  if (grad_j.size() < 1 || grad_j.size() != grad_g.size()) {
    throw std::invalid_argument("lie_terms: gradient dimensions must match and be >= 1");
  }
  require_finite(grad_j, "grad_j");
  require_finite(grad_g, "grad_g");
  require_finite(g_ref, "g_ref");
  require_finite(g_now, "g_now");
  require_finite(gamma_h, "gamma_h");
  require_finite(w, "w");
  if (!(gamma_h > 0.0)) throw std::invalid_argument("lie_terms: gamma_h must be > 0");
  if (w < 0.0) throw std::invalid_argument("lie_terms: w must be >= 0");

  LieTerms t;
  t.gamma_h = gamma_h;
  t.w = w;
  t.l_f = grad_g.dot(grad_j);
  t.l_g = -grad_g;
  t.h = g_ref - g_now;
  t.l_a = t.l_f + gamma_h * t.h;
  // Denominator is >= gamma_h^2 > 0, so l_b is always defined.
  t.l_b = -gamma_h * t.l_a / (w * t.l_g.squaredNorm() + gamma_h * gamma_h);
  return t;
}

double constraint_residual(const LieTerms& t, const Vector& a, double c) {
  return t.l_f + t.l_g.dot(a) + t.gamma_h * (t.h + c);
}

double qp_objective(const LieTerms& t, const Vector& a, double c) {
  return 0.5 * a.squaredNorm() + 0.5 * t.w * c * c;
}

CbfDecision closed_form_controller(const LieTerms& t) {
  if (t.w == 0.0) {
    throw std::invalid_argument(
        "closed_form_controller: w = 0, use fixed_relaxation_controller");
  }
  const Eigen::Index p = t.l_g.size();
  CbfDecision d;
  d.a = Vector::Zero(p);

  if (t.l_a >= 0.0) {
    d.branch = CbfBranch::Inactive;
    d.c_star = 0.0;
  } else if (t.l_b >= 0.0) {
    d.branch = CbfBranch::RelaxedActive;
    const double denom = t.l_g.squaredNorm() + t.gamma_h * t.gamma_h / t.w;
    if (std::abs(denom) < kDenominatorGuard) {
      d.infeasible = true;
      d.c_star = 0.0;
    } else {
      d.a = (-t.l_a / denom) * t.l_g;
      d.c_star = t.l_b;
    }
  } else {
    d.branch = CbfBranch::HardActive;
    g_hard_active_count.fetch_add(1, std::memory_order_relaxed);
    const double denom = t.l_g.squaredNorm();
    if (denom < kDenominatorGuard) {
      d.infeasible = true;
      d.c_star = 0.0;
    } else {
      d.a = (-t.l_a / denom) * t.l_g;
      d.c_star = 0.0;
    }
  }
  d.residual = constraint_residual(t, d.a, d.c_star);
  return d;
}

CbfDecision fixed_relaxation_controller(const LieTerms& t, double c_fixed) {
  if (!(c_fixed >= 0.0)) {
    throw std::invalid_argument("fixed_relaxation_controller: c_fixed must be >= 0");
  }
  const Eigen::Index p = t.l_g.size();
  CbfDecision d;
  d.a = Vector::Zero(p);
  d.c_star = c_fixed;

  const double margin = t.l_a + t.gamma_h * c_fixed;
  if (margin >= 0.0) {
    d.branch = CbfBranch::Inactive;
  } else {
    d.branch = CbfBranch::HardActive;
    const double denom = t.l_g.squaredNorm();
    if (denom < kDenominatorGuard) {
      d.infeasible = true;
    } else {
      d.a = (-margin / denom) * t.l_g;
    }
  }
  d.residual = constraint_residual(t, d.a, d.c_star);
  return d;
}

CbfDecision qp_oracle(const LieTerms& t) {
  if (!(t.w > 0.0)) throw std::invalid_argument("qp_oracle: requires w > 0");
  const Eigen::Index p = t.l_g.size();
  const double gg = t.l_g.squaredNorm();
  const double gh = t.gamma_h;
  // Constant part of the barrier inequality at a = 0, c = 0.
  const double g0 = t.l_f + gh * t.h;

  struct Candidate {
    Vector a;
    double c;
    CbfBranch branch;
    bool ok = false;
  };
  Candidate candidates[3];

  // Active set {}: unconstrained stationary point of the objective.
  // Stationarity gives a = 0, c = 0 (lambda_2 = 0 from the c-equation).
  {
    Candidate& cand = candidates[0];
    cand.a = Vector::Zero(p);
    cand.c = 0.0;
    cand.branch = CbfBranch::Inactive;
    cand.ok = (g0 >= 0.0);  // primal feasibility of the barrier inequality
  }

  // Active set {barrier}: solve  a = lambda1 * l_g, w c = lambda1 * gh,
  // g0 + l_g.a + gh c = 0  for lambda1.
  {
    Candidate& cand = candidates[1];
    cand.branch = CbfBranch::RelaxedActive;
    const double coeff = gg + gh * gh / t.w;
    if (std::abs(coeff) >= kDenominatorGuard) {
      const double lambda1 = -g0 / coeff;
      const double c = lambda1 * gh / t.w;
      if (lambda1 >= 0.0 && c >= 0.0) {
        cand.a = lambda1 * t.l_g;
        cand.c = c;
        cand.ok = true;
      }
    }
  }

  // Active set {barrier, c >= 0}: c = 0, a = lambda1 * l_g with
  // g0 + lambda1 * gg = 0; lambda2 = -lambda1 * gh from the c-equation.
  {
    Candidate& cand = candidates[2];
    cand.branch = CbfBranch::HardActive;
    if (gg >= kDenominatorGuard) {
      const double lambda1 = -g0 / gg;
      const double lambda2 = -lambda1 * gh;
      if (lambda1 >= 0.0 && lambda2 >= 0.0) {
        cand.a = lambda1 * t.l_g;
        cand.c = 0.0;
        cand.ok = true;
      }
    }
  }
  // Active set {c >= 0} alone forces lambda2 = 0 via stationarity in c, so it
  // coincides with the empty active set and needs no separate candidate.

  int best = -1;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (!candidates[i].ok) continue;
    const double obj = qp_objective(t, candidates[i].a, candidates[i].c);
    if (obj < best_obj) {
      best_obj = obj;
      best = i;
    }
  }
  if (best < 0) {
    throw std::logic_error("qp_oracle: no feasible KKT candidate (internal consistency)");
  }

  CbfDecision d;
  d.a = candidates[best].a;
  d.c_star = candidates[best].c;
  d.branch = candidates[best].branch;
  d.residual = constraint_residual(t, d.a, d.c_star);
  return d;
}

TighteningMargin tightening_margin(double step_size, double lipschitz_estimate,
                                   double flow_norm_bound) {
  if (!(step_size > 0.0)) {
    throw std::invalid_argument("tightening_margin: step_size must be > 0");
  }
  if (lipschitz_estimate < 0.0 || flow_norm_bound < 0.0) {
    throw std::invalid_argument("tightening_margin: estimates must be >= 0");
  }
  TighteningMargin m;
  m.step_size = step_size;
  m.lipschitz_estimate = lipschitz_estimate;
  m.flow_norm_bound = flow_norm_bound;
  m.delta = 0.5 * step_size * lipschitz_estimate * flow_norm_bound;
  return m;
}

std::uint64_t hard_active_count() {
  return g_hard_active_count.load(std::memory_order_relaxed);
}

void reset_hard_active_count() {
  g_hard_active_count.store(0, std::memory_order_relaxed);
}

double estimate_lipschitz(const std::function<double(const Vector&)>& f,
                          const Vector& lo, const Vector& hi, int samples,
                          std::uint64_t seed) {
  if (lo.size() != hi.size() || lo.size() < 1) {
    throw std::invalid_argument("estimate_lipschitz: bad box");
  }
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double eps = 1e-5 * std::max(1.0, (hi - lo).norm());
  double worst = 0.0;
  Vector x(lo.size()), dir(lo.size());
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    }
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = gauss(rng);
    const double n = dir.norm();
    if (n == 0.0) continue;
    dir /= n;
    const double slope = std::abs(f(x + eps * dir) - f(x - eps * dir)) / (2.0 * eps);
    worst = std::max(worst, slope);
  }
  return worst;
}

double estimate_flow_norm_bound(const std::function<Vector(const Vector&)>& flow,
                                const Vector& lo, const Vector& hi, int samples,
                                std::uint64_t seed) {
  if (lo.size() != hi.size() || lo.size() < 1) {
    throw std::invalid_argument("estimate_flow_norm_bound: bad box");
  }
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  Vector x(lo.size());
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    }
    worst = std::max(worst, flow(x).norm());
  }
  return worst;
}

}  // namespace cbfpa
