#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace cbfpa {

using Vector = Eigen::VectorXd;

// Scalar terms of the barrier condition evaluated at one parameter point.
// Built from the gradients of the additional objective J and the original
// objective G, the reference value g_ref = G at the pre-optimized point, and
// the current value g_now = G(theta):
//
//   l_f = grad_g . grad_j            (drift term, barrier derivative along -grad J)
//   l_g = -grad_g                    (input channel of the barrier derivative)
//   h   = g_ref - g_now              (barrier value, >= -c on the admissible set)
//   l_a = l_f + gamma_h * h
//   l_b = -gamma_h * l_a / (w * |l_g|^2 + gamma_h^2)   (minimal relaxation candidate)
//
// gamma_h > 0 is the slope of the linear class-K function; w >= 0 weights the
// quadratic relaxation penalty.
struct LieTerms {
  double l_f = 0.0;
  Vector l_g;
  double h = 0.0;
  double l_a = 0.0;
  double l_b = 0.0;
  double gamma_h = 1.0;
  double w = 1.0;
};

enum class CbfBranch { Inactive, RelaxedActive, HardActive };

// Output of one controller evaluation. `residual` is the value of the
// barrier inequality  l_f + l_g.a + gamma_h*(h + c)  at the returned point;
// it must be >= -eps for every decision. `infeasible` marks the degenerate
// |l_g|^2 ~ 0 branch where no finite controller can restore feasibility;
// the controller is zero there and the caller decides how to proceed.
struct CbfDecision {
  Vector a;
  double c_star = 0.0;
  CbfBranch branch = CbfBranch::Inactive;
  double residual = 0.0;
  bool infeasible = false;
};

struct TighteningMargin {
  double delta = 0.0;
  double lipschitz_estimate = 0.0;
  double flow_norm_bound = 0.0;
  double step_size = 0.0;
};

// Denominators below this magnitude are treated as the degenerate case.
inline constexpr double kDenominatorGuard = 1e-12;

// Assembles LieTerms from raw gradients. Rejects non-finite components with
// a diagnostic naming the offending field. gamma_h must be > 0, w >= 0.
LieTerms lie_terms(const Vector& grad_j, const Vector& grad_g, double g_ref,
                   double g_now, double gamma_h, double w);

// Closed-form solution of the relaxed barrier QP
//
//   min 1/2 |a|^2 + w/2 c^2   s.t.  l_f + l_g.a + gamma_h*(h + c) >= 0, c >= 0
//
// via its three-branch case split on (l_a, l_b). Requires w > 0 (the relaxed
// branch divides by w); callers with w = 0 use fixed_relaxation_controller.
CbfDecision closed_form_controller(const LieTerms& t);

// Variant for a fixed relaxation constant: c is pinned to c_fixed and only
// the controller is solved for. Active branch: a = -(l_a + gamma_h*c_fixed)
// * l_g / |l_g|^2.
CbfDecision fixed_relaxation_controller(const LieTerms& t, double c_fixed);

// Independent verification oracle: solves the same QP by enumerating all
// four active-set combinations of the two inequality constraints, solving
// each equality-constrained subproblem, filtering by primal/dual
// feasibility, and returning the feasible candidate of least objective.
// Shares no code with closed_form_controller.
CbfDecision qp_oracle(const LieTerms& t);

// Least inter-sample tightening margin for an Euler step of size step_size:
// delta = step_size/2 * lipschitz_estimate * flow_norm_bound. Callers shrink
// the barrier by passing g_ref - delta into lie_terms.
TighteningMargin tightening_margin(double step_size, double lipschitz_estimate,
                                   double flow_norm_bound);

// Barrier-inequality value at (a, c) for the given terms.
double constraint_residual(const LieTerms& t, const Vector& a, double c);

// QP objective 1/2 |a|^2 + w/2 c^2.
double qp_objective(const LieTerms& t, const Vector& a, double c);

// Process-wide count of HardActive activations in closed_form_controller.
// For gamma_h > 0 and w > 0 the branch is algebraically unreachable; the
// counter exists so tests can observe whether it ever fires.
std::uint64_t hard_active_count();
void reset_hard_active_count();

// Monte-Carlo estimate of the Lipschitz constant of f over an axis-aligned
// box: max sampled finite-difference slope over `samples` random
// (point, direction) pairs. Deterministic per seed.
double estimate_lipschitz(const std::function<double(const Vector&)>& f,
                          const Vector& lo, const Vector& hi, int samples,
                          std::uint64_t seed);

// Monte-Carlo bound on sup |flow(theta)| over a box (max over samples).
double estimate_flow_norm_bound(const std::function<Vector(const Vector&)>& flow,
                                const Vector& lo, const Vector& hi, int samples,
                                std::uint64_t seed);

}  // namespace cbfpa
