#include "cbfpa/scalar_flow.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "cbfpa/csv.hpp"
#include "cbfpa/rng.hpp"

namespace cbfpa {

const char* flow_method_name(FlowMethod m) {
  switch (m) {
    case FlowMethod::CbfPa: return "cbfpa";
    case FlowMethod::Gd: return "gd";
    case FlowMethod::Mogd: return "mogd";
  }
  return "?";
}

ObjectivePair illustrative_objectives() {
  ObjectivePair obj;
  obj.eval_j = [](const Vector& t) { return std::sin(t[0]) + (t[1] - 8.0) * (t[1] - 8.0); };
  obj.grad_j = [](const Vector& t) {
    Vector g(2);
    g[0] = std::cos(t[0]);
    g[1] = 2.0 * (t[1] - 8.0);
    return g;
  };
  obj.eval_g = [](const Vector& t) { return t[0] * t[0] * t[0] + t[1] * t[1] * t[1]; };
  obj.grad_g = [](const Vector& t) {
    Vector g(2);
    g[0] = 3.0 * t[0] * t[0];
    g[1] = 3.0 * t[1] * t[1];
    return g;
  };
  obj.theta_ref = Vector::Zero(2);
  obj.g_ref = 0.0;
  return obj;
}

std::pair<Vector, CbfDecision> step_cbf_pa(const ObjectivePair& obj, const Vector& theta,
                                           double alpha, double gamma_h, double w) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step_cbf_pa: alpha must be > 0");
  const Vector gj = obj.grad_j(theta);
  CbfDecision d;
  if (std::isinf(obj.g_ref) && obj.g_ref > 0.0) {
    // Constraint disabled: the barrier can never activate.
    d.a = Vector::Zero(theta.size());
    d.branch = CbfBranch::Inactive;
    d.residual = 0.0;
  } else {
    const Vector gg = obj.grad_g(theta);
    d = closed_form_controller(
        lie_terms(gj, gg, obj.g_ref, obj.eval_g(theta), gamma_h, w));
  }
  return {theta - alpha * (gj - d.a), d};
}

Vector step_gd(const ObjectivePair& obj, const Vector& theta, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step_gd: alpha must be > 0");
  const Vector gj = obj.grad_j(theta);
  const Vector zero = Vector::Zero(theta.size());
  return theta - alpha * (gj - zero);
}

Vector step_mogd(const ObjectivePair& obj, const Vector& theta, double alpha, double w) {
  if (!(alpha > 0.0)) throw std::invalid_argument("step_mogd: alpha must be > 0");
  if (w < 0.0) throw std::invalid_argument("step_mogd: w must be >= 0");
  Vector g = obj.grad_j(theta);
  if (w != 0.0) {
    g += 2.0 * w * (obj.eval_g(theta) - obj.g_ref) * obj.grad_g(theta);
  }
  return theta - alpha * g;
}

FlowTrace run_flow(const ObjectivePair& obj, FlowMethod method, int steps, double alpha,
                   double gamma_h, double w, const Vector& theta0) {
  if (steps < 1) throw std::invalid_argument("run_flow: steps must be >= 1");
  FlowTrace trace;
  trace.method = method;
  trace.thetas.reserve(steps + 1);

  Vector theta = theta0;
  const bool constrained = !(std::isinf(obj.g_ref) && obj.g_ref > 0.0);
  auto log_point = [&](const Vector& th) {
    double c_star = 0.0;
    if (method == FlowMethod::CbfPa && constrained) {
      const CbfDecision d = closed_form_controller(
          lie_terms(obj.grad_j(th), obj.grad_g(th), obj.g_ref, obj.eval_g(th), gamma_h, w));
      c_star = d.c_star;
    }
    trace.thetas.push_back(th);
    trace.c_stars.push_back(c_star);
    trace.j_values.push_back(obj.eval_j(th));
    trace.g_values.push_back(obj.eval_g(th));
  };

  log_point(theta);
  for (int k = 0; k < steps; ++k) {
    Vector next;
    switch (method) {
      case FlowMethod::CbfPa: next = step_cbf_pa(obj, theta, alpha, gamma_h, w).first; break;
      case FlowMethod::Gd: next = step_gd(obj, theta, alpha); break;
      case FlowMethod::Mogd: next = step_mogd(obj, theta, alpha, w); break;
    }
    if (!next.allFinite() || next.norm() > 1e6) {
      trace.diverged = true;
      break;
    }
    theta = next;
    log_point(theta);
  }

  double sum = 0.0;
  for (double g : trace.g_values) sum += g;
  trace.g_bar = sum / static_cast<double>(trace.g_values.size());
  return trace;
}

FlowTrace run_flow(const ObjectivePair& obj, FlowMethod method, int steps, double alpha,
                   double gamma_h, double w) {
  return run_flow(obj, method, steps, alpha, gamma_h, w, obj.theta_ref);
}

double validate_objectives(const ObjectivePair& obj, int samples, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> box(-3.0, 3.0);
  const double fd_step = 1e-6;
  double worst = 0.0;
  const Eigen::Index p = obj.theta_ref.size();
  for (int s = 0; s < samples; ++s) {
    Vector x(p);
    for (Eigen::Index i = 0; i < p; ++i) x[i] = box(rng);
    for (int which = 0; which < 2; ++which) {
      const auto& eval = which == 0 ? obj.eval_j : obj.eval_g;
      const Vector grad = which == 0 ? obj.grad_j(x) : obj.grad_g(x);
      for (Eigen::Index i = 0; i < p; ++i) {
        Vector xp = x, xm = x;
        xp[i] += fd_step;
        xm[i] -= fd_step;
        const double fd = (eval(xp) - eval(xm)) / (2.0 * fd_step);
        const double scale = std::max({1.0, std::abs(fd), std::abs(grad[i])});
        worst = std::max(worst, std::abs(fd - grad[i]) / scale);
      }
    }
  }
  return worst;
}

std::string flow_csv_name(FlowMethod method, double w, double gamma_h, double alpha) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "flow_%s_w%g_g%g_a%g.csv", flow_method_name(method), w,
                gamma_h, alpha);
  return buf;
}

void write_flow_csv(const FlowTrace& trace, const std::string& path) {
  CsvWriter out(path);
  const Eigen::Index p = trace.thetas.empty() ? 0 : trace.thetas.front().size();
  std::vector<std::string> header = {"step"};
  for (Eigen::Index i = 0; i < p; ++i) header.push_back("theta_" + std::to_string(i));
  header.insert(header.end(), {"c_star", "J", "G"});
  out.write_header(header);
  for (std::size_t k = 0; k < trace.thetas.size(); ++k) {
    std::vector<double> row = {static_cast<double>(k)};
    for (Eigen::Index i = 0; i < p; ++i) row.push_back(trace.thetas[k][i]);
    row.push_back(trace.c_stars[k]);
    row.push_back(trace.j_values[k]);
    row.push_back(trace.g_values[k]);
    out.write_row(row);
  }
}

}  // namespace cbfpa
