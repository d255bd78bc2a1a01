#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cbfpa/cbf_core.hpp"

namespace cbfpa {

// A pre-optimized objective G with reference minimizer theta_ref, paired with
// the additional objective J to adapt toward. Gradients are supplied
// analytically and can be validated against finite differences.
struct ObjectivePair {
  std::function<double(const Vector&)> eval_j;
  std::function<Vector(const Vector&)> grad_j;
  std::function<double(const Vector&)> eval_g;
  std::function<Vector(const Vector&)> grad_g;
  Vector theta_ref;
  double g_ref = 0.0;
};

enum class FlowMethod { CbfPa, Gd, Mogd };

const char* flow_method_name(FlowMethod m);

struct FlowTrace {
  std::vector<Vector> thetas;
  std::vector<double> c_stars;
  std::vector<double> j_values;
  std::vector<double> g_values;
  double g_bar = 0.0;  // arithmetic mean of g_values
  FlowMethod method = FlowMethod::CbfPa;
  bool diverged = false;
};

// The 2-D test problem: J = sin(x) + (y - 8)^2, G = x^3 + y^3 with
// theta_ref = [0, 0] and g_ref = 0.
ObjectivePair illustrative_objectives();

// One barrier-filtered descent step: theta - alpha * (grad J - a), where a
// comes from the closed-form controller. g_ref = +inf disables the
// constraint entirely (decision is the zero controller), which makes the
// update bit-identical to step_gd.
std::pair<Vector, CbfDecision> step_cbf_pa(const ObjectivePair& obj, const Vector& theta,
                                           double alpha, double gamma_h, double w);

Vector step_gd(const ObjectivePair& obj, const Vector& theta, double alpha);

// Penalty baseline: descends J + w * (G - g_ref)^2.
Vector step_mogd(const ObjectivePair& obj, const Vector& theta, double alpha, double w);

// Iterates the chosen step from theta0 (default theta_ref), logging theta,
// c*, J and G at every point including the start. A non-finite iterate or
// |theta| > 1e6 truncates the run with the diverged flag set.
FlowTrace run_flow(const ObjectivePair& obj, FlowMethod method, int steps, double alpha,
                   double gamma_h, double w, const Vector& theta0);
FlowTrace run_flow(const ObjectivePair& obj, FlowMethod method, int steps, double alpha,
                   double gamma_h, double w);

// Spot-checks analytic gradients against central finite differences at
// `samples` random points; returns the worst relative error seen.
double validate_objectives(const ObjectivePair& obj, int samples, std::uint64_t seed);

std::string flow_csv_name(FlowMethod method, double w, double gamma_h, double alpha);
void write_flow_csv(const FlowTrace& trace, const std::string& path);

}  // namespace cbfpa
