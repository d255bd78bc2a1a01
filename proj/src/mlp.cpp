#include "cbfpa/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cbfpa/rng.hpp"

namespace cbfpa {

namespace {

double apply_hidden(Activation act, double z) {
  return act == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

// Derivative of the hidden activation expressed through its output value.
// For relu, a == 0 covers both z < 0 and the kink at z == 0 (subgradient 0).
double hidden_deriv_from_output(Activation act, double a) {
  return act == Activation::Tanh ? 1.0 - a * a : (a > 0.0 ? 1.0 : 0.0);
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes, Activation hidden, OutputActivation output,
         double output_bound)
    : layer_sizes_(std::move(layer_sizes)),
      hidden_(hidden),
      output_(output),
      output_bound_(output_bound) {
  if (layer_sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least two layers");
  for (int n : layer_sizes_) {
    if (n < 1) throw std::invalid_argument("Mlp: layer sizes must be >= 1");
  }
  if (output_ == OutputActivation::TanhScaled && !(output_bound_ > 0.0)) {
    throw std::invalid_argument("Mlp: TanhScaled bound must be > 0");
  }
  const int L = static_cast<int>(layer_sizes_.size()) - 1;
  weights_.resize(L);
  biases_.resize(L);
  for (int l = 0; l < L; ++l) {
    weights_[l] = Eigen::MatrixXd::Zero(layer_sizes_[l + 1], layer_sizes_[l]);
    biases_[l] = Vector::Zero(layer_sizes_[l + 1]);
  }
}

Mlp Mlp::random(std::vector<int> layer_sizes, Activation hidden, OutputActivation output,
                double output_bound, std::uint64_t seed) {
  Mlp net(std::move(layer_sizes), hidden, output, output_bound);
  Rng rng = make_rng(seed);
  for (int l = 0; l < net.layer_count(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.layer_sizes_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto& W = net.weights_[l];
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = dist(rng);
    }
    for (Eigen::Index i = 0; i < net.biases_[l].size(); ++i) net.biases_[l][i] = dist(rng);
  }
  return net;
}

int Mlp::param_count() const {
  int p = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    p += layer_sizes_[l + 1] * layer_sizes_[l] + layer_sizes_[l + 1];
  }
  return p;
}

bool Mlp::same_architecture(const Mlp& other) const {
  return layer_sizes_ == other.layer_sizes_ && hidden_ == other.hidden_ &&
         output_ == other.output_ && output_bound_ == other.output_bound_;
}

Vector Mlp::flatten() const {
  Vector out(param_count());
  Eigen::Index k = 0;
  for (int l = 0; l < layer_count(); ++l) {
    const auto& W = weights_[l];
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) out[k++] = W(r, c);
    }
    for (Eigen::Index i = 0; i < biases_[l].size(); ++i) out[k++] = biases_[l][i];
  }
  return out;
}

void Mlp::unflatten(const Vector& params) {
  if (params.size() != param_count()) {
    throw std::invalid_argument("Mlp::unflatten: parameter count mismatch");
  }
  Eigen::Index k = 0;
  for (int l = 0; l < layer_count(); ++l) {
    auto& W = weights_[l];
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = params[k++];
    }
    for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l][i] = params[k++];
  }
}

Vector Mlp::forward(const Vector& input) const {
  Tape tape;
  return forward(input, tape);
}

Vector Mlp::forward(const Vector& input, Tape& tape) const {
  if (input.size() != input_size()) {
    throw std::invalid_argument("Mlp::forward: input size mismatch");
  }
  const int L = layer_count();
  tape.acts.assign(L + 1, Vector());
  tape.acts[0] = input;
  Vector a = input;
  for (int l = 0; l < L; ++l) {
    Vector z = weights_[l] * a + biases_[l];
    if (l + 1 < L) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = apply_hidden(hidden_, z[i]);
    } else if (output_ == OutputActivation::TanhScaled) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = output_bound_ * std::tanh(z[i]);
    }
    a = std::move(z);
    tape.acts[l + 1] = a;
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs, BatchTape* tape) const {
  if (inputs.rows() != input_size()) {
    throw std::invalid_argument("Mlp::forward_batch: input size mismatch");
  }
  const int L = layer_count();
  if (tape) tape->acts.assign(L + 1, Eigen::MatrixXd());
  if (tape) tape->acts[0] = inputs;
  Eigen::MatrixXd a = inputs;
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z = (weights_[l] * a).colwise() + biases_[l];
    if (l + 1 < L) {
      if (hidden_ == Activation::Tanh) {
        z = z.array().tanh();
      } else {
        z = z.array().max(0.0);
      }
    } else if (output_ == OutputActivation::TanhScaled) {
      z = output_bound_ * z.array().tanh();
    }
    a = std::move(z);
    if (tape) tape->acts[l + 1] = a;
  }
  return a;
}

void Mlp::backprop(const Tape& tape, const Vector& dy, Vector* param_grad,
                   Vector* input_cotangent) const {
  const int L = layer_count();
  if (dy.size() != output_size()) {
    throw std::invalid_argument("Mlp::backprop: cotangent size mismatch");
  }

  Vector delta = dy;
  if (output_ == OutputActivation::TanhScaled) {
    const Vector& y = tape.acts[L];
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
      const double t = y[i] / output_bound_;
      delta[i] *= output_bound_ * (1.0 - t * t);
    }
  }

  if (param_grad) *param_grad = Vector::Zero(param_count());
  // Offsets of each layer's block in the flat parameter vector.
  std::vector<Eigen::Index> offset(L);
  {
    Eigen::Index k = 0;
    for (int l = 0; l < L; ++l) {
      offset[l] = k;
      k += layer_sizes_[l + 1] * layer_sizes_[l] + layer_sizes_[l + 1];
    }
  }

  for (int l = L - 1; l >= 0; --l) {
    if (param_grad) {
      const Vector& a_prev = tape.acts[l];
      Eigen::Index k = offset[l];
      for (Eigen::Index r = 0; r < delta.size(); ++r) {
        for (Eigen::Index c = 0; c < a_prev.size(); ++c) {
          (*param_grad)[k++] = delta[r] * a_prev[c];
        }
      }
      for (Eigen::Index r = 0; r < delta.size(); ++r) (*param_grad)[k++] = delta[r];
    }
    if (l == 0) {
      if (input_cotangent) *input_cotangent = weights_[0].transpose() * delta;
      break;
    }
    Vector next = weights_[l].transpose() * delta;
    const Vector& a = tape.acts[l];
    for (Eigen::Index i = 0; i < next.size(); ++i) {
      next[i] *= hidden_deriv_from_output(hidden_, a[i]);
    }
    delta = std::move(next);
  }
}

void Mlp::backward_batch(const BatchTape& tape, const Eigen::MatrixXd& dY,
                         Vector* param_grad_sum, Eigen::MatrixXd* input_cotangent,
                         std::vector<Eigen::MatrixXd>* deltas) const {
  const int L = layer_count();
  if (dY.rows() != output_size()) {
    throw std::invalid_argument("Mlp::backward_batch: cotangent size mismatch");
  }

  Eigen::MatrixXd delta = dY;
  if (output_ == OutputActivation::TanhScaled) {
    const Eigen::ArrayXXd t = tape.acts[L].array() / output_bound_;
    delta.array() *= output_bound_ * (1.0 - t * t);
  }

  if (param_grad_sum) *param_grad_sum = Vector::Zero(param_count());
  if (deltas) deltas->assign(L, Eigen::MatrixXd());
  std::vector<Eigen::Index> offset(L);
  {
    Eigen::Index k = 0;
    for (int l = 0; l < L; ++l) {
      offset[l] = k;
      k += layer_sizes_[l + 1] * layer_sizes_[l] + layer_sizes_[l + 1];
    }
  }

  for (int l = L - 1; l >= 0; --l) {
    if (deltas) (*deltas)[l] = delta;
    if (param_grad_sum) {
      // dW_l = delta * acts[l]^T summed over the batch; rows of dW flatten
      // contiguously, so the row-major weight block maps directly.
      const Eigen::MatrixXd dW = delta * tape.acts[l].transpose();
      Eigen::Index k = offset[l];
      for (Eigen::Index r = 0; r < dW.rows(); ++r) {
        for (Eigen::Index c = 0; c < dW.cols(); ++c) (*param_grad_sum)[k++] = dW(r, c);
      }
      const Vector db = delta.rowwise().sum();
      for (Eigen::Index r = 0; r < db.size(); ++r) (*param_grad_sum)[k++] = db[r];
    }
    if (l == 0) {
      if (input_cotangent) *input_cotangent = weights_[0].transpose() * delta;
      break;
    }
    Eigen::MatrixXd next = weights_[l].transpose() * delta;
    if (hidden_ == Activation::Tanh) {
      next.array() *= 1.0 - tape.acts[l].array().square();
    } else {
      next.array() *= (tape.acts[l].array() > 0.0).cast<double>();
    }
    delta = std::move(next);
  }
}

void Mlp::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("Mlp::save: cannot open " + path);
  out << "cbfpa-mlp 1\n";
  out << "layers";
  for (int n : layer_sizes_) out << ' ' << n;
  out << '\n';
  out << "hidden " << activation_name(hidden_) << '\n';
  out << "output " << output_activation_name(output_);
  if (output_ == OutputActivation::TanhScaled) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), " %a", output_bound_);
    out << buf;
  }
  out << '\n';
  const Vector params = flatten();
  out << "params " << params.size() << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a\n", params[i]);
    out << buf;
  }
}

Mlp Mlp::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("Mlp::load: cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "cbfpa-mlp" || version != 1) {
    throw std::runtime_error("Mlp::load: bad header in " + path);
  }
  std::string keyword;
  in >> keyword;
  if (keyword != "layers") throw std::runtime_error("Mlp::load: expected 'layers'");
  std::string rest;
  std::getline(in, rest);
  std::vector<int> sizes;
  {
    std::stringstream ss(rest);
    int n;
    while (ss >> n) sizes.push_back(n);
  }
  std::string hidden_name;
  in >> keyword >> hidden_name;
  if (keyword != "hidden") throw std::runtime_error("Mlp::load: expected 'hidden'");
  const Activation hidden = hidden_name == "tanh" ? Activation::Tanh : Activation::Relu;
  in >> keyword;
  if (keyword != "output") throw std::runtime_error("Mlp::load: expected 'output'");
  std::string output_name;
  in >> output_name;
  OutputActivation output = OutputActivation::Identity;
  double bound = 1.0;
  if (output_name == "tanh_scaled") {
    output = OutputActivation::TanhScaled;
    std::string bound_text;
    in >> bound_text;
    bound = std::strtod(bound_text.c_str(), nullptr);
  }
  long long count = 0;
  in >> keyword >> count;
  if (keyword != "params") throw std::runtime_error("Mlp::load: expected 'params'");
  Mlp net(sizes, hidden, output, bound);
  if (count != net.param_count()) {
    throw std::runtime_error("Mlp::load: parameter count mismatch in " + path);
  }
  Vector params(count);
  std::string token;
  for (long long i = 0; i < count; ++i) {
    if (!(in >> token)) throw std::runtime_error("Mlp::load: truncated file " + path);
    params[i] = std::strtod(token.c_str(), nullptr);
  }
  net.unflatten(params);
  return net;
}

GradReport grad_scalar_output(const Mlp& net, const Vector& input) {
  if (net.output_size() != 1) {
    throw std::invalid_argument("grad_scalar_output: network output must be scalar");
  }
  Mlp::Tape tape;
  const Vector y = net.forward(input, tape);
  GradReport report;
  report.value = y[0];
  Vector dy(1);
  dy[0] = 1.0;
  net.backprop(tape, dy, &report.grad, nullptr);
  return report;
}

GradReport compose_grad(const Mlp& critic, const Mlp& actor, const Vector& state) {
  if (critic.output_size() != 1) {
    throw std::invalid_argument("compose_grad: critic output must be scalar");
  }
  if (critic.input_size() != state.size() + actor.output_size()) {
    throw std::invalid_argument("compose_grad: critic input must be state + action");
  }
  if (actor.input_size() != state.size()) {
    throw std::invalid_argument("compose_grad: actor input must match state");
  }
  Mlp::Tape actor_tape;
  const Vector action = actor.forward(state, actor_tape);
  Vector critic_in(critic.input_size());
  critic_in << state, action;
  Mlp::Tape critic_tape;
  const Vector q = critic.forward(critic_in, critic_tape);

  Vector dy(1);
  dy[0] = 1.0;
  Vector dq_dinput;
  critic.backprop(critic_tape, dy, nullptr, &dq_dinput);
  const Vector dq_daction = dq_dinput.tail(actor.output_size());

  GradReport report;
  report.value = q[0];
  actor.backprop(actor_tape, dq_daction, &report.grad, nullptr);
  return report;
}

const char* activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "relu";
}

const char* output_activation_name(OutputActivation a) {
  return a == OutputActivation::Identity ? "identity" : "tanh_scaled";
}

}  // namespace cbfpa
