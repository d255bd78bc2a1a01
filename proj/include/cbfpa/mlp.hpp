#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbfpa/cbf_core.hpp"  // Vector

namespace cbfpa {

enum class Activation { Tanh, Relu };
enum class OutputActivation { Identity, TanhScaled };

// Small feedforward network with reverse-mode gradients with respect to a
// flattened parameter vector. Flattening order is layer-major: for each
// layer, the weight matrix row-major, then the bias vector. Networks are
// value types; concurrent reads are safe, parameter updates need exclusive
// access.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, Activation hidden, OutputActivation output,
      double output_bound = 1.0);

  // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], deterministic per seed.
  static Mlp random(std::vector<int> layer_sizes, Activation hidden,
                    OutputActivation output, double output_bound, std::uint64_t seed);

  int input_size() const { return layer_sizes_.front(); }
  int output_size() const { return layer_sizes_.back(); }
  int param_count() const;
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  Activation hidden_activation() const { return hidden_; }
  OutputActivation output_activation() const { return output_; }
  double output_bound() const { return output_bound_; }
  bool same_architecture(const Mlp& other) const;

  Vector flatten() const;
  void unflatten(const Vector& params);

  Vector forward(const Vector& input) const;

  // Activations recorded during a forward pass; acts[0] is the input and
  // acts[L] the output. Post-activations are enough to recover every
  // activation derivative used here.
  struct Tape {
    std::vector<Vector> acts;
  };
  struct BatchTape {
    std::vector<Eigen::MatrixXd> acts;  // acts[l]: layer width x batch
  };

  Vector forward(const Vector& input, Tape& tape) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs, BatchTape* tape = nullptr) const;

  // Reverse pass from output cotangent dy. Any output pointer may be null.
  void backprop(const Tape& tape, const Vector& dy, Vector* param_grad,
                Vector* input_cotangent) const;

  // Batched reverse pass; param_grad_sum accumulates the SUM over the batch.
  // `deltas`, when requested, receives the per-layer pre-activation
  // cotangents (deltas[l]: layer output width x batch), which is what
  // per-sample gradient inner products are assembled from.
  void backward_batch(const BatchTape& tape, const Eigen::MatrixXd& dY,
                      Vector* param_grad_sum, Eigen::MatrixXd* input_cotangent,
                      std::vector<Eigen::MatrixXd>* deltas = nullptr) const;

  // Checkpoint format: a short text header (layer sizes, activations)
  // followed by one hex-float parameter per line; round-trips exactly.
  void save(const std::string& path) const;
  static Mlp load(const std::string& path);

  Eigen::MatrixXd& weight(int layer) { return weights_[layer]; }
  const Eigen::MatrixXd& weight(int layer) const { return weights_[layer]; }
  Vector& bias(int layer) { return biases_[layer]; }
  const Vector& bias(int layer) const { return biases_[layer]; }
  int layer_count() const { return static_cast<int>(weights_.size()); }

 private:
  std::vector<int> layer_sizes_;
  std::vector<Eigen::MatrixXd> weights_;  // weights_[l]: sizes[l+1] x sizes[l]
  std::vector<Vector> biases_;
  Activation hidden_ = Activation::Tanh;
  OutputActivation output_ = OutputActivation::Identity;
  double output_bound_ = 1.0;
};

struct GradReport {
  double value = 0.0;
  Vector grad;
  std::optional<double> relative_fd_error;
};

// Gradient of a scalar-output network with respect to its flattened
// parameters.
GradReport grad_scalar_output(const Mlp& net, const Vector& input);

// Chain-rule gradient of critic(state, actor(state)) with respect to the
// actor's parameters, with the critic's parameters held fixed. The critic
// consumes the concatenation [state; action].
GradReport compose_grad(const Mlp& critic, const Mlp& actor, const Vector& state);

const char* activation_name(Activation a);
const char* output_activation_name(OutputActivation a);

}  // namespace cbfpa
