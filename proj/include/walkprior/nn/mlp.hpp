#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "walkprior/common.hpp"

namespace wp::nn {

enum class Activation { Elu, Tanh, Identity };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

// A contiguous slice of parameters and its gradient accumulator.
struct ParamBlock {
  std::span<double> value;
  std::span<double> grad;
  bool is_weight = false;  // false for biases and free vectors
};

// Forward-pass record needed by backward passes. One tape per in-flight sample.
struct Tape {
  std::vector<Vec> pre;   // pre-activations z_l, l = 1..L
  std::vector<Vec> post;  // h_0 (input) .. h_L (output)
  bool valid = false;
};

// Fully connected feed-forward network. Hidden layers share one activation; the
// output layer is linear unless activate_output is set (used for shared trunks).
// Parameters live in one buffer, layer by layer: W_1 (row-major out x in), b_1, W_2, ...
class MlpNet {
 public:
  MlpNet() = default;
  explicit MlpNet(std::vector<int> layer_sizes, Activation hidden = Activation::Elu,
                  bool activate_output = false);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  Activation activation() const { return act_; }
  bool activate_output() const { return activate_output_; }
  std::size_t num_parameters() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> gradients() { return grads_; }
  std::span<const double> gradients() const { return grads_; }

  std::span<double> weights(int layer);
  std::span<const double> weights(int layer) const;
  std::span<double> biases(int layer);
  std::span<const double> biases(int layer) const;
  std::span<double> weight_grads(int layer);
  std::span<double> bias_grads(int layer);

  std::vector<ParamBlock> param_blocks();

  // Orthogonal weights scaled by `gain` (last layer by `last_gain`), zero biases.
  void init_orthogonal(Rng& rng, double gain, double last_gain);

  std::span<const double> forward(std::span<const double> input, Tape& tape) const;
  // Accumulates parameter gradients for d(out . grad_out); optionally writes the
  // input gradient into grad_input (overwritten, not accumulated).
  void backward(const Tape& tape, std::span<const double> grad_output,
                std::span<double> grad_input = {});
  // Input gradient only; parameters and accumulators untouched.
  void input_gradient(const Tape& tape, std::span<const double> grad_output,
                      std::span<double> grad_input) const;

  // Internal-tape convenience pair.
  std::span<const double> forward(std::span<const double> input);
  void backward(std::span<const double> grad_output);

  // For scalar-output nets: returns ||dD/dx||^2 at x and, when coef != 0,
  // accumulates coef * d||dD/dx||^2 / d(theta) into the gradient buffers.
  // grad_x (optional) receives dD/dx.
  double input_gradient_penalty(std::span<const double> input, double coef, Tape& tape,
                                std::span<double> grad_x = {});

  void zero_grad();
  // Sum of squared weight-matrix entries (biases exempt).
  double weight_sum_squares() const;
  // Accumulate coef * d(weight_sum_squares)/d(theta).
  void accumulate_weight_decay_grad(double coef);

 private:
  std::size_t weight_offset(int layer) const { return offsets_[2 * layer]; }
  std::size_t bias_offset(int layer) const { return offsets_[2 * layer + 1]; }
  bool activated(int layer) const { return layer + 1 < num_layers() || activate_output_; }

  std::vector<int> sizes_;
  Activation act_ = Activation::Elu;
  bool activate_output_ = false;
  std::vector<std::size_t> offsets_;
  Vec params_;
  Vec grads_;
  Tape tape_;
};

double activate(Activation a, double z);
double activate_deriv(Activation a, double z);
double activate_second_deriv(Activation a, double z);

}  // namespace wp::nn
