#pragma once

#include <span>

#include "walkprior/common.hpp"
#include "walkprior/nn/mlp.hpp"

namespace wp::nn {

// Diagonal Gaussian with a state-independent, learnable log standard deviation.
struct GaussianHead {
  Vec log_std;
  Vec log_std_grad;

  GaussianHead() = default;
  GaussianHead(int dim, double init_std);

  int dim() const { return static_cast<int>(log_std.size()); }
  ParamBlock param_block() { return {log_std, log_std_grad, false}; }
  void zero_grad();
};

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action);
double gaussian_entropy(std::span<const double> log_std);
void gaussian_sample(std::span<const double> mean, std::span<const double> log_std, Rng& rng,
                     std::span<double> action);

// Accumulates coef * d(log_prob)/d(mean) and coef * d(log_prob)/d(log_std).
void gaussian_log_prob_grad(std::span<const double> mean, std::span<const double> log_std,
                            std::span<const double> action, double coef,
                            std::span<double> grad_mean, std::span<double> grad_log_std);

}  // namespace wp::nn
