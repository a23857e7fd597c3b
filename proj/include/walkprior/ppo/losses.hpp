#pragma once

#include <span>

#include "walkprior/common.hpp"

namespace wp::ppo {

// Per-sample clipped surrogate term min(r A, clip(r, 1-eps, 1+eps) A).
double clipped_surrogate(double ratio, double advantage, double eps);
// d(term)/d(ratio); zero on the clipped branch.
double clipped_surrogate_grad(double ratio, double advantage, double eps);

// -mean of the clipped surrogate.
double ppo_clip_loss(std::span<const double> log_probs_new, std::span<const double> log_probs_old,
                     std::span<const double> advantages, double eps);
// mean (V - R)^2
double value_loss(std::span<const double> values, std::span<const double> returns);
// mean (log_old - log_new) + (exp(log_new - log_old) - 1)
double approx_kl(std::span<const double> log_probs_new, std::span<const double> log_probs_old);
double clip_fraction(std::span<const double> log_probs_new, std::span<const double> log_probs_old,
                     double eps);

struct LrSchedule {
  bool adaptive = true;
  double desired_kl = 0.01;
  double factor = 1.5;
  double min_lr = 1e-5;
  double max_lr = 1e-2;
};
double adapt_learning_rate(double lr, double measured_kl, const LrSchedule& s);

}  // namespace wp::ppo
