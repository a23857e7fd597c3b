#include "walkprior/ppo/losses.hpp"

#include <algorithm>
#include <cmath>

namespace wp::ppo {

namespace {
void check(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(std::string(what) + ": length mismatch");
}
}  // namespace

double clipped_surrogate(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage);
}

double clipped_surrogate_grad(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  // The unclipped branch is active when it is the minimum.
  return ratio * advantage <= clipped * advantage ? advantage : 0.0;
}

double ppo_clip_loss(std::span<const double> log_probs_new, std::span<const double> log_probs_old,
                     std::span<const double> advantages, double eps) {
  check(log_probs_new.size(), log_probs_old.size(), "ppo_clip_loss");
  check(log_probs_new.size(), advantages.size(), "ppo_clip_loss");
  if (advantages.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < advantages.size(); ++i) {
    sum += clipped_surrogate(std::exp(log_probs_new[i] - log_probs_old[i]), advantages[i], eps);
  }
  return -sum / static_cast<double>(advantages.size());
}

double value_loss(std::span<const double> values, std::span<const double> returns) {
  check(values.size(), returns.size(), "value_loss");
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += (values[i] - returns[i]) * (values[i] - returns[i]);
  }
  return sum / static_cast<double>(values.size());
}

double approx_kl(std::span<const double> log_probs_new, std::span<const double> log_probs_old) {
  check(log_probs_new.size(), log_probs_old.size(), "approx_kl");
  if (log_probs_new.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < log_probs_new.size(); ++i) {
    const double d = log_probs_new[i] - log_probs_old[i];
    sum += -d + std::expm1(d);
  }
  return sum / static_cast<double>(log_probs_new.size());
}

double clip_fraction(std::span<const double> log_probs_new, std::span<const double> log_probs_old,
                     double eps) {
  check(log_probs_new.size(), log_probs_old.size(), "clip_fraction");
  if (log_probs_new.empty()) return 0.0;
  int n = 0;
  for (std::size_t i = 0; i < log_probs_new.size(); ++i) {
    n += std::abs(std::exp(log_probs_new[i] - log_probs_old[i]) - 1.0) > eps;
  }
  return static_cast<double>(n) / static_cast<double>(log_probs_new.size());
}

double adapt_learning_rate(double lr, double measured_kl, const LrSchedule& s) {
  if (!s.adaptive) return lr;
  if (measured_kl > 2.0 * s.desired_kl) lr /= s.factor;
  else if (measured_kl < 0.5 * s.desired_kl) lr *= s.factor;
  return std::clamp(lr, s.min_lr, s.max_lr);
}

}  // namespace wp::ppo
