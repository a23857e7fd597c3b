#include "walkprior/nn/gaussian.hpp"

#include <cmath>
#include <numbers>

namespace wp::nn {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

void check_dims(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(std::string("gaussian: dimension mismatch in ") + what);
}
}  // namespace

GaussianHead::GaussianHead(int dim, double init_std)
    : log_std(dim, std::log(init_std)), log_std_grad(dim, 0.0) {}

void GaussianHead::zero_grad() { std::fill(log_std_grad.begin(), log_std_grad.end(), 0.0); }

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std,
                         std::span<const double> action) {
  check_dims(mean.size(), action.size(), "log_prob");
  check_dims(mean.size(), log_std.size(), "log_prob");
  double lp = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  // 0.5 * log(2 pi e) = 0.5 * log(2 pi) + 0.5
  double h = 0.0;
  for (double ls : log_std) h += ls + kHalfLog2Pi + 0.5;
  return h;
}

void gaussian_sample(std::span<const double> mean, std::span<const double> log_std, Rng& rng,
                     std::span<double> action) {
  check_dims(mean.size(), action.size(), "sample");
  for (std::size_t i = 0; i < mean.size(); ++i) {
    action[i] = mean[i] + std::exp(log_std[i]) * standard_normal(rng);
  }
}

void gaussian_log_prob_grad(std::span<const double> mean, std::span<const double> log_std,
                            std::span<const double> action, double coef,
                            std::span<double> grad_mean, std::span<double> grad_log_std) {
  check_dims(mean.size(), action.size(), "log_prob_grad");
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double inv_var = std::exp(-2.0 * log_std[i]);
    const double diff = action[i] - mean[i];
    if (!grad_mean.empty()) grad_mean[i] += coef * diff * inv_var;
    if (!grad_log_std.empty()) grad_log_std[i] += coef * (diff * diff * inv_var - 1.0);
  }
}

}  // namespace wp::nn
