#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "walkprior/nn/mlp.hpp"

namespace wp::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer. Moments are bound to the block layout seen on the
// first step; later steps must pass blocks of the same shapes in the same order.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  void step(std::span<const ParamBlock> blocks);

  double learning_rate() const { return cfg_.learning_rate; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
  const AdamConfig& config() const { return cfg_; }
  std::uint64_t step_count() const { return steps_; }

  // Serialization access.
  const std::vector<Vec>& first_moments() const { return m_; }
  const std::vector<Vec>& second_moments() const { return v_; }
  void restore(std::uint64_t steps, double lr, std::vector<Vec> m, std::vector<Vec> v);

 private:
  AdamConfig cfg_;
  std::uint64_t steps_ = 0;
  std::vector<Vec> m_;
  std::vector<Vec> v_;
};

enum class ClipMode { GlobalNorm, Elementwise };

// Returns the global gradient 2-norm measured before clipping.
double clip_gradients(std::span<const ParamBlock> blocks, double max_grad,
                      ClipMode mode = ClipMode::GlobalNorm);
double global_grad_norm(std::span<const ParamBlock> blocks);

}  // namespace wp::nn
