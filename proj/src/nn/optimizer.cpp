#include "walkprior/nn/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "walkprior/kernels.hpp"

namespace wp::nn {

void Adam::step(std::span<const ParamBlock> blocks) {
  if (m_.empty()) {
    for (const auto& b : blocks) {
      m_.emplace_back(b.value.size(), 0.0);
      v_.emplace_back(b.value.size(), 0.0);
    }
  }
  if (m_.size() != blocks.size()) throw Error("Adam::step: parameter block count changed");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double lr_t = cfg_.learning_rate / (1.0 - std::pow(cfg_.beta1, t));
  const double v_corr = 1.0 / (1.0 - std::pow(cfg_.beta2, t));
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.value.size() != m_[i].size()) throw Error("Adam::step: parameter block shape changed");
    k.adam(b.value.data(), b.grad.data(), m_[i].data(), v_[i].data(), b.value.size(), lr_t,
           cfg_.beta1, cfg_.beta2, v_corr, cfg_.eps);
  }
}

void Adam::restore(std::uint64_t steps, double lr, std::vector<Vec> m, std::vector<Vec> v) {
  if (m.size() != v.size()) throw Error("Adam::restore: moment lists differ in length");
  steps_ = steps;
  cfg_.learning_rate = lr;
  m_ = std::move(m);
  v_ = std::move(v);
}

double global_grad_norm(std::span<const ParamBlock> blocks) {
  double sq = 0.0;
  for (const auto& b : blocks) sq += kernels::sum_squares(b.grad);
  return std::sqrt(sq);
}

double clip_gradients(std::span<const ParamBlock> blocks, double max_grad, ClipMode mode) {
  if (!(max_grad > 0.0)) throw Error("clip_gradients: max_grad must be positive");
  const double norm = global_grad_norm(blocks);
  if (mode == ClipMode::Elementwise) {
    for (const auto& b : blocks) {
      for (double& g : b.grad) g = std::clamp(g, -max_grad, max_grad);
    }
    return norm;
  }
  // The slack keeps a second call from rescaling by a rounding-level factor.
  if (norm > max_grad * (1.0 + 1e-12)) {
    const double s = max_grad / norm;
    for (const auto& b : blocks) kernels::scale(b.grad, s);
  }
  return norm;
}

}  // namespace wp::nn
