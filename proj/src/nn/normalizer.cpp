#include "walkprior/nn/normalizer.hpp"

#include <algorithm>
#include <cmath>

namespace wp::nn {

RunningNormalizer::RunningNormalizer(int dim, double clip)
    : mean_(dim, 0.0), var_(dim, 1.0), clip_(clip) {}

void RunningNormalizer::update(std::span<const double> batch, int rows) {
  const std::size_t d = mean_.size();
  if (rows <= 0 || d == 0) return;
  if (batch.size() != d * static_cast<std::size_t>(rows)) {
    throw Error("RunningNormalizer::update: batch size mismatch");
  }
  Vec bmean(d, 0.0), bvar(d, 0.0);
  for (int r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < d; ++i) bmean[i] += batch[r * d + i];
  for (auto& m : bmean) m /= rows;
  for (int r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < d; ++i) {
      const double e = batch[r * d + i] - bmean[i];
      bvar[i] += e * e;
    }
  for (auto& v : bvar) v /= rows;
  const double n = rows;
  const double total = count_ + n;
  for (std::size_t i = 0; i < d; ++i) {
    const double delta = bmean[i] - mean_[i];
    mean_[i] += delta * n / total;
    const double m2 = var_[i] * count_ + bvar[i] * n + delta * delta * count_ * n / total;
    var_[i] = m2 / total;
  }
  count_ = total;
}

void RunningNormalizer::apply(std::span<double> x) const {
  const std::size_t d = mean_.size();
  if (d == 0) return;
  if (x.size() % d != 0) throw Error("RunningNormalizer::apply: length is not a multiple of dim");
  for (std::size_t off = 0; off < x.size(); off += d) {
    for (std::size_t i = 0; i < d; ++i) {
      const double z = (x[off + i] - mean_[i]) / std::sqrt(var_[i] + 1e-8);
      x[off + i] = std::clamp(z, -clip_, clip_);
    }
  }
}

void RunningNormalizer::restore(Vec mean, Vec var, double count, double clip) {
  if (mean.size() != var.size()) throw Error("RunningNormalizer::restore: size mismatch");
  mean_ = std::move(mean);
  var_ = std::move(var);
  count_ = count;
  clip_ = clip;
}

}  // namespace wp::nn
