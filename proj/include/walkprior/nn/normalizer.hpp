#pragma once

#include <cstdint>
#include <span>

#include "walkprior/common.hpp"

namespace wp::nn {

// Running mean/variance over observation frames (parallel-merge form), used to
// whiten network inputs. Frozen normalizers are plain affine maps.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim, double clip = 10.0);

  int dim() const { return static_cast<int>(mean_.size()); }
  void update(std::span<const double> batch, int rows);
  // Normalizes every dim()-sized slice of x in place.
  void apply(std::span<double> x) const;

  const Vec& mean() const { return mean_; }
  const Vec& var() const { return var_; }
  double count() const { return count_; }
  double clip() const { return clip_; }
  void restore(Vec mean, Vec var, double count, double clip);

 private:
  Vec mean_;
  Vec var_;
  double count_ = 1e-4;
  double clip_ = 10.0;
};

}  // namespace wp::nn
