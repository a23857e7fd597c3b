#pragma once

#include <span>

#include "walkprior/common.hpp"

namespace wp::ppo {

struct GaeResult {
  Vec advantages;
  Vec returns;
};

// One trajectory segment in time order. dones[t] cuts the recursion after
// step t; bootstrap_value is V of the state after the last step.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const double> dones, double bootstrap_value, double gamma,
                      double lambda);

// Zero mean, unit standard deviation (population), eps added to the std.
void normalize_advantages(std::span<double> adv, double eps = 1e-8);

}  // namespace wp::ppo
