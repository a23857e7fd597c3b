#include "walkprior/obs/gait.hpp"

#include <cmath>
#include <numbers>

#include "walkprior/common.hpp"

namespace wp::obs {

GaitClock gait_clock(double t, const GaitSchedule& sched) {
  if (!(t >= 0.0)) throw Error("gait_clock: negative time");
  if (!(sched.cycle > 0.0) || sched.ds_fraction < 0.0 || sched.ds_fraction >= 1.0) {
    throw Error("gait_clock: invalid schedule");
  }
  GaitClock g;
  const double cycles = t / sched.cycle;
  const double angle = 2.0 * std::numbers::pi * (cycles - std::floor(cycles));
  g.sin = std::sin(angle);
  g.cos = std::cos(angle);
  const double stance_end = 0.5 + 0.5 * sched.ds_fraction;
  for (int leg = 0; leg < 2; ++leg) {
    double p = cycles + sched.phase_offset[leg];
    p -= std::floor(p);
    if (p < stance_end) {
      g.mask[leg] = 1;
      g.swing_phase[leg] = -1.0;
    } else {
      g.mask[leg] = 0;
      g.swing_phase[leg] = (p - stance_end) / (1.0 - stance_end);
    }
  }
  return g;
}

}  // namespace wp::obs
