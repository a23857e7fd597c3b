#pragma once

#include <array>

namespace wp::obs {

// Two double-support and two single-support windows per cycle. Leg phase
// p = frac(t / cycle + offset); the leg is in stance while p < 1/2 + ds/2.
struct GaitSchedule {
  double cycle = 0.7;          // s
  double ds_fraction = 0.1;    // of each half cycle
  std::array<double, 2> phase_offset{0.0, 0.5};  // left, right
};

struct GaitClock {
  double sin = 0.0;
  double cos = 1.0;
  std::array<int, 2> mask{1, 1};  // commanded contact, left, right
  // Progress through the current swing in [0, 1); -1 while in stance.
  std::array<double, 2> swing_phase{-1.0, -1.0};
};

GaitClock gait_clock(double t, const GaitSchedule& sched);

}  // namespace wp::obs
