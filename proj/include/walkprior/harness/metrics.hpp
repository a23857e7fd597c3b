#pragma once

#include <optional>
#include <span>

#include "walkprior/env/env.hpp"

namespace wp::harness {

// Mean over steps of |command - measured| (planar velocity, x only here).
double tracking_error(std::span<const double> commanded, std::span<const double> measured);

// Per-step joint torques and velocities, row-major steps x joints.
struct PowerTrace {
  int joints = 0;
  double dt = 0.0;
  std::vector<double> torque;
  std::vector<double> joint_vel;
};

// Positive mechanical work over m g d. Absent when d is below the floor.
inline constexpr double kMinCotDistance = 0.05;  // m
std::optional<double> cost_of_transport(const PowerTrace& trace, double mass, double gravity,
                                        double distance);
double positive_work(const PowerTrace& trace);
// From an episode summary that already accumulated positive work and weight.
std::optional<double> cost_of_transport(const env::EpisodeSummary& ep);

}  // namespace wp::harness
