#pragma once

#include <array>

#include "walkprior/common.hpp"

namespace wp::sim {

inline constexpr int kJoints = 6;  // per leg: hip, knee, ankle; left leg first
inline constexpr int kDof = 9;     // x, z, pitch, then joints
inline constexpr int kLegs = 2;

using JointVec = std::array<double, kJoints>;

struct Vec2 {
  double x = 0.0;
  double z = 0.0;
};

// Planar biped. Angles are counter-clockwise positive; a segment at absolute
// angle a points along (sin a, -cos a).
struct WalkerModel {
  double base_mass = 20.0;
  double base_length = 0.6;  // hip to torso top
  double base_inertia = 0.6;
  double thigh_mass = 2.5;
  double shin_mass = 1.5;
  double foot_mass = 1.0;
  double thigh_length = 0.435;
  double shin_length = 0.435;
  double thigh_inertia = 0.04;
  double shin_inertia = 0.025;
  double foot_inertia = 0.004;
  Vec2 heel{-0.12, -0.06};  // relative to the ankle, foot frame
  Vec2 toe{0.16, -0.06};
  Vec2 foot_com{0.02, -0.03};
  JointVec joint_lower{-0.8, -2.2, -0.8, -0.8, -2.2, -0.8};
  JointVec joint_upper{1.6, 0.05, 0.8, 1.6, 0.05, 0.8};
  JointVec torque_limit{120.0, 120.0, 60.0, 120.0, 120.0, 60.0};
  JointVec nominal{0.25, -0.5, 0.25, 0.25, -0.5, 0.25};

  double total_mass() const { return base_mass + kLegs * (thigh_mass + shin_mass + foot_mass); }
  // Throws on non-positive masses/lengths or inverted joint limits.
  void validate() const;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Physical parameters of one environment instance.
struct EnvParams {
  double friction = 0.6;          // static, bounds sticking contacts
  double dynamic_friction = 0.6;  // sliding contacts
  double restitution = 0.0;
  JointVec kp{500.0, 500.0, 500.0, 500.0, 500.0, 500.0};
  JointVec kd{10.0, 10.0, 10.0, 10.0, 10.0, 10.0};
  JointVec torque_multiplier{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  JointVec motor_offset{};
  JointVec joint_friction{0.2, 0.2, 0.2, 0.2, 0.2, 0.2};  // N m, smooth Coulomb
  JointVec joint_damping{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};   // N m s/rad
  JointVec armature{0.05, 0.05, 0.05, 0.05, 0.05, 0.05};  // kg m^2
  JointVec coulomb{0.2, 0.2, 0.2, 0.2, 0.2, 0.2};         // N m
  JointVec viscous{0.2, 0.2, 0.2, 0.2, 0.2, 0.2};         // N m s/rad
  // thigh, shin, foot of the left leg, then the right leg
  std::array<double, 6> link_mass_multiplier{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  double base_mass_offset = 0.0;  // kg
  double com_displacement = 0.0;  // m, forward along the torso frame
  // Delays in physics substeps.
  int action_lag = 0;
  int obs_motor_lag = 0;
  int obs_action_lag = 0;
  int obs_imu_lag = 0;
  // Push schedule: interval (s), velocity kicks sampled per push.
  bool pushes = false;
  Range push_interval{8.0, 15.0};
  Range push_velocity{0.0, 0.4};
  Range push_angular{0.0, 0.6};
};

// Table of randomized variables with their ranges; scaling rows multiply the
// base value, additive rows add to it.
struct RandomizationConfig {
  bool enabled = true;
  Range friction{0.2, 1.3};
  Range restitution{0.0, 0.4};
  Range push_interval{8.0, 15.0};  // open upper end replaced by a finite cap
  Range push_velocity{0.0, 0.4};
  Range push_angular{0.0, 0.6};
  Range base_mass{-4.0, 4.0};
  Range com_displacement{-0.06, 0.06};
  Range stiffness{0.8, 1.2};
  Range damping{0.8, 1.2};
  Range torque{0.8, 1.2};
  Range link_mass{0.8, 1.2};
  Range motor_offset{-0.035, 0.035};
  Range joint_friction{0.01, 1.15};
  Range joint_damping{0.3, 1.5};
  Range armature{0.008, 0.06};
  Range action_lag{5, 20};
  Range obs_motor_lag{5, 20};
  Range obs_action_lag{2, 5};
  Range obs_imu_lag{1, 10};
  Range coulomb{0.1, 0.9};
  Range viscous{0.05, 0.1};
  bool pushes = true;
};

// Draws every listed variable in a fixed order. Disabled config returns base
// with only the push switch applied.
EnvParams randomize_env(const EnvParams& base, const RandomizationConfig& cfg, Rng& rng);

// PD law with motor offset, torque multiplier, joint friction terms and
// torque limits, in that order.
JointVec pd_torque(const WalkerModel& model, const EnvParams& params, const JointVec& target,
                   const JointVec& q, const JointVec& qdot);

}  // namespace wp::sim
