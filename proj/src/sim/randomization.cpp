#include <cmath>

#include "walkprior/sim/walker_model.hpp"

namespace wp::sim {

namespace {
double draw(Rng& rng, const Range& r) { return r.lo == r.hi ? r.lo : uniform(rng, r.lo, r.hi); }
int draw_int(Rng& rng, const Range& r) {
  return uniform_int(rng, static_cast<int>(std::lround(r.lo)), static_cast<int>(std::lround(r.hi)));
}
}  // namespace

EnvParams randomize_env(const EnvParams& base, const RandomizationConfig& cfg, Rng& rng) {
  EnvParams p = base;
  p.pushes = base.pushes && cfg.pushes;
  if (!cfg.enabled) return p;

  const double friction_scale = draw(rng, cfg.friction);
  p.friction = base.friction * friction_scale;
  p.dynamic_friction = base.dynamic_friction * friction_scale;
  p.restitution = base.restitution + draw(rng, cfg.restitution);
  p.push_interval = cfg.push_interval;
  p.push_velocity = cfg.push_velocity;
  p.push_angular = cfg.push_angular;
  p.base_mass_offset = base.base_mass_offset + draw(rng, cfg.base_mass);
  p.com_displacement = base.com_displacement + draw(rng, cfg.com_displacement);
  for (int j = 0; j < kJoints; ++j) p.kp[j] = base.kp[j] * draw(rng, cfg.stiffness);
  for (int j = 0; j < kJoints; ++j) p.kd[j] = base.kd[j] * draw(rng, cfg.damping);
  for (int j = 0; j < kJoints; ++j) {
    p.torque_multiplier[j] = base.torque_multiplier[j] * draw(rng, cfg.torque);
  }
  for (std::size_t i = 0; i < p.link_mass_multiplier.size(); ++i) {
    p.link_mass_multiplier[i] = base.link_mass_multiplier[i] * draw(rng, cfg.link_mass);
  }
  for (int j = 0; j < kJoints; ++j) {
    p.motor_offset[j] = base.motor_offset[j] + draw(rng, cfg.motor_offset);
  }
  for (int j = 0; j < kJoints; ++j) {
    p.joint_friction[j] = base.joint_friction[j] * draw(rng, cfg.joint_friction);
  }
  for (int j = 0; j < kJoints; ++j) {
    p.joint_damping[j] = base.joint_damping[j] * draw(rng, cfg.joint_damping);
  }
  for (int j = 0; j < kJoints; ++j) p.armature[j] = base.armature[j] * draw(rng, cfg.armature);
  p.action_lag = base.action_lag + draw_int(rng, cfg.action_lag);
  p.obs_motor_lag = base.obs_motor_lag + draw_int(rng, cfg.obs_motor_lag);
  p.obs_action_lag = base.obs_action_lag + draw_int(rng, cfg.obs_action_lag);
  p.obs_imu_lag = base.obs_imu_lag + draw_int(rng, cfg.obs_imu_lag);
  for (int j = 0; j < kJoints; ++j) p.coulomb[j] = base.coulomb[j] * draw(rng, cfg.coulomb);
  for (int j = 0; j < kJoints; ++j) p.viscous[j] = base.viscous[j] * draw(rng, cfg.viscous);
  return p;
}

}  // namespace wp::sim
