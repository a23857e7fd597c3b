#include "walkprior/sim/walker_model.hpp"

#include <algorithm>
#include <cmath>

namespace wp::sim {

void WalkerModel::validate() const {
  for (double m : {base_mass, thigh_mass, shin_mass, foot_mass}) {
    if (!(m > 0.0)) throw Error("WalkerModel: masses must be positive");
  }
  for (double l : {base_length, thigh_length, shin_length}) {
    if (!(l > 0.0)) throw Error("WalkerModel: link lengths must be positive");
  }
  for (int j = 0; j < kJoints; ++j) {
    if (!(joint_lower[j] < joint_upper[j])) throw Error("WalkerModel: joint limits out of order");
    if (!(torque_limit[j] > 0.0)) throw Error("WalkerModel: torque limits must be positive");
  }
}

JointVec pd_torque(const WalkerModel& model, const EnvParams& params, const JointVec& target,
                   const JointVec& q, const JointVec& qdot) {
  constexpr double kStiction = 0.05;  // rad/s, width of the smoothed Coulomb step
  JointVec tau{};
  for (int j = 0; j < kJoints; ++j) {
    double t = params.kp[j] * (target[j] + params.motor_offset[j] - q[j]) - params.kd[j] * qdot[j];
    t *= params.torque_multiplier[j];
    t -= (params.coulomb[j] + params.joint_friction[j]) * std::tanh(qdot[j] / kStiction);
    t -= (params.viscous[j] + params.joint_damping[j]) * qdot[j];
    tau[j] = std::clamp(t, -model.torque_limit[j], model.torque_limit[j]);
  }
  return tau;
}

}  // namespace wp::sim
