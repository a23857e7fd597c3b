#pragma once

#include <string>
#include <vector>

#include "walkprior/common.hpp"
#include "walkprior/obs/gait.hpp"
#include "walkprior/sim/walker_sim.hpp"
#include "walkprior/terrain/heightfield.hpp"

namespace wp::obs {

struct ObsDims {
  int joints = 6;
  int height_points = 55;
  int disturbance_force = 2;
  int disturbance_torque = 1;
};
ObsDims desk_dims();
ObsDims full_dims();  // 12 joints, 187 scan points, 2 + 3 disturbance dims

struct NoiseScales {
  double joint_pos = 0.01;
  double joint_vel = 0.1;
  double ang_vel = 0.05;
  double euler = 0.02;
  double last_action = 0.0;
};

struct Block {
  std::string name;
  int offset = 0;
  int width = 0;
  double noise = 0.0;
};

struct ObsLayout {
  ObsDims dims;
  std::vector<Block> proprio;
  std::vector<Block> privileged;
  std::vector<Block> aux;
  int proprio_dim = 0;
  int privileged_dim = 0;
  int aux_dim = 0;
  int state_dim() const { return proprio_dim + privileged_dim; }
  // Throws if the group ("proprio", "privileged", "aux") or block is unknown.
  const Block& find(const std::string& group, const std::string& name) const;
};

ObsLayout make_layout(const ObsDims& dims, const NoiseScales& noise = {});
// JSON table of every block: group, name, offset, width, noise.
std::string layout_manifest_json(const ObsLayout& layout);

struct Command {
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
};

struct ObservationFrame {
  Vec proprio;
  Vec privileged;
  Vec aux;
  Vec state() const;  // proprio then privileged, noise-free
};

struct FrameInputs {
  sim::JointVec last_action{};  // as seen through the action-observation delay
  sim::JointVec action{};       // a_t
  sim::JointVec prev_action{};  // a_{t-1}
  Command command;
  double phase_time = 0.0;  // s since episode start
};

// Proprio reads the delayed sensors of the sim; privileged and aux read the
// true state. Requires dims.joints == 6 and a scan grid of dims.height_points.
ObservationFrame assemble_frame(const sim::WalkerSim& sim, const ObsLayout& layout,
                                const FrameInputs& in, const GaitSchedule& sched,
                                const terrain::ScanGrid& grid);

// Gaussian noise per proprio block; clock and command are never perturbed.
Vec add_proprio_noise(const Vec& proprio, const ObsLayout& layout, Rng& rng);

}  // namespace wp::obs
