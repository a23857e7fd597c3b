#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "walkprior/sim/walker_model.hpp"
#include "walkprior/terrain/heightfield.hpp"

namespace wp::sim {

struct SimConfig {
  double dt = 0.01;  // control period, s
  int substeps = 4;
  double gravity = 9.81;
  double contact_stiffness = 1e4;  // N/m
  double contact_damping = 1e2;    // N s/m
  double tangential_stiffness = 1e4;
  double tangential_damping = 1e2;
  double limit_stiffness = 500.0;  // N m/rad past a joint limit
  double limit_damping = 5.0;
  double episode_length = 20.0;  // s
  double fall_height = 0.4;      // m above terrain
  double fall_pitch = 1.0;       // rad
  double lane_y = 4.0;           // m, the walker plane inside the terrain block
  double collision_threshold = 0.1;  // N
  double reset_joint_noise = 0.0;  // rad, uniform around the nominal pose
  double physics_dt() const { return dt / substeps; }
};

enum class Termination { Running, Fallen, Timeout };
const char* to_string(Termination t);

struct ContactPoint {
  double normal_force = 0.0;   // N, >= 0
  double tangent_force = 0.0;  // N
  double penetration = 0.0;    // m, along the terrain normal, 0 when clear
  bool anchored = false;
  Vec2 anchor;
};

struct FootState {
  std::array<ContactPoint, 2> points;  // heel, toe
  bool contact = false;
  double normal_force = 0.0;
};

// Delayed sensor readings, recorded once per physics substep.
struct SensorSample {
  JointVec q{};
  JointVec qd{};
  double pitch = 0.0;
  double pitch_rate = 0.0;
  JointVec action{};
};

struct WalkerState {
  std::array<double, kDof> q{};
  std::array<double, kDof> qd{};
  std::array<double, kDof> qdd{};
  double time = 0.0;
  std::array<FootState, kLegs> feet;
  std::array<double, 4> body_forces{};  // N, hip, torso top, knees
  int collisions = 0;  // body forces above the collision threshold
  bool fault = false;
  JointVec torque{};          // last applied
  JointVec applied_target{};  // after the actuation delay
  double positive_work = 0.0;  // J over the last control step
  double next_push = 0.0;      // s
  std::array<double, 3> push{};  // last push: dvx, dvz, dpitch rate
};

class WalkerSim {
 public:
  WalkerSim(WalkerModel model, EnvParams params, std::shared_ptr<const terrain::Heightfield> field,
            SimConfig cfg = {});

  // Nominal pose at horizontal position x with the lowest foot point on the
  // terrain; clears timers and delay lines.
  void reset(double x, Rng& rng);
  // One control step: the joint target is queued through the actuation delay,
  // integrated over the substeps, then a push is applied if due.
  void step(const JointVec& target, Rng& rng);
  Termination check_termination() const;

  const WalkerState& state() const { return state_; }
  WalkerState& mutable_state() { return state_; }
  const EnvParams& params() const { return params_; }
  const WalkerModel& model() const { return model_; }
  const SimConfig& config() const { return cfg_; }
  const terrain::Heightfield& field() const { return *field_; }
  void set_field(std::shared_ptr<const terrain::Heightfield> field) { field_ = std::move(field); }
  void set_params(const EnvParams& params);

  JointVec joint_q() const;
  JointVec joint_qd() const;
  double base_height() const;  // above the terrain under the hip
  double terrain_height(double x) const;
  double total_mass() const;
  // Foot point positions (heel, toe) and the knee, hip and torso-top points.
  std::array<Vec2, 2> foot_points(int leg) const;
  Vec2 foot_velocity(int leg) const;  // toe-heel midpoint
  double foot_clearance(int leg) const;  // lowest foot point above terrain
  double kinetic_energy() const;
  double potential_energy() const;
  // Delayed readings; lag in substeps, clamped to the recorded history.
  const SensorSample& sensor(int lag) const;

 private:
  struct Body {
    double mass;
    double inertia;
  };
  void substep(const JointVec& target);
  void record_sensor(const JointVec& action);
  void rebuild_masses();

  WalkerModel model_;
  EnvParams params_;
  std::shared_ptr<const terrain::Heightfield> field_;
  SimConfig cfg_;
  WalkerState state_;
  // torso, then thigh/shin/foot per leg
  std::array<Body, 7> bodies_{};
  std::vector<JointVec> target_queue_;
  std::size_t target_head_ = 0;
  std::vector<SensorSample> sensors_;
  std::size_t sensor_head_ = 0;
  std::size_t sensor_count_ = 0;
  JointVec last_action_{};
};

// Applies a velocity kick drawn from the push ranges and schedules the next
// push at least push_interval.lo seconds later.
void apply_push(WalkerState& state, const EnvParams& params, Rng& rng);

std::string trace_csv_header();
std::string trace_csv_row(const WalkerState& state);

}  // namespace wp::sim
