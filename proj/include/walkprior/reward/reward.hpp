#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "walkprior/obs/gait.hpp"
#include "walkprior/obs/observation.hpp"
#include "walkprior/sim/walker_sim.hpp"

namespace wp::reward {

// phi(e, w) = exp(-w |e|^2)
double kernel(const double* e, int n, double w);
double kernel(std::initializer_list<double> e, double w);

// Mean per-foot agreement between commanded and measured contact.
double contact_pattern(const std::array<int, 2>& commanded, const std::array<int, 2>& measured);

// Swing apex profile over swing progress p in [0, 1]: zero height and slope
// at both ends, apex with zero slope at p = 1/2.
double swing_height_target(double p, double apex);

// Sum over feet in swing (swing_phase >= 0) of |height - target|.
double foot_clearance_term(const std::array<double, 2>& heights,
                           const std::array<double, 2>& swing_phase, double apex);

int collision_count(const double* forces, int n, double threshold);

// Sum over feet of clip(F - threshold, 0, cap).
double contact_force_penalty(double left, double right, double threshold = 400.0,
                             double cap = 100.0);

// softplus(-logit); logit is the discriminator's score for "student-generated",
// so teacher-like samples earn more.
double disc_reward(double logit);

enum class Phase { Teacher, Student };

struct RewardConfig {
  double w_orientation = 0.5;
  double w_default_joint = 0.8;
  double w_base_height = 0.2;
  double w_velocity_mismatch = 0.5;
  double w_lin_tracking = 1.4;
  double w_ang_tracking = 1.1;
  double w_contact_forces = -0.05;
  double w_contact_pattern = 1.4;
  double w_feet_clearance = -1.6;
  double w_collision = -0.5;
  double w_smoothness = -0.003;
  double w_joint_acc = -1e-9;
  double w_torque = -1e-9;
  double w_power = -2e-5;
  double w_disc = 2e-4;

  double width_orientation = 5.0;
  double width_default_joint = 2.0;
  double width_base_height = 100.0;
  double width_velocity = 5.0;
  double base_height_target = 0.85;  // m
  double force_threshold = 400.0;    // N
  double force_cap = 100.0;          // N
  double collision_threshold = 0.1;  // N
  double swing_apex = 0.08;          // m
};

// Everything the reward reads, in plain numbers.
struct RewardState {
  double roll = 0.0, pitch = 0.0;
  double base_height = 0.0;  // above local terrain
  std::array<double, 3> lin_vel{};  // x, y, z
  std::array<double, 3> ang_vel{};  // roll, pitch, yaw rates
  std::vector<double> joint_pos, nominal, joint_vel, joint_acc, torque;
  std::array<double, 2> foot_force{};
  std::array<int, 2> contact{};
  std::array<double, 2> foot_height{};
  std::vector<double> body_forces;
};

RewardState reward_state(const sim::WalkerSim& sim);

struct RewardInputs {
  RewardState state;
  std::vector<double> action, prev_action, prev_prev_action;
  obs::Command command;
  double phase_time = 0.0;
  std::optional<double> disc_logit;
};

struct RewardTerm {
  std::string name;
  double raw = 0.0;
  double weight = 0.0;
  double value = 0.0;  // raw * weight
};

struct RewardBreakdown {
  std::vector<RewardTerm> terms;
  double total = 0.0;
  const RewardTerm* find(const std::string& name) const;
};

// Every reward row in a fixed order; the disc term only in the student phase,
// where a missing logit throws.
RewardBreakdown total_reward(const RewardInputs& in, const obs::GaitSchedule& sched,
                             const RewardConfig& cfg, Phase phase);

const std::vector<std::string>& reward_term_names();  // including "disc"
// "iteration,<terms...>,total"
std::string reward_csv_header();
// Mean weighted value per term over a logging interval; absent terms print 0.
class RewardLog {
 public:
  void add(const RewardBreakdown& b);
  std::string csv_row(long iteration) const;
  void clear();
  long count() const { return count_; }
  double mean(const std::string& name) const;

 private:
  std::vector<double> sums_ = std::vector<double>(reward_term_names().size() + 1, 0.0);
  long count_ = 0;
};

}  // namespace wp::reward
