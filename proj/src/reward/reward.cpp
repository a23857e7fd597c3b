#include "walkprior/reward/reward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace wp::reward {

double kernel(const double* e, int n, double w) {
  double sq = 0.0;
  for (int i = 0; i < n; ++i) sq += e[i] * e[i];
  return std::exp(-w * sq);
}

double kernel(std::initializer_list<double> e, double w) {
  return kernel(e.begin(), static_cast<int>(e.size()), w);
}

double contact_pattern(const std::array<int, 2>& commanded, const std::array<int, 2>& measured) {
  return 0.5 * ((commanded[0] == measured[0]) + (commanded[1] == measured[1]));
}

double swing_height_target(double p, double apex) {
  p = std::clamp(p, 0.0, 1.0);
  const double s = p * (1.0 - p);
  return 16.0 * apex * s * s;
}

double foot_clearance_term(const std::array<double, 2>& heights,
                           const std::array<double, 2>& swing_phase, double apex) {
  double sum = 0.0;
  for (int l = 0; l < 2; ++l) {
    if (swing_phase[l] < 0.0) continue;
    sum += std::abs(heights[l] - swing_height_target(swing_phase[l], apex));
  }
  return sum;
}

int collision_count(const double* forces, int n, double threshold) {
  int c = 0;
  for (int i = 0; i < n; ++i) c += forces[i] > threshold;
  return c;
}

double contact_force_penalty(double left, double right, double threshold, double cap) {
  auto one = [&](double f) { return std::clamp(f - threshold, 0.0, cap); };
  return one(left) + one(right);
}

double disc_reward(double logit) {
  // log(1 + exp(-x)) without overflow
  const double x = -logit;
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

RewardState reward_state(const sim::WalkerSim& sim) {
  const sim::WalkerState& st = sim.state();
  RewardState r;
  r.pitch = st.q[2];
  r.base_height = sim.base_height();
  r.lin_vel = {st.qd[0], 0.0, st.qd[1]};
  r.ang_vel = {0.0, st.qd[2], 0.0};
  const auto q = sim.joint_q(), qd = sim.joint_qd();
  r.joint_pos.assign(q.begin(), q.end());
  r.nominal.assign(sim.model().nominal.begin(), sim.model().nominal.end());
  r.joint_vel.assign(qd.begin(), qd.end());
  r.joint_acc.assign(st.qdd.begin() + 3, st.qdd.end());
  r.torque.assign(st.torque.begin(), st.torque.end());
  for (int l = 0; l < sim::kLegs; ++l) {
    r.foot_force[l] = st.feet[l].normal_force;
    r.contact[l] = st.feet[l].contact ? 1 : 0;
    r.foot_height[l] = sim.foot_clearance(l);
  }
  r.body_forces.assign(st.body_forces.begin(), st.body_forces.end());
  return r;
}

const RewardTerm* RewardBreakdown::find(const std::string& name) const {
  for (const RewardTerm& t : terms) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const std::vector<std::string>& reward_term_names() {
  static const std::vector<std::string> names{
      "orientation",  "default_joint",   "base_height",    "velocity_mismatch",
      "lin_tracking", "ang_tracking",    "contact_forces", "contact_pattern",
      "feet_clearance", "collision",     "smoothness",     "joint_acc",
      "torque",       "power",           "disc"};
  return names;
}

RewardBreakdown total_reward(const RewardInputs& in, const obs::GaitSchedule& sched,
                             const RewardConfig& cfg, Phase phase) {
  const RewardState& s = in.state;
  const std::size_t nj = s.joint_pos.size();
  if (s.nominal.size() != nj || s.joint_vel.size() != nj || s.joint_acc.size() != nj ||
      s.torque.size() != nj || in.action.size() != nj || in.prev_action.size() != nj ||
      in.prev_prev_action.size() != nj) {
    throw Error("total_reward: joint vector size mismatch");
  }
  if (phase == Phase::Student && !in.disc_logit) {
    throw Error("total_reward: student phase requires a discriminator logit");
  }
  const obs::GaitClock clock = obs::gait_clock(in.phase_time, sched);
  const obs::Command& c = in.command;

  RewardBreakdown b;
  auto add = [&](const char* name, double raw, double weight) {
    b.terms.push_back(RewardTerm{name, raw, weight, raw * weight});
  };

  add("orientation", kernel({s.roll, s.pitch}, cfg.width_orientation), cfg.w_orientation);
  Vec dq(nj), smooth(nj);
  double acc = 0.0, torque = 0.0, power = 0.0;
  for (std::size_t i = 0; i < nj; ++i) {
    dq[i] = s.joint_pos[i] - s.nominal[i];
    smooth[i] = in.action[i] - 2.0 * in.prev_action[i] + in.prev_prev_action[i];
    acc += s.joint_acc[i] * s.joint_acc[i];
    torque += s.torque[i] * s.torque[i];
    power += std::abs(s.torque[i]) * std::abs(s.joint_vel[i]);
  }
  add("default_joint", kernel(dq.data(), static_cast<int>(nj), cfg.width_default_joint),
      cfg.w_default_joint);
  add("base_height", kernel({s.base_height - cfg.base_height_target}, cfg.width_base_height),
      cfg.w_base_height);
  add("velocity_mismatch",
      kernel({s.lin_vel[2], s.ang_vel[2] - c.yaw_rate, s.ang_vel[1]}, cfg.width_velocity),
      cfg.w_velocity_mismatch);
  add("lin_tracking",
      kernel({s.lin_vel[0] - c.vx, s.lin_vel[1] - c.vy, s.lin_vel[2]}, cfg.width_velocity),
      cfg.w_lin_tracking);
  add("ang_tracking",
      kernel({s.ang_vel[0], s.ang_vel[1], s.ang_vel[2] - c.yaw_rate}, cfg.width_velocity),
      cfg.w_ang_tracking);
  add("contact_forces",
      contact_force_penalty(s.foot_force[0], s.foot_force[1], cfg.force_threshold, cfg.force_cap),
      cfg.w_contact_forces);
  add("contact_pattern", contact_pattern(clock.mask, s.contact), cfg.w_contact_pattern);
  add("feet_clearance", foot_clearance_term(s.foot_height, clock.swing_phase, cfg.swing_apex),
      cfg.w_feet_clearance);
  add("collision",
      collision_count(s.body_forces.data(), static_cast<int>(s.body_forces.size()),
                      cfg.collision_threshold),
      cfg.w_collision);
  double sm = 0.0;
  for (double x : smooth) sm += x * x;
  add("smoothness", std::sqrt(sm), cfg.w_smoothness);
  add("joint_acc", acc, cfg.w_joint_acc);
  add("torque", torque, cfg.w_torque);
  add("power", power, cfg.w_power);
  if (phase == Phase::Student) add("disc", disc_reward(*in.disc_logit), cfg.w_disc);

  for (const RewardTerm& t : b.terms) b.total += t.value;
  return b;
}

std::string reward_csv_header() {
  std::string h = "iteration";
  for (const auto& n : reward_term_names()) h += "," + n;
  return h + ",total";
}

void RewardLog::add(const RewardBreakdown& b) {
  const auto& names = reward_term_names();
  for (const RewardTerm& t : b.terms) {
    const auto it = std::find(names.begin(), names.end(), t.name);
    if (it != names.end()) sums_[it - names.begin()] += t.value;
  }
  sums_.back() += b.total;
  ++count_;
}

double RewardLog::mean(const std::string& name) const {
  if (count_ == 0) return 0.0;
  const auto& names = reward_term_names();
  if (name == "total") return sums_.back() / count_;
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error("RewardLog: unknown term " + name);
  return sums_[it - names.begin()] / count_;
}

std::string RewardLog::csv_row(long iteration) const {
  std::string row = std::to_string(iteration);
  char buf[32];
  for (double s : sums_) {
    std::snprintf(buf, sizeof buf, ",%.9g", count_ ? s / count_ : 0.0);
    row += buf;
  }
  return row;
}

void RewardLog::clear() {
  std::fill(sums_.begin(), sums_.end(), 0.0);
  count_ = 0;
}

}  // namespace wp::reward
