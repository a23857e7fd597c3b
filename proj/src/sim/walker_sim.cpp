#include "walkprior/sim/walker_sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>

namespace wp::sim {

namespace {

using Row = std::array<double, kDof>;

Vec2 rotate(double a, Vec2 v) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v.x - s * v.z, s * v.x + c * v.z};
}
Vec2 add(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
Vec2 sub(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
Vec2 scaled(Vec2 a, double s) { return {a.x * s, a.z * s}; }
Vec2 along(double a, double len) { return {len * std::sin(a), -len * std::cos(a)}; }

// Positions and absolute angles of the kinematic tree.
struct Kinematics {
  Vec2 hip;
  double pitch = 0.0, pitch_rate = 0.0;
  // per leg: thigh, shin, foot
  std::array<std::array<double, 3>, kLegs> angle{};
  std::array<std::array<double, 3>, kLegs> omega{};
  std::array<std::array<Vec2, 3>, kLegs> pivot{};  // hip, knee, ankle

  Kinematics(const WalkerModel& m, const std::array<double, kDof>& q,
             const std::array<double, kDof>& qd) {
    hip = {q[0], q[1]};
    pitch = q[2];
    pitch_rate = qd[2];
    for (int l = 0; l < kLegs; ++l) {
      double a = q[2], w = qd[2];
      for (int s = 0; s < 3; ++s) {
        a += q[3 + 3 * l + s];
        w += qd[3 + 3 * l + s];
        angle[l][s] = a;
        omega[l][s] = w;
      }
      pivot[l][0] = hip;
      pivot[l][1] = add(hip, along(angle[l][0], m.thigh_length));
      pivot[l][2] = add(pivot[l][1], along(angle[l][1], m.shin_length));
    }
  }

  // Translational Jacobian rows of a point rigidly attached to segment seg of
  // leg l (seg = -1: torso), and the velocity-product acceleration of the point.
  void point(int l, int seg, Vec2 p, Row& jx, Row& jz, Vec2& bias) const {
    jx.fill(0.0);
    jz.fill(0.0);
    jx[0] = 1.0;
    jz[1] = 1.0;
    const Vec2 r = sub(p, hip);
    jx[2] = -r.z;
    jz[2] = r.x;
    if (seg < 0) {
      bias = scaled(r, -pitch_rate * pitch_rate);
      return;
    }
    bias = {0.0, 0.0};
    for (int s = 0; s <= seg; ++s) {
      const Vec2 d = sub(p, pivot[l][s]);
      jx[3 + 3 * l + s] = -d.z;
      jz[3 + 3 * l + s] = d.x;
      const Vec2 seg_vec = s < seg ? sub(pivot[l][s + 1], pivot[l][s]) : d;
      const double w = omega[l][s];
      bias = add(bias, scaled(seg_vec, -w * w));
    }
  }

  Vec2 foot_point(int l, Vec2 local) const { return add(pivot[l][2], rotate(angle[l][2], local)); }
};

double dot(const Row& a, const std::array<double, kDof>& b) {
  double s = 0.0;
  for (int i = 0; i < kDof; ++i) s += a[i] * b[i];
  return s;
}

constexpr std::size_t kSensorCapacity = 64;

}  // namespace

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Running: return "running";
    case Termination::Fallen: return "fallen";
    case Termination::Timeout: return "timeout";
  }
  return "?";
}

WalkerSim::WalkerSim(WalkerModel model, EnvParams params,
                     std::shared_ptr<const terrain::Heightfield> field, SimConfig cfg)
    : model_(model), params_(params), field_(std::move(field)), cfg_(cfg) {
  model_.validate();
  if (!field_) throw Error("WalkerSim needs a terrain");
  if (!(cfg_.dt > 0.0) || cfg_.substeps < 1) throw Error("WalkerSim: dt must be positive");
  sensors_.resize(kSensorCapacity);
  set_params(params);
}

void WalkerSim::set_params(const EnvParams& params) {
  if (params.action_lag < 0 || params.obs_motor_lag < 0 || params.obs_action_lag < 0 ||
      params.obs_imu_lag < 0) {
    throw Error("WalkerSim: lags must be non-negative");
  }
  if (static_cast<std::size_t>(std::max({params.obs_motor_lag, params.obs_action_lag,
                                         params.obs_imu_lag})) >= kSensorCapacity) {
    throw Error("WalkerSim: observation lag exceeds the sensor history");
  }
  params_ = params;
  rebuild_masses();
  target_queue_.assign(static_cast<std::size_t>(params_.action_lag) + 1, model_.nominal);
  target_head_ = 0;
}

void WalkerSim::rebuild_masses() {
  const double base = model_.base_mass + params_.base_mass_offset;
  if (!(base > 0.0)) throw Error("WalkerSim: base mass must stay positive");
  bodies_[0] = {base, model_.base_inertia * base / model_.base_mass};
  for (int l = 0; l < kLegs; ++l) {
    const double* mult = &params_.link_mass_multiplier[3 * l];
    bodies_[1 + 3 * l] = {model_.thigh_mass * mult[0], model_.thigh_inertia * mult[0]};
    bodies_[2 + 3 * l] = {model_.shin_mass * mult[1], model_.shin_inertia * mult[1]};
    bodies_[3 + 3 * l] = {model_.foot_mass * mult[2], model_.foot_inertia * mult[2]};
  }
}

double WalkerSim::total_mass() const {
  double m = 0.0;
  for (const auto& b : bodies_) m += b.mass;
  return m;
}

double WalkerSim::terrain_height(double x) const { return field_->height_at(x, cfg_.lane_y); }

void WalkerSim::reset(double x, Rng& rng) {
  state_ = WalkerState{};
  state_.q[0] = x;
  for (int j = 0; j < kJoints; ++j) {
    double v = model_.nominal[j];
    if (cfg_.reset_joint_noise > 0.0) v += uniform(rng, -cfg_.reset_joint_noise, cfg_.reset_joint_noise);
    state_.q[3 + j] = v;
  }
  // Height at which the lowest foot point touches the terrain.
  double lift = -1e9;
  for (int l = 0; l < kLegs; ++l) {
    for (const Vec2& p : foot_points(l)) lift = std::max(lift, terrain_height(p.x) - p.z);
  }
  // Start at the static sink of the penalty springs to avoid a drop transient.
  const double sink = total_mass() * cfg_.gravity / (2.0 * kLegs * cfg_.contact_stiffness);
  state_.q[1] = lift - sink;
  state_.applied_target = model_.nominal;
  target_queue_.assign(target_queue_.size(), model_.nominal);
  target_head_ = 0;
  last_action_ = model_.nominal;
  sensor_head_ = 0;
  sensor_count_ = 0;
  record_sensor(model_.nominal);
  if (params_.pushes) state_.next_push = uniform(rng, params_.push_interval.lo, params_.push_interval.hi);
}

void WalkerSim::step(const JointVec& target, Rng& rng) {
  state_.positive_work = 0.0;
  last_action_ = target;
  for (int s = 0; s < cfg_.substeps && !state_.fault; ++s) substep(target);
  state_.time += cfg_.dt;
  if (params_.pushes && !state_.fault && state_.time >= state_.next_push) {
    apply_push(state_, params_, rng);
  }
}

void WalkerSim::substep(const JointVec& target) {
  const double h = cfg_.physics_dt();
  auto& q = state_.q;
  auto& qd = state_.qd;

  // Actuation delay line.
  const std::size_t n = target_queue_.size();
  target_queue_[target_head_] = target;
  const JointVec& applied = target_queue_[(target_head_ + 1) % n];
  target_head_ = (target_head_ + 1) % n;
  state_.applied_target = applied;

  const Kinematics kin(model_, q, qd);
  Eigen::Matrix<double, kDof, kDof> mass = Eigen::Matrix<double, kDof, kDof>::Zero();
  Eigen::Matrix<double, kDof, 1> force = Eigen::Matrix<double, kDof, 1>::Zero();
  Row jx, jz;
  Vec2 bias;

  auto add_body = [&](int l, int seg, Vec2 com, const Body& b) {
    kin.point(l, seg, com, jx, jz, bias);
    for (int i = 0; i < kDof; ++i) {
      for (int k = 0; k < kDof; ++k) mass(i, k) += b.mass * (jx[i] * jx[k] + jz[i] * jz[k]);
      force(i) -= b.mass * (jx[i] * bias.x + jz[i] * (bias.z + cfg_.gravity));
    }
    // Angular part: the body angle sums pitch and the joints up to seg.
    const int last = seg < 0 ? 2 : 3 + 3 * l + seg;
    for (int i = 2; i <= last; ++i) {
      if (i >= 3 && (i < 3 + 3 * l)) continue;
      for (int k = 2; k <= last; ++k) {
        if (k >= 3 && (k < 3 + 3 * l)) continue;
        mass(i, k) += b.inertia;
      }
    }
  };

  add_body(0, -1, add(kin.hip, rotate(kin.pitch, {params_.com_displacement, 0.5 * model_.base_length})),
           bodies_[0]);
  for (int l = 0; l < kLegs; ++l) {
    add_body(l, 0, add(kin.pivot[l][0], along(kin.angle[l][0], 0.5 * model_.thigh_length)),
             bodies_[1 + 3 * l]);
    add_body(l, 1, add(kin.pivot[l][1], along(kin.angle[l][1], 0.5 * model_.shin_length)),
             bodies_[2 + 3 * l]);
    add_body(l, 2, kin.foot_point(l, model_.foot_com), bodies_[3 + 3 * l]);
  }
  for (int j = 0; j < kJoints; ++j) mass(3 + j, 3 + j) += params_.armature[j];

  // Linearly implicit spring-damper along direction d at a point with
  // Jacobian rows (jx, jz): (M + h c g g' + h^2 k g g') a = f - h k g g' qd.
  auto stiffen = [&](const Row& rx, const Row& rz, Vec2 d, double k, double c) {
    Row g;
    double gv = 0.0;
    for (int i = 0; i < kDof; ++i) {
      g[i] = d.x * rx[i] + d.z * rz[i];
      gv += g[i] * qd[i];
    }
    const double w = h * c + h * h * k;
    for (int i = 0; i < kDof; ++i) {
      if (g[i] == 0.0) continue;
      for (int k2 = 0; k2 < kDof; ++k2) mass(i, k2) += w * g[i] * g[k2];
      force(i) -= h * k * g[i] * gv;
    }
  };

  // Foot contacts.
  const double mu = params_.friction;
  const double mu_slide = params_.dynamic_friction;
  for (int l = 0; l < kLegs; ++l) {
    FootState& foot = state_.feet[l];
    foot.normal_force = 0.0;
    const Vec2 local[2] = {model_.heel, model_.toe};
    for (int c = 0; c < 2; ++c) {
      ContactPoint& cp = foot.points[c];
      const Vec2 p = kin.foot_point(l, local[c]);
      const double ground = terrain_height(p.x);
      if (p.z >= ground) {
        cp = ContactPoint{};
        continue;
      }
      const double slope = field_->slope_x(p.x, cfg_.lane_y);
      const double inv = 1.0 / std::sqrt(1.0 + slope * slope);
      const Vec2 nrm{-slope * inv, inv};
      const Vec2 tan{inv, slope * inv};
      kin.point(l, 2, p, jx, jz, bias);
      const Vec2 v{dot(jx, qd), dot(jz, qd)};
      const double depth = (ground - p.z) * inv;
      const double vn = v.x * nrm.x + v.z * nrm.z;
      const double damp = vn > 0.0 ? (1.0 - params_.restitution) : 1.0;
      double fn = cfg_.contact_stiffness * depth - cfg_.contact_damping * damp * vn;
      const bool normal_linear = fn > 1e-3 * cfg_.contact_stiffness * depth;
      fn = std::max(fn, 1e-3 * cfg_.contact_stiffness * depth);

      if (!cp.anchored) {
        cp.anchored = true;
        cp.anchor = p;
      }
      const Vec2 rel = sub(p, cp.anchor);
      const double disp = rel.x * tan.x + rel.z * tan.z;
      const double vt = v.x * tan.x + v.z * tan.z;
      double ft = -cfg_.tangential_stiffness * disp - cfg_.tangential_damping * vt;
      const double cap = mu * fn;
      const bool sticking = std::abs(ft) <= cap;
      if (!sticking) {
        ft = std::copysign(mu_slide * fn, ft);
        // Slip: drag the anchor so the spring alone carries the friction bound.
        cp.anchor = sub(p, scaled(tan, -ft / cfg_.tangential_stiffness));
      }
      cp.normal_force = fn;
      cp.tangent_force = ft;
      cp.penetration = depth;
      foot.normal_force += fn;
      const Vec2 f = add(scaled(nrm, fn), scaled(tan, ft));
      for (int i = 0; i < kDof; ++i) force(i) += jx[i] * f.x + jz[i] * f.z;
      if (normal_linear) {
        stiffen(jx, jz, nrm, cfg_.contact_stiffness, cfg_.contact_damping * damp);
      }
      if (sticking) stiffen(jx, jz, tan, cfg_.tangential_stiffness, cfg_.tangential_damping);
    }
    foot.contact = foot.normal_force > 0.0;
  }

  // Actuators and joint limits.
  const JointVec qj = joint_q(), qdj = joint_qd();
  state_.torque = pd_torque(model_, params_, applied, qj, qdj);
  for (int j = 0; j < kJoints; ++j) {
    double tau = state_.torque[j];
    if (qj[j] > model_.joint_upper[j]) {
      tau -= cfg_.limit_stiffness * (qj[j] - model_.joint_upper[j]) + cfg_.limit_damping * std::max(qdj[j], 0.0);
    } else if (qj[j] < model_.joint_lower[j]) {
      tau -= cfg_.limit_stiffness * (qj[j] - model_.joint_lower[j]) + cfg_.limit_damping * std::min(qdj[j], 0.0);
    }
    force(3 + j) += tau;
    state_.positive_work += std::max(state_.torque[j] * qdj[j], 0.0) * h;
    // PD and damping terms integrate implicitly while the motor is unsaturated.
    if (std::abs(state_.torque[j]) < model_.torque_limit[j]) {
      const double damping = params_.kd[j] * params_.torque_multiplier[j] + params_.viscous[j] +
                             params_.joint_damping[j];
      const double stiffness = params_.kp[j] * params_.torque_multiplier[j];
      mass(3 + j, 3 + j) += h * damping + h * h * stiffness;
      force(3 + j) -= h * stiffness * qdj[j];
    }
  }

  const Eigen::Matrix<double, kDof, 1> acc = mass.ldlt().solve(force);
  for (int i = 0; i < kDof; ++i) {
    state_.qdd[i] = acc(i);
    qd[i] += h * acc(i);
    q[i] += h * qd[i];
  }
  for (int i = 0; i < kDof; ++i) {
    if (!std::isfinite(q[i]) || !std::isfinite(qd[i])) state_.fault = true;
  }

  // Non-foot points: hip, torso top, left knee, right knee.
  const Kinematics after(model_, q, qd);
  auto press = [&](Vec2 p) {
    return cfg_.contact_stiffness * std::max(0.0, terrain_height(p.x) - p.z);
  };
  state_.body_forces[0] = press(after.hip);
  state_.body_forces[1] = press(add(after.hip, rotate(after.pitch, {0.0, model_.base_length})));
  for (int l = 0; l < kLegs; ++l) state_.body_forces[2 + l] = press(after.pivot[l][1]);
  int hits = 0;
  for (double f : state_.body_forces) {
    if (f > cfg_.collision_threshold) ++hits;
  }
  state_.collisions = hits;
  record_sensor(last_action_);
}

void WalkerSim::record_sensor(const JointVec& action) {
  SensorSample& s = sensors_[sensor_head_];
  s.q = joint_q();
  s.qd = joint_qd();
  s.pitch = state_.q[2];
  s.pitch_rate = state_.qd[2];
  s.action = action;
  sensor_head_ = (sensor_head_ + 1) % sensors_.size();
  sensor_count_ = std::min(sensor_count_ + 1, sensors_.size());
}

const SensorSample& WalkerSim::sensor(int lag) const {
  if (sensor_count_ == 0) throw Error("WalkerSim: sensor read before reset");
  const std::size_t l = std::min<std::size_t>(static_cast<std::size_t>(std::max(lag, 0)), sensor_count_ - 1);
  const std::size_t n = sensors_.size();
  return sensors_[(sensor_head_ + n - 1 - l) % n];
}

Termination WalkerSim::check_termination() const {
  if (state_.fault || state_.collisions > 0) return Termination::Fallen;
  if (base_height() < cfg_.fall_height || std::abs(state_.q[2]) > cfg_.fall_pitch) {
    return Termination::Fallen;
  }
  if (state_.time >= cfg_.episode_length - 1e-9) return Termination::Timeout;
  return Termination::Running;
}

JointVec WalkerSim::joint_q() const {
  JointVec v;
  for (int j = 0; j < kJoints; ++j) v[j] = state_.q[3 + j];
  return v;
}

JointVec WalkerSim::joint_qd() const {
  JointVec v;
  for (int j = 0; j < kJoints; ++j) v[j] = state_.qd[3 + j];
  return v;
}

double WalkerSim::base_height() const { return state_.q[1] - terrain_height(state_.q[0]); }

std::array<Vec2, 2> WalkerSim::foot_points(int leg) const {
  const Kinematics kin(model_, state_.q, state_.qd);
  return {kin.foot_point(leg, model_.heel), kin.foot_point(leg, model_.toe)};
}

Vec2 WalkerSim::foot_velocity(int leg) const {
  const Kinematics kin(model_, state_.q, state_.qd);
  const Vec2 mid = scaled(add(model_.heel, model_.toe), 0.5);
  Row jx, jz;
  Vec2 bias;
  kin.point(leg, 2, kin.foot_point(leg, mid), jx, jz, bias);
  return {dot(jx, state_.qd), dot(jz, state_.qd)};
}

double WalkerSim::foot_clearance(int leg) const {
  double c = 1e9;
  for (const Vec2& p : foot_points(leg)) c = std::min(c, p.z - terrain_height(p.x));
  return c;
}

double WalkerSim::kinetic_energy() const {
  const Kinematics kin(model_, state_.q, state_.qd);
  Row jx, jz;
  Vec2 bias;
  double ke = 0.0;
  auto body = [&](int l, int seg, Vec2 com, const Body& b, double w) {
    kin.point(l, seg, com, jx, jz, bias);
    const double vx = dot(jx, state_.qd), vz = dot(jz, state_.qd);
    ke += 0.5 * b.mass * (vx * vx + vz * vz) + 0.5 * b.inertia * w * w;
  };
  body(0, -1, add(kin.hip, rotate(kin.pitch, {params_.com_displacement, 0.5 * model_.base_length})),
       bodies_[0], kin.pitch_rate);
  for (int l = 0; l < kLegs; ++l) {
    body(l, 0, add(kin.pivot[l][0], along(kin.angle[l][0], 0.5 * model_.thigh_length)),
         bodies_[1 + 3 * l], kin.omega[l][0]);
    body(l, 1, add(kin.pivot[l][1], along(kin.angle[l][1], 0.5 * model_.shin_length)),
         bodies_[2 + 3 * l], kin.omega[l][1]);
    body(l, 2, kin.foot_point(l, model_.foot_com), bodies_[3 + 3 * l], kin.omega[l][2]);
  }
  for (int j = 0; j < kJoints; ++j) ke += 0.5 * params_.armature[j] * state_.qd[3 + j] * state_.qd[3 + j];
  return ke;
}

double WalkerSim::potential_energy() const {
  const Kinematics kin(model_, state_.q, state_.qd);
  double pe = bodies_[0].mass *
              add(kin.hip, rotate(kin.pitch, {params_.com_displacement, 0.5 * model_.base_length})).z;
  for (int l = 0; l < kLegs; ++l) {
    pe += bodies_[1 + 3 * l].mass *
          add(kin.pivot[l][0], along(kin.angle[l][0], 0.5 * model_.thigh_length)).z;
    pe += bodies_[2 + 3 * l].mass *
          add(kin.pivot[l][1], along(kin.angle[l][1], 0.5 * model_.shin_length)).z;
    pe += bodies_[3 + 3 * l].mass * kin.foot_point(l, model_.foot_com).z;
  }
  return pe * cfg_.gravity;
}

void apply_push(WalkerState& state, const EnvParams& params, Rng& rng) {
  auto draw = [&](const Range& r) { return r.lo == r.hi ? r.lo : uniform(rng, r.lo, r.hi); };
  const double sv = uniform_int(rng, 0, 1) ? 1.0 : -1.0;
  const double dv = sv * draw(params.push_velocity);
  const double sw = uniform_int(rng, 0, 1) ? 1.0 : -1.0;
  const double dw = sw * draw(params.push_angular);
  state.qd[0] += dv;
  state.qd[2] += dw;
  state.push = {dv, 0.0, dw};
  state.next_push = state.time + draw(params.push_interval);
}

std::string trace_csv_header() {
  std::string h = "time,x,z,pitch,vx,vz,pitch_rate";
  for (int j = 0; j < kJoints; ++j) h += ",q" + std::to_string(j);
  for (int j = 0; j < kJoints; ++j) h += ",qd" + std::to_string(j);
  h += ",contact_left,contact_right,force_left,force_right";
  return h;
}

std::string trace_csv_row(const WalkerState& s) {
  std::string row;
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, row.empty() ? "%.17g" : ",%.17g", v);
    row += buf;
  };
  put(s.time);
  for (int i = 0; i < 3; ++i) put(s.q[i]);
  for (int i = 0; i < 3; ++i) put(s.qd[i]);
  for (int j = 0; j < kJoints; ++j) put(s.q[3 + j]);
  for (int j = 0; j < kJoints; ++j) put(s.qd[3 + j]);
  for (int l = 0; l < kLegs; ++l) row += s.feet[l].contact ? ",1" : ",0";
  for (int l = 0; l < kLegs; ++l) put(s.feet[l].normal_force);
  return row;
}

}  // namespace wp::sim
