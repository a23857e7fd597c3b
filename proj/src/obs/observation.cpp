#include "walkprior/obs/observation.hpp"

#include <json.hpp>

namespace wp::obs {

ObsDims desk_dims() { return ObsDims{}; }

ObsDims full_dims() { return ObsDims{12, 187, 2, 3}; }

namespace {

int append(std::vector<Block>& blocks, int offset, const std::string& name, int width,
           double noise = 0.0) {
  blocks.push_back(Block{name, offset, width, noise});
  return offset + width;
}

void put(Vec& v, const Block& b, std::initializer_list<double> values) {
  int i = b.offset;
  for (double x : values) v[i++] = x;
}

template <class Array>
void put(Vec& v, const Block& b, const Array& values) {
  for (int i = 0; i < b.width; ++i) v[b.offset + i] = values[i];
}

sim::JointVec minus(const sim::JointVec& a, const sim::JointVec& b) {
  sim::JointVec r{};
  for (int i = 0; i < sim::kJoints; ++i) r[i] = a[i] - b[i];
  return r;
}

}  // namespace

const Block& ObsLayout::find(const std::string& group, const std::string& name) const {
  const std::vector<Block>* blocks = nullptr;
  if (group == "proprio") blocks = &proprio;
  else if (group == "privileged") blocks = &privileged;
  else if (group == "aux") blocks = &aux;
  else throw Error("ObsLayout: unknown group " + group);
  for (const Block& b : *blocks) {
    if (b.name == name) return b;
  }
  throw Error("ObsLayout: unknown block " + group + "/" + name);
}

ObsLayout make_layout(const ObsDims& dims, const NoiseScales& noise) {
  if (dims.joints < 1 || dims.height_points < 0 || dims.disturbance_force < 0 ||
      dims.disturbance_torque < 0) {
    throw Error("make_layout: invalid dimensions");
  }
  ObsLayout l;
  l.dims = dims;
  const int j = dims.joints;
  int o = 0;
  o = append(l.proprio, o, "clock", 2);
  o = append(l.proprio, o, "command", 3);
  o = append(l.proprio, o, "last_actions", j, noise.last_action);
  o = append(l.proprio, o, "joint_pos", j, noise.joint_pos);
  o = append(l.proprio, o, "joint_vel", j, noise.joint_vel);
  o = append(l.proprio, o, "base_ang_vel", 3, noise.ang_vel);
  o = append(l.proprio, o, "euler", 3, noise.euler);
  l.proprio_dim = o;

  o = 0;
  o = append(l.privileged, o, "action_diff", j);
  o = append(l.privileged, o, "base_lin_vel", 3);
  o = append(l.privileged, o, "friction", 1);
  o = append(l.privileged, o, "contact_phase", 2);
  o = append(l.privileged, o, "disturbance_force", dims.disturbance_force);
  o = append(l.privileged, o, "disturbance_torque", dims.disturbance_torque);
  o = append(l.privileged, o, "gait_phase", 2);
  o = append(l.privileged, o, "body_weight", 1);
  o = append(l.privileged, o, "height_map", dims.height_points);
  l.privileged_dim = o;

  o = 0;
  o = append(l.aux, o, "joint_pos", j);
  o = append(l.aux, o, "joint_vel", j);
  o = append(l.aux, o, "base_ang_vel", 3);
  o = append(l.aux, o, "euler", 3);
  o = append(l.aux, o, "action_diff", j);
  o = append(l.aux, o, "base_lin_vel", 3);
  o = append(l.aux, o, "friction", 1);
  o = append(l.aux, o, "contact_phase", 2);
  l.aux_dim = o;
  return l;
}

std::string layout_manifest_json(const ObsLayout& layout) {
  nlohmann::ordered_json j;
  j["proprio_dim"] = layout.proprio_dim;
  j["privileged_dim"] = layout.privileged_dim;
  j["aux_dim"] = layout.aux_dim;
  auto& blocks = j["blocks"] = nlohmann::ordered_json::array();
  auto emit = [&](const char* group, const std::vector<Block>& bs) {
    for (const Block& b : bs) {
      blocks.push_back({{"group", group},
                        {"name", b.name},
                        {"offset", b.offset},
                        {"width", b.width},
                        {"noise", b.noise}});
    }
  };
  emit("proprio", layout.proprio);
  emit("privileged", layout.privileged);
  emit("aux", layout.aux);
  return j.dump(2);
}

Vec ObservationFrame::state() const {
  Vec s(proprio);
  s.insert(s.end(), privileged.begin(), privileged.end());
  return s;
}

ObservationFrame assemble_frame(const sim::WalkerSim& sim, const ObsLayout& layout,
                                const FrameInputs& in, const GaitSchedule& sched,
                                const terrain::ScanGrid& grid) {
  if (layout.dims.joints != sim::kJoints) throw Error("assemble_frame: joint count mismatch");
  if (layout.dims.height_points != grid.size()) throw Error("assemble_frame: scan size mismatch");
  if (layout.dims.disturbance_force != 2 || layout.dims.disturbance_torque < 1) {
    throw Error("assemble_frame: unsupported disturbance layout");
  }
  const sim::WalkerState& st = sim.state();
  const sim::EnvParams& p = sim.params();
  const sim::JointVec& nominal = sim.model().nominal;
  const GaitClock clock = gait_clock(in.phase_time, sched);

  ObservationFrame f;
  f.proprio.assign(layout.proprio_dim, 0.0);
  f.privileged.assign(layout.privileged_dim, 0.0);
  f.aux.assign(layout.aux_dim, 0.0);

  const sim::SensorSample& motor = sim.sensor(p.obs_motor_lag);
  const sim::SensorSample& imu = sim.sensor(p.obs_imu_lag);
  auto P = [&](const char* n) -> const Block& { return layout.find("proprio", n); };
  put(f.proprio, P("clock"), {clock.sin, clock.cos});
  put(f.proprio, P("command"), {in.command.vx, in.command.vy, in.command.yaw_rate});
  put(f.proprio, P("last_actions"), in.last_action);
  put(f.proprio, P("joint_pos"), minus(motor.q, nominal));
  put(f.proprio, P("joint_vel"), motor.qd);
  put(f.proprio, P("base_ang_vel"), {0.0, imu.pitch_rate, 0.0});
  put(f.proprio, P("euler"), {0.0, imu.pitch, 0.0});

  const sim::JointVec action_diff = minus(in.action, in.prev_action);
  const double contact[2] = {st.feet[0].contact ? 1.0 : 0.0, st.feet[1].contact ? 1.0 : 0.0};
  auto V = [&](const char* n) -> const Block& { return layout.find("privileged", n); };
  put(f.privileged, V("action_diff"), action_diff);
  put(f.privileged, V("base_lin_vel"), {st.qd[0], 0.0, st.qd[1]});
  put(f.privileged, V("friction"), {p.friction});
  put(f.privileged, V("contact_phase"), contact);
  put(f.privileged, V("disturbance_force"), {st.push[0], st.push[1]});
  {
    const Block& b = V("disturbance_torque");
    f.privileged[b.offset + (b.width == 3 ? 1 : 0)] = st.push[2];
  }
  put(f.privileged, V("gait_phase"),
      {static_cast<double>(clock.mask[0]), static_cast<double>(clock.mask[1])});
  put(f.privileged, V("body_weight"), {sim.total_mass()});
  put(f.privileged, V("height_map"),
      terrain::scan_height_map(sim.field(), st.q[0], sim.config().lane_y, st.q[1], 0.0, grid));

  auto A = [&](const char* n) -> const Block& { return layout.find("aux", n); };
  put(f.aux, A("joint_pos"), minus(sim.joint_q(), nominal));
  put(f.aux, A("joint_vel"), sim.joint_qd());
  put(f.aux, A("base_ang_vel"), {0.0, st.qd[2], 0.0});
  put(f.aux, A("euler"), {0.0, st.q[2], 0.0});
  put(f.aux, A("action_diff"), action_diff);
  put(f.aux, A("base_lin_vel"), {st.qd[0], 0.0, st.qd[1]});
  put(f.aux, A("friction"), {p.friction});
  put(f.aux, A("contact_phase"), contact);
  return f;
}

Vec add_proprio_noise(const Vec& proprio, const ObsLayout& layout, Rng& rng) {
  if (static_cast<int>(proprio.size()) != layout.proprio_dim) {
    throw Error("add_proprio_noise: size mismatch");
  }
  Vec out(proprio);
  for (const Block& b : layout.proprio) {
    if (b.name == "clock" || b.name == "command" || b.noise == 0.0) continue;
    for (int i = 0; i < b.width; ++i) out[b.offset + i] += b.noise * standard_normal(rng);
  }
  return out;
}

}  // namespace wp::obs
