#include "walkprior/harness/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace wp::harness {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string clip_mode_name(nn::ClipMode m) {
  return m == nn::ClipMode::GlobalNorm ? "norm" : "elementwise";
}

// Calls f(section, key, field) for every configurable field, in output order.
template <class Cfg, class F>
void visit(Cfg& c, F&& f) {
  f("", "preset", c.preset);
  f("", "seed", c.seed);

  f("run", "num_envs", c.run.num_envs);
  f("run", "teacher_iterations", c.run.teacher_iterations);
  f("run", "student_iterations", c.run.student_iterations);
  f("run", "checkpoint_interval", c.run.checkpoint_interval);
  f("run", "teacher_query_noisy", c.run.teacher_query_noisy);

  f("observation", "proprio_frames", c.stacks.proprio_frames);
  f("observation", "privileged_frames", c.stacks.privileged_frames);
  f("observation", "state_frames", c.stacks.state_frames);
  f("observation", "joints", c.env.dims.joints);
  f("observation", "height_points", c.env.dims.height_points);
  f("observation", "disturbance_force", c.env.dims.disturbance_force);
  f("observation", "disturbance_torque", c.env.dims.disturbance_torque);
  f("observation", "scan_nx", c.env.scan.nx);
  f("observation", "scan_ny", c.env.scan.ny);
  f("observation", "scan_length", c.env.scan.length);
  f("observation", "scan_width", c.env.scan.width);
  f("observation", "noise_joint_pos", c.env.noise.joint_pos);
  f("observation", "noise_joint_vel", c.env.noise.joint_vel);
  f("observation", "noise_ang_vel", c.env.noise.ang_vel);
  f("observation", "noise_euler", c.env.noise.euler);
  f("observation", "gait_cycle", c.env.gait.cycle);
  f("observation", "gait_double_support", c.env.gait.ds_fraction);

  f("env", "static_friction", c.env.params.friction);
  f("env", "dynamic_friction", c.env.params.dynamic_friction);
  f("env", "restitution", c.env.params.restitution);
  f("env", "kp", c.env.params.kp);
  f("env", "kd", c.env.params.kd);
  f("env", "dt", c.env.sim.dt);
  f("env", "substeps", c.env.sim.substeps);
  f("env", "episode_length", c.env.sim.episode_length);
  f("env", "reward_scale", c.env.reward_scale);
  f("env", "action_scale", c.env.action_scale);
  f("env", "action_clip", c.env.action_clip);
  f("env", "command_limit", c.env.command_limit);
  f("env", "flat_only", c.env.flat_only);
  f("env", "initial_level_max", c.env.initial_level_max);

  f("terrain", "block_size", c.env.terrain.block_size);
  f("terrain", "resolution", c.env.terrain.resolution);
  f("terrain", "levels", c.env.terrain.max_level);
  f("terrain", "terrains_per_level", c.env.terrain.instances_per_level);
  f("terrain", "max_slope_deg", c.env.terrain.max_slope_deg);
  f("terrain", "stair_rise_min", c.env.terrain.stair_rise_min);
  f("terrain", "stair_rise_max", c.env.terrain.stair_rise_max);
  f("terrain", "stair_run", c.env.terrain.stair_run);
  f("terrain", "max_stair_steps", c.env.terrain.max_stair_steps);
  f("terrain", "rough_noise", c.env.terrain.rough_noise);
  f("terrain", "obstacle_height_min", c.env.terrain.obstacle_height_min);
  f("terrain", "obstacle_height_max", c.env.terrain.obstacle_height_max);
  f("terrain", "obstacle_size_min", c.env.terrain.obstacle_size_min);
  f("terrain", "obstacle_size_max", c.env.terrain.obstacle_size_max);
  f("terrain", "obstacle_count", c.env.terrain.obstacle_count);
  f("terrain", "curriculum", c.env.curriculum_enabled);
  f("terrain", "promote_ratio", c.env.curriculum.promote_ratio);
  f("terrain", "demote_ratio", c.env.curriculum.demote_ratio);
  f("terrain", "min_commanded_distance", c.env.curriculum.min_commanded_distance);

  auto& r = c.env.randomization;
  f("randomization", "enabled", r.enabled);
  f("randomization", "pushes", r.pushes);
  f("randomization", "friction", r.friction);
  f("randomization", "restitution", r.restitution);
  f("randomization", "push_interval", r.push_interval);
  f("randomization", "push_velocity", r.push_velocity);
  f("randomization", "push_angular", r.push_angular);
  f("randomization", "base_mass", r.base_mass);
  f("randomization", "com_displacement", r.com_displacement);
  f("randomization", "stiffness", r.stiffness);
  f("randomization", "damping", r.damping);
  f("randomization", "torque", r.torque);
  f("randomization", "link_mass", r.link_mass);
  f("randomization", "motor_offset", r.motor_offset);
  f("randomization", "joint_friction", r.joint_friction);
  f("randomization", "joint_damping", r.joint_damping);
  f("randomization", "armature", r.armature);
  f("randomization", "action_lag", r.action_lag);
  f("randomization", "obs_motor_lag", r.obs_motor_lag);
  f("randomization", "obs_action_lag", r.obs_action_lag);
  f("randomization", "obs_imu_lag", r.obs_imu_lag);
  f("randomization", "coulomb", r.coulomb);
  f("randomization", "viscous", r.viscous);

  auto& w = c.env.reward;
  f("reward", "orientation", w.w_orientation);
  f("reward", "default_joint", w.w_default_joint);
  f("reward", "base_height", w.w_base_height);
  f("reward", "velocity_mismatch", w.w_velocity_mismatch);
  f("reward", "lin_tracking", w.w_lin_tracking);
  f("reward", "ang_tracking", w.w_ang_tracking);
  f("reward", "contact_forces", w.w_contact_forces);
  f("reward", "contact_pattern", w.w_contact_pattern);
  f("reward", "feet_clearance", w.w_feet_clearance);
  f("reward", "collision", w.w_collision);
  f("reward", "smoothness", w.w_smoothness);
  f("reward", "joint_acc", w.w_joint_acc);
  f("reward", "torque", w.w_torque);
  f("reward", "power", w.w_power);
  f("reward", "disc", w.w_disc);
  f("reward", "width_orientation", w.width_orientation);
  f("reward", "width_default_joint", w.width_default_joint);
  f("reward", "width_base_height", w.width_base_height);
  f("reward", "width_velocity", w.width_velocity);
  f("reward", "base_height_target", w.base_height_target);
  f("reward", "force_threshold", w.force_threshold);
  f("reward", "force_cap", w.force_cap);
  f("reward", "collision_threshold", w.collision_threshold);
  f("reward", "swing_apex", w.swing_apex);

  f("command", "curriculum", c.command.enabled);
  f("command", "initial", c.command.initial);
  f("command", "cap", c.command.cap);
  f("command", "trigger", c.command.trigger);
  f("command", "growth", c.command.growth);
  f("command", "period", c.command.period);

  f("networks", "teacher_actor", c.teacher_policy.actor_hidden);
  f("networks", "teacher_critic", c.teacher_policy.critic_hidden);
  f("networks", "student_actor", c.student_policy.actor_hidden);
  f("networks", "student_critic", c.student_policy.critic_hidden);
  f("networks", "aux", c.student_policy.aux_hidden);
  f("networks", "share_depth", c.student_policy.share_depth);
  f("networks", "disc", c.disc.hidden);
  f("networks", "init_std", c.teacher_policy.init_std);

  auto ppo_fields = [&](const char* s, auto& p) {
    f(s, "gamma", p.gamma);
    f(s, "lambda", p.lambda);
    f(s, "clip", p.clip);
    f(s, "value_coef", p.value_coef);
    f(s, "entropy_coef", p.entropy_coef);
    f(s, "epochs", p.epochs);
    f(s, "minibatches", p.minibatches);
    f(s, "max_grad", p.max_grad);
    f(s, "clip_mode", p.clip_mode);
    f(s, "learning_rate", p.learning_rate);
    f(s, "adaptive_lr", p.schedule.adaptive);
    f(s, "desired_kl", p.schedule.desired_kl);
    f(s, "horizon", p.horizon);
  };
  ppo_fields("teacher_ppo", c.teacher_ppo);
  ppo_fields("student_ppo", c.student_ppo);

  f("distill", "aux_coef", c.student_coefs.aux);
  f("distill", "disc_coef", c.student_coefs.disc);
  f("distill", "pred_coef", c.disc.pred_coef);
  f("distill", "grad_coef", c.disc.grad_coef);
  f("distill", "weight_coef", c.disc.weight_coef);
  f("distill", "disc_learning_rate", c.disc.learning_rate);
  f("distill", "disc_epochs", c.disc.epochs);
  f("distill", "disc_minibatches", c.disc.minibatches);
  f("distill", "disc_max_grad", c.disc.max_grad);

  f("eval", "episodes_per_family", c.eval.episodes_per_family);
  f("eval", "episode_length", c.eval.episode_length);
  f("eval", "command_range", c.eval.command_range);
  f("eval", "min_episodes", c.eval.min_episodes);
  f("eval", "level", c.eval.level);
  f("eval", "curriculum", c.eval.curriculum);
}

std::string key_name(const std::string& s, const std::string& k) { return s.empty() ? k : s + "." + k; }

[[noreturn]] void bad_type(const std::string& key, const char* what) {
  throw Error("config: key '" + key + "' must be " + what);
}

void read(const json& v, const std::string& key, double& out) {
  if (!v.is_number()) bad_type(key, "a number");
  out = v.get<double>();
}
void read(const json& v, const std::string& key, int& out) {
  if (!v.is_number_integer()) bad_type(key, "an integer");
  out = v.get<int>();
}
void read(const json& v, const std::string& key, std::uint64_t& out) {
  if (!v.is_number_unsigned()) bad_type(key, "a non-negative integer");
  out = v.get<std::uint64_t>();
}
void read(const json& v, const std::string& key, bool& out) {
  if (!v.is_boolean()) bad_type(key, "true or false");
  out = v.get<bool>();
}
void read(const json& v, const std::string& key, std::string& out) {
  if (!v.is_string()) bad_type(key, "a string");
  out = v.get<std::string>();
}
void read(const json& v, const std::string& key, std::vector<int>& out) {
  if (!v.is_array() || v.empty()) bad_type(key, "a non-empty array of integers");
  out.clear();
  for (const auto& x : v) {
    if (!x.is_number_integer()) bad_type(key, "a non-empty array of integers");
    out.push_back(x.get<int>());
  }
}
void read(const json& v, const std::string& key, sim::JointVec& out) {
  if (!v.is_array() || v.size() != out.size()) bad_type(key, "an array of 6 numbers");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!v[i].is_number()) bad_type(key, "an array of 6 numbers");
    out[i] = v[i].get<double>();
  }
}
void read(const json& v, const std::string& key, sim::Range& out) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    bad_type(key, "a [low, high] pair");
  }
  out.lo = v[0].get<double>();
  out.hi = v[1].get<double>();
}
void read(const json& v, const std::string& key, nn::ClipMode& out) {
  if (v == "norm") out = nn::ClipMode::GlobalNorm;
  else if (v == "elementwise") out = nn::ClipMode::Elementwise;
  else bad_type(key, "\"norm\" or \"elementwise\"");
}

template <class T>
ordered_json write(const T& v) {
  return v;
}
ordered_json write(const sim::Range& r) { return ordered_json::array({r.lo, r.hi}); }
ordered_json write(const nn::ClipMode& m) { return clip_mode_name(m); }

void check(bool ok, const std::string& key, const std::string& rule) {
  if (!ok) throw Error("config: '" + key + "' " + rule);
}

void check_range(const sim::Range& r, const std::string& key) {
  check(r.lo <= r.hi, key, "must have low <= high");
}

void check_layers(const std::vector<int>& v, const std::string& key) {
  for (int w : v) check(w > 0, key, "layer widths must be positive");
}

void check_ppo(const ppo::PpoConfig& p, const std::string& s) {
  check(p.gamma > 0.0 && p.gamma <= 1.0, s + ".gamma", "must be in (0, 1]");
  check(p.lambda > 0.0 && p.lambda <= 1.0, s + ".lambda", "must be in (0, 1]");
  check(p.clip > 0.0 && p.clip < 1.0, s + ".clip", "must be in (0, 1)");
  check(p.value_coef > 0.0, s + ".value_coef", "must be positive");
  check(p.entropy_coef >= 0.0, s + ".entropy_coef", "must be non-negative");
  check(p.epochs >= 1, s + ".epochs", "must be >= 1");
  check(p.minibatches >= 1, s + ".minibatches", "must be >= 1");
  check(p.max_grad > 0.0, s + ".max_grad", "must be positive");
  check(p.learning_rate > 0.0, s + ".learning_rate", "must be positive");
  check(p.schedule.desired_kl > 0.0, s + ".desired_kl", "must be positive");
  check(p.horizon >= 1, s + ".horizon", "must be >= 1");
}

ExperimentConfig desk_preset() {
  ExperimentConfig c;
  c.preset = "desk";
  c.env.dims = obs::desk_dims();
  c.env.scan.nx = 11;
  c.env.scan.ny = 5;
  c.teacher_policy.actor_hidden = {128, 64};
  c.teacher_policy.critic_hidden = {128, 64};
  c.teacher_policy.aux_hidden.clear();
  c.student_policy = c.teacher_policy;
  c.student_policy.aux_hidden = {64};
  c.student_policy.share_depth = 1;
  c.disc.hidden = {64, 32};
  c.disc.weight_coef = 1e-3;
  c.student_ppo.epochs = 4;
  c.student_ppo.schedule.adaptive = false;
  return c;
}

ExperimentConfig paper_preset() {
  ExperimentConfig c = desk_preset();
  c.preset = "paper-scale";
  c.env.dims = obs::full_dims();
  c.env.scan.nx = 17;
  c.env.scan.ny = 11;
  c.env.reward.base_height_target = 1.1;
  c.run.num_envs = 10240;
  c.run.teacher_iterations = 3000;
  c.run.student_iterations = 3000;
  c.teacher_policy.actor_hidden = {1440, 768, 512, 256, 128, 64};
  c.teacher_policy.critic_hidden = {768, 256, 128};
  c.student_policy.actor_hidden = {1440, 768, 256};
  c.student_policy.critic_hidden = {768, 256, 128};
  c.student_policy.aux_hidden = {768};
  c.disc.hidden = {256, 256, 128};
  c.disc.weight_coef = 0.5;
  c.eval.episodes_per_family = 64;
  return c;
}

}  // namespace

ExperimentConfig preset(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper-scale") return paper_preset();
  throw Error("config: unknown preset '" + name + "' (expected desk or paper-scale)");
}

void ExperimentConfig::validate() const {
  check(preset == "desk" || preset == "paper-scale", "preset", "must be desk or paper-scale");
  check(run.num_envs >= 1, "run.num_envs", "must be >= 1");
  check(run.teacher_iterations >= 1, "run.teacher_iterations", "must be >= 1");
  check(run.student_iterations >= 1, "run.student_iterations", "must be >= 1");
  check(run.checkpoint_interval >= 0, "run.checkpoint_interval", "must be >= 0");
  check(stacks.proprio_frames >= 1, "observation.proprio_frames", "must be >= 1");
  check(stacks.privileged_frames >= 1, "observation.privileged_frames", "must be >= 1");
  check(stacks.state_frames >= 1, "observation.state_frames", "must be >= 1");
  check(env.dims.joints >= 1, "observation.joints", "must be >= 1");
  check(env.scan.nx >= 1 && env.scan.ny >= 1, "observation.scan_nx", "scan grid must be non-empty");
  check(env.dims.height_points == env.scan.nx * env.scan.ny, "observation.height_points",
        "must equal scan_nx * scan_ny");
  check(env.dims.disturbance_force >= 0 && env.dims.disturbance_torque >= 0,
        "observation.disturbance_force", "must be non-negative");
  check(env.gait.cycle > 0.0, "observation.gait_cycle", "must be positive");
  check(env.gait.ds_fraction >= 0.0 && env.gait.ds_fraction < 1.0,
        "observation.gait_double_support", "must be in [0, 1)");
  check(env.params.friction > 0.0, "env.static_friction", "must be positive");
  check(env.params.dynamic_friction > 0.0 && env.params.dynamic_friction <= env.params.friction,
        "env.dynamic_friction", "must be positive and not above static_friction");
  check(env.params.restitution >= 0.0 && env.params.restitution <= 1.0, "env.restitution",
        "must be in [0, 1]");
  for (int j = 0; j < sim::kJoints; ++j) {
    check(env.params.kp[j] > 0.0, "env.kp", "must be positive");
    check(env.params.kd[j] >= 0.0, "env.kd", "must be non-negative");
  }
  check(env.sim.dt > 0.0, "env.dt", "must be positive");
  check(env.sim.substeps >= 1, "env.substeps", "must be >= 1");
  check(env.sim.episode_length > 0.0, "env.episode_length", "must be positive");
  check(env.reward_scale > 0.0, "env.reward_scale", "must be positive");
  check(env.action_scale > 0.0, "env.action_scale", "must be positive");
  check(env.action_clip > 0.0, "env.action_clip", "must be positive");
  check(env.command_limit >= 0.0, "env.command_limit", "must be non-negative");
  check(env.initial_level_max >= 0 && env.initial_level_max <= env.terrain.max_level,
        "env.initial_level_max", "must be in [0, terrain.levels]");
  check(env.terrain.block_size > 0.0, "terrain.block_size", "must be positive");
  check(env.terrain.resolution > 0.0 && env.terrain.resolution < env.terrain.block_size,
        "terrain.resolution", "must be positive and below block_size");
  check(env.terrain.max_level >= 1, "terrain.levels", "must be >= 1");
  check(env.terrain.instances_per_level >= 1, "terrain.terrains_per_level", "must be >= 1");
  check(env.terrain.stair_rise_min <= env.terrain.stair_rise_max, "terrain.stair_rise_min",
        "must not exceed stair_rise_max");
  check(env.terrain.obstacle_height_min <= env.terrain.obstacle_height_max,
        "terrain.obstacle_height_min", "must not exceed obstacle_height_max");
  check(env.curriculum.demote_ratio <= env.curriculum.promote_ratio, "terrain.demote_ratio",
        "must not exceed promote_ratio");
  const auto& r = env.randomization;
  for (const auto& [k, v] :
       std::vector<std::pair<const char*, const sim::Range*>>{
           {"friction", &r.friction},         {"restitution", &r.restitution},
           {"push_interval", &r.push_interval}, {"push_velocity", &r.push_velocity},
           {"push_angular", &r.push_angular}, {"base_mass", &r.base_mass},
           {"com_displacement", &r.com_displacement}, {"stiffness", &r.stiffness},
           {"damping", &r.damping},           {"torque", &r.torque},
           {"link_mass", &r.link_mass},       {"motor_offset", &r.motor_offset},
           {"joint_friction", &r.joint_friction}, {"joint_damping", &r.joint_damping},
           {"armature", &r.armature},         {"action_lag", &r.action_lag},
           {"obs_motor_lag", &r.obs_motor_lag}, {"obs_action_lag", &r.obs_action_lag},
           {"obs_imu_lag", &r.obs_imu_lag},   {"coulomb", &r.coulomb},
           {"viscous", &r.viscous}}) {
    check_range(*v, std::string("randomization.") + k);
  }
  check(r.push_interval.lo > 0.0, "randomization.push_interval", "must be positive");
  check(env.reward.force_cap >= 0.0, "reward.force_cap", "must be non-negative");
  check(env.reward.base_height_target > 0.0, "reward.base_height_target", "must be positive");
  check(command.initial > 0.0 && command.initial <= command.cap, "command.initial",
        "must be positive and not above command.cap");
  check(command.growth >= 0.0, "command.growth", "must be non-negative");
  check(command.period >= 1, "command.period", "must be >= 1");
  check_layers(teacher_policy.actor_hidden, "networks.teacher_actor");
  check_layers(teacher_policy.critic_hidden, "networks.teacher_critic");
  check_layers(student_policy.actor_hidden, "networks.student_actor");
  check_layers(student_policy.critic_hidden, "networks.student_critic");
  check_layers(student_policy.aux_hidden, "networks.aux");
  check_layers(disc.hidden, "networks.disc");
  check(student_policy.share_depth >= 1 &&
            student_policy.share_depth <= static_cast<int>(student_policy.actor_hidden.size()),
        "networks.share_depth", "must be in [1, number of student actor layers]");
  check(teacher_policy.init_std > 0.0, "networks.init_std", "must be positive");
  check_ppo(teacher_ppo, "teacher_ppo");
  check_ppo(student_ppo, "student_ppo");
  check(teacher_ppo.minibatches <= run.num_envs * teacher_ppo.horizon, "teacher_ppo.minibatches",
        "must not exceed the batch size");
  check(student_coefs.aux >= 0.0, "distill.aux_coef", "must be non-negative");
  check(student_coefs.disc >= 0.0, "distill.disc_coef", "must be non-negative");
  check(disc.pred_coef > 0.0, "distill.pred_coef", "must be positive");
  check(disc.grad_coef >= 0.0, "distill.grad_coef", "must be non-negative");
  check(disc.weight_coef >= 0.0, "distill.weight_coef", "must be non-negative");
  check(disc.learning_rate > 0.0, "distill.disc_learning_rate", "must be positive");
  check(disc.epochs >= 1 && disc.minibatches >= 1, "distill.disc_epochs",
        "epochs and minibatches must be >= 1");
  check(disc.max_grad > 0.0, "distill.disc_max_grad", "must be positive");
  check(eval.episodes_per_family >= eval.min_episodes && eval.min_episodes >= 1,
        "eval.episodes_per_family", "must be >= eval.min_episodes >= 1");
  check(eval.episode_length > 0.0, "eval.episode_length", "must be positive");
  check(eval.command_range >= 0.0, "eval.command_range", "must be non-negative");
  check(eval.level >= 0 && eval.level <= env.terrain.max_level, "eval.level",
        "must be in [0, terrain.levels]");
}

ordered_json config_to_json(const ExperimentConfig& cfg) {
  ordered_json j = ordered_json::object();
  visit(cfg, [&](const std::string& s, const std::string& k, const auto& v) {
    if (s.empty()) j[k] = write(v);
    else j[s][k] = write(v);
  });
  return j;
}

ExperimentConfig config_from_json(const json& doc, const std::string& fallback_preset) {
  if (!doc.is_object()) throw Error("config: top level must be an object");
  std::string name = fallback_preset;
  if (doc.contains("preset")) read(doc["preset"], "preset", name);
  ExperimentConfig cfg = preset(name);

  std::map<std::string, std::set<std::string>> known;
  visit(cfg, [&](const std::string& s, const std::string& k, auto&) { known[s].insert(k); });
  for (const auto& [key, value] : doc.items()) {
    if (known[""].count(key)) continue;
    auto it = known.find(key);
    if (it == known.end() || key.empty()) throw Error("config: unknown key '" + key + "'");
    if (!value.is_object()) throw Error("config: section '" + key + "' must be an object");
    for (const auto& [sub, unused] : value.items()) {
      if (!it->second.count(sub)) throw Error("config: unknown key '" + key + "." + sub + "'");
    }
  }
  visit(cfg, [&](const std::string& s, const std::string& k, auto& field) {
    const json* v = nullptr;
    if (s.empty()) {
      if (doc.contains(k)) v = &doc[k];
    } else if (doc.contains(s) && doc[s].contains(k)) {
      v = &doc[s][k];
    }
    if (v) read(*v, key_name(s, k), field);
  });
  cfg.env.curriculum.max_level = cfg.env.terrain.max_level;
  cfg.student_policy.init_std = cfg.teacher_policy.init_std;
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::string& text, const std::string& fallback_preset) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    ExperimentConfig c = preset(fallback_preset);
    c.validate();
    return c;
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("config: parse error: ") + e.what());
  }
  return config_from_json(doc, fallback_preset);
}

ExperimentConfig load_config(const std::string& path, const std::string& fallback_preset) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fallback_preset);
}

std::string dump_config(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  ordered_json j = config_to_json(cfg);
  j.erase("seed");
  return fnv1a64(j.dump());
}

DerivedDims derive(const ExperimentConfig& cfg) {
  const obs::ObsLayout layout = obs::make_layout(cfg.env.dims);
  DerivedDims d;
  d.proprio = layout.proprio_dim;
  d.privileged = layout.privileged_dim;
  d.aux = layout.aux_dim;
  d.actions = cfg.env.dims.joints;
  d.height_points = cfg.env.dims.height_points;
  d.teacher_actor_input = ppo::actor_input_size(ppo::ActorInput::ProprioAndPrivileged, cfg.stacks,
                                                d.proprio, d.privileged);
  d.student_actor_input =
      ppo::actor_input_size(ppo::ActorInput::ProprioOnly, cfg.stacks, d.proprio, d.privileged);
  d.critic_input = ppo::critic_input_size(cfg.stacks, d.proprio, d.privileged);
  d.disc_input = cfg.stacks.state_frames * (d.proprio + d.privileged) + d.actions;
  d.batch = static_cast<long>(cfg.run.num_envs) * cfg.teacher_ppo.horizon;
  d.minibatch = d.batch / cfg.teacher_ppo.minibatches;
  return d;
}

ordered_json derived_json(const ExperimentConfig& cfg) {
  const DerivedDims d = derive(cfg);
  ordered_json j;
  j["proprio_dim"] = d.proprio;
  j["privileged_dim"] = d.privileged;
  j["aux_dim"] = d.aux;
  j["actions"] = d.actions;
  j["height_points"] = d.height_points;
  j["teacher_actor_input"] = d.teacher_actor_input;
  j["student_actor_input"] = d.student_actor_input;
  j["critic_input"] = d.critic_input;
  j["disc_input"] = d.disc_input;
  j["batch_size"] = std::to_string(cfg.run.num_envs) + "x" + std::to_string(cfg.teacher_ppo.horizon);
  j["minibatch_size"] = std::to_string(cfg.run.num_envs) + "x" +
                        std::to_string(cfg.teacher_ppo.horizon / cfg.teacher_ppo.minibatches);
  j["batch_samples"] = d.batch;
  j["minibatch_samples"] = d.minibatch;
  return j;
}

env::EnvSpec walker_spec(const ExperimentConfig& cfg) {
  if (cfg.env.dims.joints != sim::kJoints) {
    throw Error("config: the planar walker actuates " + std::to_string(sim::kJoints) +
                " joints; the " + cfg.preset +
                " preset declares " + std::to_string(cfg.env.dims.joints) +
                " (paper-scale dimensions are for config validation only)");
  }
  const DerivedDims d = derive(cfg);
  env::EnvSpec s;
  s.proprio_dim = d.proprio;
  s.privileged_dim = d.privileged;
  s.aux_dim = d.aux;
  s.action_dim = d.actions;
  s.dt = cfg.env.sim.dt;
  return s;
}

env::WalkerEnvFactory make_factory(const ExperimentConfig& cfg) {
  walker_spec(cfg);
  return env::WalkerEnvFactory(cfg.env, cfg.seed);
}

ppo::TrainOptions teacher_options(const ExperimentConfig& cfg, const std::string& out_dir) {
  walker_spec(cfg);
  ppo::TrainOptions o;
  o.num_envs = cfg.run.num_envs;
  o.iterations = cfg.run.teacher_iterations;
  o.seed = cfg.seed;
  o.out_dir = out_dir;
  o.checkpoint_interval = cfg.run.checkpoint_interval;
  o.stacks = cfg.stacks;
  o.policy = cfg.teacher_policy;
  o.ppo = cfg.teacher_ppo;
  o.command = cfg.command;
  o.config_hash = config_hash(cfg);
  o.config_text = dump_config(cfg);
  o.progress = cfg.run.progress;
  return o;
}

distill::StudentOptions student_options(const ExperimentConfig& cfg, const std::string& out_dir) {
  distill::StudentOptions s;
  s.train = teacher_options(cfg, out_dir);
  s.train.iterations = cfg.run.student_iterations;
  s.train.policy = cfg.student_policy;
  s.train.ppo = cfg.student_ppo;
  s.coefs = cfg.student_coefs;
  s.disc = cfg.disc;
  return s;
}

}  // namespace wp::harness
