#include "walkprior/env/walker_env.hpp"

#include <algorithm>
#include <cmath>

namespace wp::env {

VecEnv::VecEnv(const EnvFactory& factory, int count, std::uint64_t seed) {
  if (count < 1) throw Error("VecEnv: need at least one environment");
  for (int i = 0; i < count; ++i) {
    envs.push_back(factory.make(i));
    rngs.push_back(make_stream(seed, static_cast<std::uint64_t>(i)));
  }
}

WalkerEnv::WalkerEnv(const WalkerEnvConfig& cfg, std::shared_ptr<terrain::TerrainBank> bank,
                     int index)
    : cfg_(cfg), bank_(std::move(bank)), index_(index) {
  cfg_.model.validate();
  layout_ = obs::make_layout(cfg_.dims, cfg_.noise);
  spec_.proprio_dim = layout_.proprio_dim;
  spec_.privileged_dim = layout_.privileged_dim;
  spec_.aux_dim = layout_.aux_dim;
  spec_.action_dim = sim::kJoints;
  spec_.dt = cfg_.sim.dt;
  curriculum_.instance = index % cfg_.terrain.instances_per_level;
  sim_ = std::make_unique<sim::WalkerSim>(cfg_.model, cfg_.params,
                                          bank_->get_family(terrain::TerrainFamily::SlopeUp, 0, 0),
                                          cfg_.sim);
}

void WalkerEnv::reset(Rng& rng) {
  const bool use_curriculum = cfg_.curriculum_enabled && !cfg_.flat_only;
  if (!started_) {
    if (use_curriculum) curriculum_.level = uniform_int(rng, 0, cfg_.initial_level_max);
    started_ = true;
  } else if (use_curriculum && episode_.steps > 0) {
    terrain::curriculum_update(curriculum_, {episode_.distance, episode_.commanded_distance},
                               cfg_.curriculum, rng);
  }
  curriculum_.level = std::clamp(curriculum_.level, 0, cfg_.terrain.max_level);
  curriculum_.family = forced_family_.value_or(
      terrain::terrain_level_layout(curriculum_.level)[curriculum_.instance]);
  std::shared_ptr<const terrain::Heightfield> field =
      cfg_.flat_only ? bank_->get_family(terrain::TerrainFamily::SlopeUp, 0, 0)
                     : bank_->get_family(curriculum_.family, curriculum_.level,
                                         curriculum_.instance);
  sim_->set_field(std::move(field));
  sim_->set_params(sim::randomize_env(cfg_.params, cfg_.randomization, rng));
  sim_->reset(cfg_.spawn_x, rng);
  command_ = obs::Command{uniform(rng, -cfg_.command_limit, cfg_.command_limit), 0.0, 0.0};
  for (auto& a : actions_) a.fill(0.0);
  episode_time_ = 0.0;
  episode_ = EpisodeSummary{};
  episode_.level = curriculum_.level;
  episode_.family = static_cast<int>(curriculum_.family);
  episode_.weight = sim_->total_mass() * cfg_.sim.gravity;
  start_x_ = sim_->state().q[0];
  assemble();
}

void WalkerEnv::assemble() {
  obs::FrameInputs in;
  in.action = actions_[0];
  in.prev_action = actions_[1];
  in.last_action =
      sim_->params().obs_action_lag >= cfg_.sim.substeps ? actions_[1] : actions_[0];
  in.command = command_;
  in.phase_time = episode_time_;
  frame_ = obs::assemble_frame(*sim_, layout_, in, cfg_.gait, cfg_.scan);
}

Vec WalkerEnv::noisy_proprio(Rng& rng) const {
  return obs::add_proprio_noise(frame_.proprio, layout_, rng);
}

StepInfo WalkerEnv::step(std::span<const double> action, std::optional<double> disc_logit,
                         Rng& rng) {
  if (static_cast<int>(action.size()) != sim::kJoints) throw Error("WalkerEnv: bad action size");
  actions_[2] = actions_[1];
  actions_[1] = actions_[0];
  sim::JointVec target = cfg_.model.nominal;
  for (int j = 0; j < sim::kJoints; ++j) {
    const double a = std::isfinite(action[j])
                         ? std::clamp(action[j], -cfg_.action_clip, cfg_.action_clip)
                         : 0.0;
    actions_[0][j] = a;
    target[j] += cfg_.action_scale * a;
  }
  sim_->step(target, rng);
  episode_time_ += cfg_.sim.dt;

  StepInfo info;
  const sim::Termination term = sim_->check_termination();
  info.fault = sim_->state().fault;
  if (!info.fault) {
    reward::RewardInputs in;
    in.state = reward::reward_state(*sim_);
    in.action.assign(actions_[0].begin(), actions_[0].end());
    in.prev_action.assign(actions_[1].begin(), actions_[1].end());
    in.prev_prev_action.assign(actions_[2].begin(), actions_[2].end());
    in.command = command_;
    in.phase_time = episode_time_;
    in.disc_logit = disc_logit;
    info.breakdown = reward::total_reward(in, cfg_.gait, cfg_.reward, phase_);
    info.reward = cfg_.reward_scale * info.breakdown.total;
  }
  const double vx = sim_->state().qd[0];
  info.tracking_error = std::isfinite(vx) ? std::abs(command_.vx - vx) : 0.0;

  episode_.steps += 1;
  episode_.duration = episode_time_;
  episode_.commanded_distance += std::abs(command_.vx) * cfg_.sim.dt;
  const double dx = sim_->state().q[0] - start_x_;
  if (std::isfinite(dx)) episode_.distance = command_.vx < 0.0 ? -dx : dx;
  episode_.positive_work += sim_->state().positive_work;
  episode_.tracking_error_sum += info.tracking_error;

  info.done = term != sim::Termination::Running;
  info.timeout = term == sim::Termination::Timeout;
  if (info.done) {
    episode_.fell = term == sim::Termination::Fallen;
    episode_.timeout = info.timeout;
    info.episode = episode_;
  }
  if (!info.fault) assemble();
  return info;
}

WalkerEnvFactory::WalkerEnvFactory(WalkerEnvConfig cfg, std::uint64_t terrain_seed)
    : cfg_(std::move(cfg)),
      bank_(std::make_shared<terrain::TerrainBank>(cfg_.terrain, terrain_seed)) {}

std::unique_ptr<Env> WalkerEnvFactory::make(int index) const {
  return std::make_unique<WalkerEnv>(cfg_, bank_, index);
}

}  // namespace wp::env
