#pragma once

#include <array>
#include <memory>

#include "walkprior/env/env.hpp"
#include "walkprior/obs/gait.hpp"
#include "walkprior/sim/walker_sim.hpp"
#include "walkprior/terrain/curriculum.hpp"

namespace wp::env {

struct WalkerEnvConfig {
  sim::WalkerModel model;
  sim::EnvParams params;
  sim::SimConfig sim;
  sim::RandomizationConfig randomization;
  terrain::TerrainConfig terrain;
  terrain::CurriculumConfig curriculum;
  bool curriculum_enabled = true;
  bool flat_only = false;      // every episode on the level-0 block
  int initial_level_max = 4;   // start levels drawn from [0, this]
  obs::ObsDims dims;
  obs::NoiseScales noise;
  obs::GaitSchedule gait;
  terrain::ScanGrid scan;
  reward::RewardConfig reward;
  double reward_scale = 0.01;  // multiplies the breakdown total
  double action_scale = 0.25;  // rad per unit action around the nominal pose
  double action_clip = 5.0;
  double command_limit = 1.0;  // |vx| sampled uniformly up to this, m/s
  double spawn_x = 4.0;        // m, block centre
};

class WalkerEnv final : public Env {
 public:
  WalkerEnv(const WalkerEnvConfig& cfg, std::shared_ptr<terrain::TerrainBank> bank, int index);

  const EnvSpec& spec() const override { return spec_; }
  void reset(Rng& rng) override;
  const obs::ObservationFrame& frame() const override { return frame_; }
  Vec noisy_proprio(Rng& rng) const override;
  StepInfo step(std::span<const double> action, std::optional<double> disc_logit,
                Rng& rng) override;
  void set_phase(reward::Phase phase) override { phase_ = phase; }
  int terrain_level() const override { return curriculum_.level; }
  int max_terrain_level() const override { return cfg_.curriculum.max_level; }
  void set_command_limit(double limit) override { cfg_.command_limit = limit; }

  // Overrides for scripted evaluation.
  void set_level(int level) { curriculum_.level = level; }
  void set_family(terrain::TerrainFamily family) { forced_family_ = family; }
  void set_command(const obs::Command& c) { command_ = c; }
  const obs::Command& command() const { return command_; }
  const sim::WalkerSim& sim() const { return *sim_; }
  const obs::ObsLayout& layout() const { return layout_; }
  const WalkerEnvConfig& config() const { return cfg_; }

 private:
  void assemble();

  WalkerEnvConfig cfg_;
  std::shared_ptr<terrain::TerrainBank> bank_;
  int index_;
  EnvSpec spec_;
  obs::ObsLayout layout_;
  std::unique_ptr<sim::WalkerSim> sim_;
  terrain::CurriculumState curriculum_;
  std::optional<terrain::TerrainFamily> forced_family_;
  bool started_ = false;
  reward::Phase phase_ = reward::Phase::Teacher;
  obs::Command command_;
  std::array<sim::JointVec, 3> actions_{};  // a_t, a_{t-1}, a_{t-2}
  double episode_time_ = 0.0;
  EpisodeSummary episode_;
  double start_x_ = 0.0;
  obs::ObservationFrame frame_;
};

class WalkerEnvFactory final : public EnvFactory {
 public:
  WalkerEnvFactory(WalkerEnvConfig cfg, std::uint64_t terrain_seed);
  std::unique_ptr<Env> make(int index) const override;
  const WalkerEnvConfig& config() const { return cfg_; }

 private:
  WalkerEnvConfig cfg_;
  std::shared_ptr<terrain::TerrainBank> bank_;
};

}  // namespace wp::env
