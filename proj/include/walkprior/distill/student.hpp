#pragma once

#include <memory>
#include <span>
#include <string>

#include "walkprior/env/env.hpp"
#include "walkprior/nn/checkpoint.hpp"
#include "walkprior/ppo/actor_critic.hpp"
#include "walkprior/ppo/trainer.hpp"

namespace wp::distill {

// mean over rows of |predicted - target|^2
double aux_loss(std::span<const double> predicted, std::span<const double> target, int rows);

struct StudentCoefs {
  double aux = 0.1;
  double disc = 0.05;
};

// PPO terms plus the aux regression through the shared trunk; disc_loss enters
// the reported total only.
ppo::UpdateStats student_update(ppo::ActorCritic& ac, nn::Adam& opt, const ppo::Batch& batch,
                                const ppo::PpoConfig& cfg, const StudentCoefs& coefs, Rng& rng,
                                double disc_loss);

// Source of the reference action at a student-visited state.
class TeacherOracle {
 public:
  virtual ~TeacherOracle() = default;
  virtual Vec act(const env::Env& env, const obs::FrameStack& stack) const = 0;
  // Observation statistics to start the student from; null when none.
  virtual const ppo::ObsNormalizer* normalizer() const { return nullptr; }
};

// Frozen teacher loaded from a training checkpoint; returns its mean action.
class CheckpointTeacher final : public TeacherOracle {
 public:
  CheckpointTeacher(const nn::Checkpoint& ck, const env::EnvSpec& spec,
                    const obs::StackConfig& stacks, bool noisy_proprio = false);
  static CheckpointTeacher load(const std::string& path, const env::EnvSpec& spec,
                                const obs::StackConfig& stacks, bool noisy_proprio = false);
  Vec act(const env::Env& env, const obs::FrameStack& stack) const override;
  const ppo::ObsNormalizer* normalizer() const override { return &norm_; }
  const ppo::ActorCritic& policy() const { return policy_; }

 private:
  ppo::ActorCritic policy_;
  ppo::ObsNormalizer norm_;
  bool noisy_;
};

// Scripted expert of the environment (toy tasks).
class ScriptedTeacher final : public TeacherOracle {
 public:
  Vec act(const env::Env& env, const obs::FrameStack&) const override;
};

// Actor-only policy from a deployment export: stacked raw proprio in, action out.
class DeployedPolicy {
 public:
  static DeployedPolicy load(const std::string& path);
  static DeployedPolicy parse(const nn::Checkpoint& ck);
  Vec act(std::span<const double> stacked_proprio) const;
  int input_size() const { return trunk_.input_size(); }
  int proprio_dim() const { return norm_.dim(); }
  int frames() const { return input_size() / proprio_dim(); }

 private:
  nn::MlpNet trunk_;
  nn::MlpNet head_;
  nn::RunningNormalizer norm_;
};

nn::Checkpoint make_deploy_export(const ppo::ActorCritic& student, const ppo::ObsNormalizer& norm,
                                  std::uint64_t config_hash, std::uint64_t seed);

}  // namespace wp::distill
