#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "walkprior/env/env.hpp"
#include "walkprior/nn/optimizer.hpp"
#include "walkprior/obs/frame_stack.hpp"
#include "walkprior/ppo/actor_critic.hpp"
#include "walkprior/ppo/losses.hpp"
#include "walkprior/reward/reward.hpp"

namespace wp::ppo {

struct PpoConfig {
  double gamma = 0.995;
  double lambda = 0.95;
  double clip = 0.1;
  double value_coef = 1.0;
  double entropy_coef = 0.001;
  int epochs = 2;
  int minibatches = 6;
  double max_grad = 1.0;
  nn::ClipMode clip_mode = nn::ClipMode::GlobalNorm;
  double learning_rate = 1e-3;
  LrSchedule schedule;
  int horizon = 24;
  void validate() const;
};

// Samples indexed t * num_envs + e.
struct Batch {
  int size = 0;
  int actor_dim = 0;
  int critic_dim = 0;
  int action_dim = 0;
  int aux_dim = 0;  // 0 when no aux targets are stored
  int disc_dim = 0;  // stacked state length, student phase only
  Vec actor_obs, critic_obs, actions, log_probs, values, rewards, dones, advantages, returns;
  Vec aux_targets, teacher_actions, disc_states, mean_actions;
  void resize(int n, int actor, int critic, int action, int aux, int disc);
};

struct LossCoefs {
  double value = 1.0;
  double entropy = 0.001;
  double aux = 0.0;
  double disc = 0.0;
  bool aux_to_trunk = true;  // false drops the aux gradient into the shared trunk
};

struct LossTerms {
  double surrogate = 0.0;  // clipped surrogate loss (negated objective)
  double value = 0.0;
  double entropy = 0.0;
  double aux = 0.0;
  double disc = 0.0;  // discriminator loss carried into the reported objective
  double total = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
};

// total = surrogate + c.value * value - c.entropy * entropy + c.aux * aux + c.disc * disc.
// With backward set, gradients of total (the disc term has none) are accumulated
// into the networks.
LossTerms minibatch_loss(ActorCritic& ac, const Batch& batch, std::span<const int> indices,
                         const LossCoefs& coefs, double clip_eps, bool backward,
                         double disc_loss = 0.0);

struct UpdateStats {
  LossTerms mean;
  double learning_rate = 0.0;
  int minibatches = 0;
  bool aborted = false;  // non-finite loss
};

// Epochs x minibatches of clipped-gradient steps. The policy group and the
// aux head are clipped separately.
UpdateStats policy_update(ActorCritic& ac, nn::Adam& opt, const Batch& batch, const PpoConfig& cfg,
                          const LossCoefs& coefs, Rng& rng, double disc_loss = 0.0);
UpdateStats teacher_update(ActorCritic& ac, nn::Adam& opt, const Batch& batch,
                           const PpoConfig& cfg, Rng& rng);

// GAE over every environment column, then advantage normalization.
void finish_batch(Batch& batch, int num_envs, std::span<const double> bootstrap,
                  const PpoConfig& cfg);

struct RolloutStats {
  reward::RewardLog rewards;
  double tracking_error = 0.0;  // mean over steps
  double mean_level = 0.0;      // mean over envs at the end of the rollout
  double mean_reward = 0.0;     // mean scaled step reward
  int episodes = 0;
  int falls = 0;
  int faults = 0;
  std::vector<env::EpisodeSummary> finished;
};

// Student-phase callbacks: the teacher's response at the student's state and
// the discriminator logit for (stacked state, action).
struct StudentHooks {
  std::function<Vec(int env_index, const env::Env& env, const obs::FrameStack& stack)> teacher;
  std::function<double(std::span<const double> disc_state, std::span<const double> action)>
      disc_logit;
};

class Collector {
 public:
  Collector(env::VecEnv& envs, const obs::StackConfig& stacks, ActorInput kind,
            ObsNormalizer& norm);
  void reset_all();
  RolloutStats collect(const ActorCritic& ac, Batch& batch, const PpoConfig& cfg,
                       const StudentHooks* hooks = nullptr);
  const std::vector<obs::FrameStack>& stacks() const { return stacks_; }
  ActorInput kind() const { return kind_; }

 private:
  void reset_env(int e);
  void push_frame(int e, bool reset);

  env::VecEnv& envs_;
  obs::StackConfig stack_cfg_;
  ActorInput kind_;
  ObsNormalizer& norm_;
  std::vector<obs::FrameStack> stacks_;
};

// Once the mean terrain level reaches trigger * max, the command bound grows
// by `growth` every `period` iterations up to `cap`.
struct CommandCurriculum {
  bool enabled = true;
  double initial = 1.0;
  double cap = 1.5;
  double trigger = 0.75;
  double growth = 0.1;
  int period = 100;
};

struct TrainOptions {
  int num_envs = 64;
  int iterations = 300;
  std::uint64_t seed = 1;
  std::string out_dir;  // empty: nothing written
  int checkpoint_interval = 0;  // 0: final checkpoint only
  obs::StackConfig stacks;
  PolicyConfig policy;
  PpoConfig ppo;
  CommandCurriculum command;
  std::uint64_t config_hash = 0;
  std::string config_text;
  bool progress = false;  // one line per iteration on stderr
};

struct IterationMetrics {
  int iteration = 0;
  std::vector<double> reward_terms;  // per reward_term_names(), then total
  double mean_level = 0.0;
  double tracking_error = 0.0;
  double mean_reward = 0.0;
  double fall_rate = 0.0;  // falls per finished episode
  double command_limit = 0.0;
  UpdateStats update;
  // student phase
  double action_distance = 0.0;
  double disc_loss = 0.0;
  double disc_pred = 0.0;
  double disc_grad = 0.0;
  double disc_weight = 0.0;
  double disc_prob_teacher = 0.0;
  double disc_prob_student = 0.0;
  double disc_reward = 0.0;
};

// Metrics CSV with a versioned comment header carrying the config hash and seed.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, bool student, std::uint64_t config_hash,
                std::uint64_t seed);
  void write(const IterationMetrics& m);
  static std::string header(bool student);
  static std::string row(const IterationMetrics& m, bool student);

 private:
  std::string path_;
  bool student_;
};

struct TrainResult {
  ActorCritic policy;
  ObsNormalizer norm;
  std::vector<IterationMetrics> history;
  std::string checkpoint_path;
  std::string metrics_path;
};

nn::Checkpoint make_checkpoint(const ActorCritic& ac, const ObsNormalizer& norm,
                               const nn::Adam* opt, const std::string& kind,
                               const obs::StackConfig& stacks, const env::EnvSpec& spec,
                               std::uint64_t config_hash, std::uint64_t seed,
                               const std::string& config_text);

TrainResult train_teacher(const env::EnvFactory& factory, const TrainOptions& opts);

}  // namespace wp::ppo
