#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "walkprior/distill/student.hpp"
#include "walkprior/harness/config.hpp"

namespace wp::harness {

// Anything that maps a frame stack to joint actions.
class EvalPolicy {
 public:
  virtual ~EvalPolicy() = default;
  virtual Vec act(const obs::FrameStack& stack) const = 0;
  virtual std::string name() const = 0;
};

// Teacher or student training checkpoint; the actor input follows the stored kind.
class CheckpointPolicy final : public EvalPolicy {
 public:
  CheckpointPolicy(const nn::Checkpoint& ck, const ExperimentConfig& cfg);
  Vec act(const obs::FrameStack& stack) const override;
  std::string name() const override { return kind_; }

 private:
  std::string kind_;
  ppo::ActorInput input_ = ppo::ActorInput::ProprioOnly;
  ppo::ActorCritic policy_;
  ppo::ObsNormalizer norm_;
};

// Actor-only deployment export fed the stacked noisy proprio history.
class DeployPolicy final : public EvalPolicy {
 public:
  DeployPolicy(distill::DeployedPolicy policy, const ExperimentConfig& cfg);
  Vec act(const obs::FrameStack& stack) const override { return policy_.act(stack.proprio()); }
  std::string name() const override { return "deploy"; }

 private:
  distill::DeployedPolicy policy_;
};

// Holds the nominal pose.
class StandStillPolicy final : public EvalPolicy {
 public:
  explicit StandStillPolicy(int actions) : actions_(actions) {}
  Vec act(const obs::FrameStack&) const override { return Vec(actions_, 0.0); }
  std::string name() const override { return "stand-still"; }

 private:
  int actions_;
};

// Picks the policy type from the file magic.
std::unique_ptr<EvalPolicy> load_eval_policy(const std::string& path, const ExperimentConfig& cfg);

struct GroupReport {
  std::string group;
  int episodes = 0;
  int falls = 0;
  double fall_rate = 0.0;
  double tracking_error = 0.0;  // m/s, mean over episodes of the per-step mean
  double mean_level = 0.0;
  std::optional<double> cot;    // mean over episodes with a defined CoT
  int cot_episodes = 0;
};

struct EvalReport {
  std::string policy;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<GroupReport> groups;  // slopes, rough, stairs, obstacles
  GroupReport overall;
};

// Runs the episode battery for every terrain group. Deterministic in cfg.seed.
EvalReport evaluate(const EvalPolicy& policy, const ExperimentConfig& cfg);

nlohmann::ordered_json report_json(const EvalReport& r);
std::string report_csv(const EvalReport& r);  // comment header, one row per group plus overall
// Writes eval_report.json and eval_report.csv into dir.
void write_report(const EvalReport& r, const std::string& dir);

}  // namespace wp::harness
