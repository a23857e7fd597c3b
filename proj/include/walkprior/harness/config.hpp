#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "walkprior/distill/trainer.hpp"
#include "walkprior/env/walker_env.hpp"
#include "walkprior/ppo/trainer.hpp"

namespace wp::harness {

struct RunConfig {
  int num_envs = 64;
  int teacher_iterations = 300;
  int student_iterations = 150;
  int checkpoint_interval = 0;
  bool teacher_query_noisy = false;
  bool progress = false;
};

struct EvalConfig {
  int episodes_per_family = 4;
  double episode_length = 10.0;  // s
  double command_range = 1.5;    // |vx| bound, m/s
  int min_episodes = 1;
  int level = 0;           // fixed terrain level unless curriculum is set
  bool curriculum = false;  // promote/demote across the battery, starting at level 0
};

// Everything a run needs. Serialized as a JSON tree of sections; see
// docs in the README for the key list.
struct ExperimentConfig {
  std::string preset = "desk";
  std::uint64_t seed = 1;
  RunConfig run;
  obs::StackConfig stacks;
  env::WalkerEnvConfig env;
  ppo::PolicyConfig teacher_policy;
  ppo::PolicyConfig student_policy;
  ppo::PpoConfig teacher_ppo;
  ppo::PpoConfig student_ppo;
  ppo::CommandCurriculum command;
  distill::DiscConfig disc;
  distill::StudentCoefs student_coefs;
  EvalConfig eval;

  // Throws wp::Error naming the first offending key.
  void validate() const;
};

ExperimentConfig preset(const std::string& name);  // "desk" or "paper-scale"

nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);
// Missing keys come from the preset named in the document (or `fallback_preset`);
// unknown keys are an error.
ExperimentConfig config_from_json(const nlohmann::json& doc, const std::string& fallback_preset = "desk");
// Empty or whitespace-only files mean "all defaults".
ExperimentConfig load_config(const std::string& path, const std::string& fallback_preset = "desk");
ExperimentConfig parse_config(const std::string& text, const std::string& fallback_preset = "desk");

std::string dump_config(const ExperimentConfig& cfg);  // pretty, newline-terminated
// FNV-1a over the compact dump with the seed excluded.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::uint64_t fnv1a64(std::string_view bytes);

// Quantities fixed by the config through dimension arithmetic.
struct DerivedDims {
  int proprio = 0;
  int privileged = 0;
  int aux = 0;
  int actions = 0;
  int height_points = 0;
  int teacher_actor_input = 0;
  int student_actor_input = 0;
  int critic_input = 0;
  int disc_input = 0;
  long batch = 0;
  long minibatch = 0;
};
DerivedDims derive(const ExperimentConfig& cfg);
nlohmann::ordered_json derived_json(const ExperimentConfig& cfg);

// Walker factory and trainer options wired from the config.
env::WalkerEnvFactory make_factory(const ExperimentConfig& cfg);
ppo::TrainOptions teacher_options(const ExperimentConfig& cfg, const std::string& out_dir);
distill::StudentOptions student_options(const ExperimentConfig& cfg, const std::string& out_dir);
env::EnvSpec walker_spec(const ExperimentConfig& cfg);

}  // namespace wp::harness
