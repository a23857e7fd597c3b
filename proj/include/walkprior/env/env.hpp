#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "walkprior/common.hpp"
#include "walkprior/obs/observation.hpp"
#include "walkprior/reward/reward.hpp"

namespace wp::env {

struct EnvSpec {
  int proprio_dim = 0;
  int privileged_dim = 0;
  int aux_dim = 0;
  int action_dim = 0;
  double dt = 0.01;
  int state_dim() const { return proprio_dim + privileged_dim; }
};

struct EpisodeSummary {
  double duration = 0.0;  // s
  double distance = 0.0;  // m, signed along the commanded direction
  double commanded_distance = 0.0;
  double positive_work = 0.0;  // J
  double weight = 0.0;         // N
  double tracking_error_sum = 0.0;
  int steps = 0;
  bool fell = false;
  bool timeout = false;
  int level = 0;  // terrain level the episode ran on
  int family = 0;
};

struct StepInfo {
  double reward = 0.0;  // already scaled
  bool done = false;
  bool timeout = false;
  bool fault = false;
  double tracking_error = 0.0;  // |commanded - measured| forward velocity
  reward::RewardBreakdown breakdown;
  std::optional<EpisodeSummary> episode;  // set when done
};

// A single environment. step() never resets; the caller inspects the
// terminal frame and then calls reset().
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual void reset(Rng& rng) = 0;
  virtual const obs::ObservationFrame& frame() const = 0;
  virtual Vec noisy_proprio(Rng& rng) const = 0;
  virtual StepInfo step(std::span<const double> action, std::optional<double> disc_logit,
                        Rng& rng) = 0;
  virtual void set_phase(reward::Phase phase) = 0;
  // Progress signal for curricula; 0 when unused.
  virtual int terrain_level() const { return 0; }
  virtual int max_terrain_level() const { return 0; }
  virtual void set_command_limit(double) {}
  // Scripted expert action for toy tasks; empty when none exists.
  virtual Vec expert_action() const { return {}; }
};

class EnvFactory {
 public:
  virtual ~EnvFactory() = default;
  // Environments are numbered; the index picks terrain instances.
  virtual std::unique_ptr<Env> make(int index) const = 0;
};

// Environments with one RNG stream each, stepped in index order.
struct VecEnv {
  std::vector<std::unique_ptr<Env>> envs;
  std::vector<Rng> rngs;
  VecEnv(const EnvFactory& factory, int count, std::uint64_t seed);
  int size() const { return static_cast<int>(envs.size()); }
  const EnvSpec& spec() const { return envs.front()->spec(); }
};

}  // namespace wp::env
