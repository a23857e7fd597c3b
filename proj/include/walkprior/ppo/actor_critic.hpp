#pragma once

#include <span>
#include <string>
#include <vector>

#include "walkprior/nn/checkpoint.hpp"
#include "walkprior/nn/gaussian.hpp"
#include "walkprior/nn/mlp.hpp"
#include "walkprior/nn/normalizer.hpp"
#include "walkprior/obs/frame_stack.hpp"

namespace wp::ppo {

struct PolicyConfig {
  std::vector<int> actor_hidden{128, 64};
  std::vector<int> critic_hidden{128, 64};
  std::vector<int> aux_hidden{64};
  int share_depth = 1;  // actor hidden layers shared with the aux head
  double init_std = 1.0;
};

// Whitening of proprio and privileged frames; stacked vectors are normalized
// frame by frame.
struct ObsNormalizer {
  nn::RunningNormalizer proprio;
  nn::RunningNormalizer privileged;
  bool frozen = false;

  ObsNormalizer() = default;
  ObsNormalizer(int proprio_dim, int privileged_dim)
      : proprio(proprio_dim), privileged(privileged_dim) {}
  // rows of proprio frames and of privileged frames, row-major
  void update(std::span<const double> proprio_rows, std::span<const double> privileged_rows,
              int rows);
  void apply_proprio(std::span<double> x) const { proprio.apply(x); }
  void apply_privileged(std::span<double> x) const { privileged.apply(x); }
  // Stacks of (proprio, privileged) state frames.
  void apply_state(std::span<double> x) const;
};

enum class ActorInput { ProprioAndPrivileged, ProprioOnly };

int actor_input_size(ActorInput kind, const obs::StackConfig& stacks, int proprio_dim,
                     int privileged_dim);
int critic_input_size(const obs::StackConfig& stacks, int proprio_dim, int privileged_dim);
Vec make_actor_input(const obs::FrameStack& stack, ActorInput kind, const ObsNormalizer& norm,
                     bool clean_proprio = false);
Vec make_critic_input(const obs::FrameStack& stack, const ObsNormalizer& norm);
Vec make_disc_state(const obs::FrameStack& stack, const ObsNormalizer& norm);

// Actor mean = head(trunk(x)); the optional aux head reads the trunk output.
struct ActorTape {
  nn::Tape trunk;
  nn::Tape head;
  nn::Tape aux;
};

class ActorCritic {
 public:
  ActorCritic() = default;
  ActorCritic(int actor_input, int critic_input, int action_dim, int aux_dim,
              const PolicyConfig& cfg, Rng& rng);

  int action_dim() const { return head.output_size(); }
  int actor_input_size() const { return trunk.input_size(); }
  int critic_input_size() const { return critic.input_size(); }
  bool has_aux() const { return aux.num_layers() > 0; }

  // Writes the action mean; the tape keeps the trunk record for aux/backward.
  void actor_mean(std::span<const double> input, std::span<double> mean, ActorTape& tape) const;
  // Aux prediction from a tape already holding the trunk forward pass.
  std::span<const double> aux_predict(ActorTape& tape) const;
  double value(std::span<const double> input, nn::Tape& tape) const;

  // Parameter groups for gradient clipping: trunk, head, log_std, critic / aux head.
  std::vector<nn::ParamBlock> policy_blocks();
  std::vector<nn::ParamBlock> aux_blocks();
  void zero_grad();

  void save(nn::Checkpoint& ck) const;
  static ActorCritic load(const nn::Checkpoint& ck);

  nn::MlpNet trunk;
  nn::MlpNet head;
  nn::MlpNet aux;
  nn::MlpNet critic;
  nn::GaussianHead dist;
};

void save_normalizer(nn::Checkpoint& ck, const ObsNormalizer& norm);
ObsNormalizer load_normalizer(const nn::Checkpoint& ck);

}  // namespace wp::ppo
