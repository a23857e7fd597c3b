#include "walkprior/ppo/actor_critic.hpp"

#include <cmath>

namespace wp::ppo {

void ObsNormalizer::update(std::span<const double> proprio_rows,
                           std::span<const double> privileged_rows, int rows) {
  if (frozen) return;
  proprio.update(proprio_rows, rows);
  privileged.update(privileged_rows, rows);
}

void ObsNormalizer::apply_state(std::span<double> x) const {
  const std::size_t p = proprio.dim(), v = privileged.dim();
  if (x.size() % (p + v) != 0) throw Error("ObsNormalizer: state stack length mismatch");
  for (std::size_t off = 0; off < x.size(); off += p + v) {
    proprio.apply(x.subspan(off, p));
    privileged.apply(x.subspan(off + p, v));
  }
}

int actor_input_size(ActorInput kind, const obs::StackConfig& stacks, int proprio_dim,
                     int privileged_dim) {
  int n = stacks.proprio_frames * proprio_dim;
  if (kind == ActorInput::ProprioAndPrivileged) n += stacks.privileged_frames * privileged_dim;
  return n;
}

int critic_input_size(const obs::StackConfig& stacks, int proprio_dim, int privileged_dim) {
  return stacks.privileged_frames * (proprio_dim + privileged_dim);
}

Vec make_actor_input(const obs::FrameStack& stack, ActorInput kind, const ObsNormalizer& norm,
                     bool clean_proprio) {
  Vec x = clean_proprio ? stack.clean_proprio() : stack.proprio();
  norm.apply_proprio(x);
  if (kind == ActorInput::ProprioAndPrivileged) {
    Vec v = stack.privileged();
    norm.apply_privileged(v);
    x.insert(x.end(), v.begin(), v.end());
  }
  return x;
}

Vec make_critic_input(const obs::FrameStack& stack, const ObsNormalizer& norm) {
  Vec x = stack.critic_state();
  norm.apply_state(x);
  return x;
}

Vec make_disc_state(const obs::FrameStack& stack, const ObsNormalizer& norm) {
  Vec x = stack.disc_state();
  norm.apply_state(x);
  return x;
}

namespace {

std::vector<int> sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

}  // namespace

ActorCritic::ActorCritic(int actor_input, int critic_input, int action_dim, int aux_dim,
                         const PolicyConfig& cfg, Rng& rng) {
  const int depth = cfg.share_depth;
  if (depth < 1 || depth > static_cast<int>(cfg.actor_hidden.size())) {
    throw Error("ActorCritic: share depth must be within the actor hidden layers");
  }
  if (!(cfg.init_std > 0.0)) throw Error("ActorCritic: init_std must be positive");
  std::vector<int> trunk_sizes{actor_input};
  trunk_sizes.insert(trunk_sizes.end(), cfg.actor_hidden.begin(),
                     cfg.actor_hidden.begin() + depth);
  const int width = trunk_sizes.back();
  trunk = nn::MlpNet(trunk_sizes, nn::Activation::Elu, true);
  head = nn::MlpNet(
      sizes(width, std::vector<int>(cfg.actor_hidden.begin() + depth, cfg.actor_hidden.end()),
            action_dim));
  critic = nn::MlpNet(sizes(critic_input, cfg.critic_hidden, 1));
  const double g = std::sqrt(2.0);
  trunk.init_orthogonal(rng, g, g);
  head.init_orthogonal(rng, g, 0.01);
  critic.init_orthogonal(rng, g, 1.0);
  if (aux_dim > 0) {
    aux = nn::MlpNet(sizes(width, cfg.aux_hidden, aux_dim));
    aux.init_orthogonal(rng, g, 1.0);
  }
  dist = nn::GaussianHead(action_dim, cfg.init_std);
}

void ActorCritic::actor_mean(std::span<const double> input, std::span<double> mean,
                             ActorTape& tape) const {
  auto h = trunk.forward(input, tape.trunk);
  auto m = head.forward(h, tape.head);
  std::copy(m.begin(), m.end(), mean.begin());
}

std::span<const double> ActorCritic::aux_predict(ActorTape& tape) const {
  if (!has_aux()) throw Error("ActorCritic: no aux head");
  return aux.forward(tape.trunk.post.back(), tape.aux);
}

double ActorCritic::value(std::span<const double> input, nn::Tape& tape) const {
  return critic.forward(input, tape)[0];
}

std::vector<nn::ParamBlock> ActorCritic::policy_blocks() {
  std::vector<nn::ParamBlock> b;
  for (auto& x : trunk.param_blocks()) b.push_back(x);
  for (auto& x : head.param_blocks()) b.push_back(x);
  b.push_back(dist.param_block());
  for (auto& x : critic.param_blocks()) b.push_back(x);
  return b;
}

std::vector<nn::ParamBlock> ActorCritic::aux_blocks() {
  if (!has_aux()) return {};
  return aux.param_blocks();
}

void ActorCritic::zero_grad() {
  trunk.zero_grad();
  head.zero_grad();
  critic.zero_grad();
  if (has_aux()) aux.zero_grad();
  dist.zero_grad();
}

void ActorCritic::save(nn::Checkpoint& ck) const {
  ck.add_mlp("actor_trunk", trunk);
  ck.add_mlp("actor_head", head);
  ck.add_vector("log_std", dist.log_std);
  if (critic.num_layers() > 0) ck.add_mlp("critic", critic);
  if (has_aux()) ck.add_mlp("aux_head", aux);
}

ActorCritic ActorCritic::load(const nn::Checkpoint& ck) {
  ActorCritic ac;
  ac.trunk = ck.mlp("actor_trunk");
  ac.head = ck.mlp("actor_head");
  if (ac.head.input_size() != ac.trunk.output_size()) {
    throw Error("ActorCritic::load: trunk/head size mismatch");
  }
  if (ck.has("critic")) ac.critic = ck.mlp("critic");
  if (ck.has("aux_head")) ac.aux = ck.mlp("aux_head");
  Vec log_std = ck.vector("log_std");
  if (static_cast<int>(log_std.size()) != ac.head.output_size()) {
    throw Error("ActorCritic::load: log_std size mismatch");
  }
  ac.dist.log_std = log_std;
  ac.dist.log_std_grad.assign(log_std.size(), 0.0);
  return ac;
}

void save_normalizer(nn::Checkpoint& ck, const ObsNormalizer& norm) {
  ck.add_normalizer("norm_proprio", norm.proprio);
  ck.add_normalizer("norm_privileged", norm.privileged);
}

ObsNormalizer load_normalizer(const nn::Checkpoint& ck) {
  ObsNormalizer n;
  n.proprio = ck.normalizer("norm_proprio");
  if (ck.has("norm_privileged")) n.privileged = ck.normalizer("norm_privileged");
  return n;
}

}  // namespace wp::ppo
