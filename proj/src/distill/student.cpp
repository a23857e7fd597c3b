#include "walkprior/distill/student.hpp"

#include <json.hpp>

namespace wp::distill {

double aux_loss(std::span<const double> predicted, std::span<const double> target, int rows) {
  if (predicted.size() != target.size() || rows <= 0 || predicted.size() % rows != 0) {
    throw Error("aux_loss: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    sum += (predicted[i] - target[i]) * (predicted[i] - target[i]);
  }
  return sum / rows;
}

ppo::UpdateStats student_update(ppo::ActorCritic& ac, nn::Adam& opt, const ppo::Batch& batch,
                                const ppo::PpoConfig& cfg, const StudentCoefs& coefs, Rng& rng,
                                double disc_loss) {
  ppo::LossCoefs c;
  c.value = cfg.value_coef;
  c.entropy = cfg.entropy_coef;
  c.aux = coefs.aux;
  c.disc = coefs.disc;
  return ppo::policy_update(ac, opt, batch, cfg, c, rng, disc_loss);
}

CheckpointTeacher::CheckpointTeacher(const nn::Checkpoint& ck, const env::EnvSpec& spec,
                                     const obs::StackConfig& stacks, bool noisy_proprio)
    : noisy_(noisy_proprio) {
  if (!ck.has("meta")) throw Error("teacher checkpoint: missing metadata");
  const auto meta = nlohmann::json::parse(ck.text("meta"));
  if (meta.at("kind") != "teacher") throw Error("teacher checkpoint: not a teacher policy");
  if (meta.at("proprio_dim") != spec.proprio_dim ||
      meta.at("privileged_dim") != spec.privileged_dim ||
      meta.at("action_dim") != spec.action_dim ||
      meta.at("proprio_frames") != stacks.proprio_frames ||
      meta.at("privileged_frames") != stacks.privileged_frames) {
    throw Error("teacher checkpoint: dimensions do not match the configuration");
  }
  policy_ = ppo::ActorCritic::load(ck);
  norm_ = ppo::load_normalizer(ck);
  norm_.frozen = true;
  const int expect = ppo::actor_input_size(ppo::ActorInput::ProprioAndPrivileged, stacks,
                                           spec.proprio_dim, spec.privileged_dim);
  if (policy_.actor_input_size() != expect) {
    throw Error("teacher checkpoint: actor input size mismatch");
  }
}

CheckpointTeacher CheckpointTeacher::load(const std::string& path, const env::EnvSpec& spec,
                                          const obs::StackConfig& stacks, bool noisy_proprio) {
  return CheckpointTeacher(nn::Checkpoint::load(path, nn::kCheckpointMagic), spec, stacks,
                           noisy_proprio);
}

Vec CheckpointTeacher::act(const env::Env&, const obs::FrameStack& stack) const {
  const Vec x =
      ppo::make_actor_input(stack, ppo::ActorInput::ProprioAndPrivileged, norm_, !noisy_);
  Vec mean(policy_.action_dim());
  ppo::ActorTape tape;
  policy_.actor_mean(x, mean, tape);
  return mean;
}

Vec ScriptedTeacher::act(const env::Env& env, const obs::FrameStack&) const {
  Vec a = env.expert_action();
  if (a.empty()) throw Error("ScriptedTeacher: environment has no scripted expert");
  return a;
}

nn::Checkpoint make_deploy_export(const ppo::ActorCritic& student, const ppo::ObsNormalizer& norm,
                                  std::uint64_t config_hash, std::uint64_t seed) {
  nn::Checkpoint ck(nn::kDeployMagic);
  ck.config_hash = config_hash;
  ck.seed = seed;
  ck.add_mlp("actor_trunk", student.trunk);
  ck.add_mlp("actor_head", student.head);
  ck.add_normalizer("norm_proprio", norm.proprio);
  return ck;
}

DeployedPolicy DeployedPolicy::parse(const nn::Checkpoint& ck) {
  DeployedPolicy p;
  p.trunk_ = ck.mlp("actor_trunk");
  p.head_ = ck.mlp("actor_head");
  p.norm_ = ck.normalizer("norm_proprio");
  if (p.head_.input_size() != p.trunk_.output_size() || p.norm_.dim() <= 0 ||
      p.trunk_.input_size() % p.norm_.dim() != 0) {
    throw Error("deployment export: inconsistent network sizes");
  }
  return p;
}

DeployedPolicy DeployedPolicy::load(const std::string& path) {
  return parse(nn::Checkpoint::load(path, nn::kDeployMagic));
}

Vec DeployedPolicy::act(std::span<const double> stacked_proprio) const {
  if (static_cast<int>(stacked_proprio.size()) != input_size()) {
    throw Error("DeployedPolicy: input size mismatch");
  }
  Vec x(stacked_proprio.begin(), stacked_proprio.end());
  norm_.apply(x);
  nn::Tape t1, t2;
  const auto h = trunk_.forward(x, t1);
  const auto out = head_.forward(h, t2);
  return Vec(out.begin(), out.end());
}

}  // namespace wp::distill
