#include "walkprior/env/double_integrator.hpp"

#include <algorithm>
#include <cmath>

namespace wp::env {

DoubleIntegratorEnv::DoubleIntegratorEnv(DoubleIntegratorConfig cfg) : cfg_(cfg) {
  if (!(cfg_.dt > 0.0) || cfg_.episode_steps < 1) throw Error("DoubleIntegratorEnv: bad config");
  // proprio: x, v, last action; privileged: x, v; aux: x, v
  spec_.proprio_dim = 3;
  spec_.privileged_dim = 2;
  spec_.aux_dim = 2;
  spec_.action_dim = 1;
  spec_.dt = cfg_.dt;
}

void DoubleIntegratorEnv::reset(Rng& rng) {
  x_ = uniform(rng, -cfg_.init_position, cfg_.init_position);
  v_ = uniform(rng, -cfg_.init_velocity, cfg_.init_velocity);
  last_action_ = 0.0;
  steps_ = 0;
  episode_ = EpisodeSummary{};
  assemble();
}

void DoubleIntegratorEnv::assemble() {
  frame_.proprio = {x_, v_, last_action_};
  frame_.privileged = {x_, v_};
  frame_.aux = {x_, v_};
}

Vec DoubleIntegratorEnv::noisy_proprio(Rng& rng) const {
  Vec p = frame_.proprio;
  p[0] += cfg_.noise * standard_normal(rng);
  p[1] += cfg_.noise * standard_normal(rng);
  return p;
}

Vec DoubleIntegratorEnv::expert_action() const {
  return {std::clamp(-cfg_.expert_kp * x_ - cfg_.expert_kd * v_, -cfg_.action_clip,
                     cfg_.action_clip)};
}

StepInfo DoubleIntegratorEnv::step(std::span<const double> action,
                                   std::optional<double> disc_logit, Rng&) {
  if (action.size() != 1) throw Error("DoubleIntegratorEnv: bad action size");
  if (phase_ == reward::Phase::Student && !disc_logit) {
    throw Error("DoubleIntegratorEnv: student phase requires a discriminator logit");
  }
  const double a = std::isfinite(action[0])
                       ? std::clamp(action[0], -cfg_.action_clip, cfg_.action_clip)
                       : 0.0;
  v_ += cfg_.dt * a;
  x_ += cfg_.dt * v_;
  last_action_ = a;
  ++steps_;

  StepInfo info;
  const double task = -(x_ * x_ + 0.1 * v_ * v_);
  info.breakdown.terms.push_back({"task", task, cfg_.task_weight, cfg_.task_weight * task});
  if (phase_ == reward::Phase::Student) {
    const double d = reward::disc_reward(*disc_logit);
    info.breakdown.terms.push_back({"disc", d, cfg_.disc_weight, cfg_.disc_weight * d});
  }
  for (const auto& t : info.breakdown.terms) info.breakdown.total += t.value;
  info.reward = info.breakdown.total;
  info.tracking_error = std::abs(v_);
  episode_.steps = steps_;
  episode_.duration = steps_ * cfg_.dt;
  episode_.tracking_error_sum += info.tracking_error;
  info.done = steps_ >= cfg_.episode_steps;
  info.timeout = info.done;
  if (info.done) {
    episode_.timeout = true;
    info.episode = episode_;
  }
  assemble();
  return info;
}

}  // namespace wp::env
