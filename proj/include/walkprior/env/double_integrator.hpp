#pragma once

#include "walkprior/env/env.hpp"

namespace wp::env {

// Point mass on a line, x'' = a. The scripted expert is a linear feedback law.
struct DoubleIntegratorConfig {
  double dt = 0.05;
  int episode_steps = 100;
  double init_position = 1.0;  // x0 ~ U(-this, this)
  double init_velocity = 0.5;
  double action_clip = 5.0;
  double expert_kp = 1.0;  // a = -kp x - kd v
  double expert_kd = 1.5;
  double noise = 0.01;          // proprio noise std
  double task_weight = 0.0;     // times -(x^2 + 0.1 v^2)
  double disc_weight = 0.05;    // times softplus(-logit), student phase only
};

class DoubleIntegratorEnv final : public Env {
 public:
  explicit DoubleIntegratorEnv(DoubleIntegratorConfig cfg);

  const EnvSpec& spec() const override { return spec_; }
  void reset(Rng& rng) override;
  const obs::ObservationFrame& frame() const override { return frame_; }
  Vec noisy_proprio(Rng& rng) const override;
  StepInfo step(std::span<const double> action, std::optional<double> disc_logit,
                Rng& rng) override;
  void set_phase(reward::Phase phase) override { phase_ = phase; }
  Vec expert_action() const override;

  double position() const { return x_; }
  double velocity() const { return v_; }

 private:
  void assemble();

  DoubleIntegratorConfig cfg_;
  EnvSpec spec_;
  reward::Phase phase_ = reward::Phase::Teacher;
  double x_ = 0.0, v_ = 0.0;
  double last_action_ = 0.0;
  int steps_ = 0;
  EpisodeSummary episode_;
  obs::ObservationFrame frame_;
};

class DoubleIntegratorFactory final : public EnvFactory {
 public:
  explicit DoubleIntegratorFactory(DoubleIntegratorConfig cfg) : cfg_(cfg) {}
  std::unique_ptr<Env> make(int) const override {
    return std::make_unique<DoubleIntegratorEnv>(cfg_);
  }

 private:
  DoubleIntegratorConfig cfg_;
};

}  // namespace wp::env
