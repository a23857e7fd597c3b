#include <cmath>
#include <numeric>

#include "doctest.h"
#include "walkprior/env/double_integrator.hpp"
#include "walkprior/ppo/gae.hpp"
#include "walkprior/ppo/losses.hpp"
#include "walkprior/ppo/trainer.hpp"

using namespace wp;
using namespace wp::ppo;

namespace {

// Exhaustive sum of (gamma lambda)^k delta_{t+k}, stopping after a done.
Vec brute_force_gae(const Vec& r, const Vec& v, const Vec& d, double boot, double g, double l) {
  const int n = static_cast<int>(r.size());
  Vec delta(n);
  for (int t = 0; t < n; ++t) {
    const double next = t + 1 < n ? v[t + 1] : boot;
    delta[t] = r[t] + g * next * (1.0 - d[t]) - v[t];
  }
  Vec adv(n, 0.0);
  for (int t = 0; t < n; ++t) {
    double w = 1.0;
    for (int k = t; k < n; ++k) {
      adv[t] += w * delta[k];
      if (d[k] > 0.5) break;
      w *= g * l;
    }
  }
  return adv;
}

PolicyConfig tiny_policy() {
  PolicyConfig p;
  p.actor_hidden = {6, 5};
  p.critic_hidden = {5};
  p.aux_hidden = {4};
  p.init_std = 0.7;
  return p;
}

// Two samples with random content; aux targets always present.
Batch synthetic_batch(const ActorCritic& ac, int aux_dim, Rng& rng, int n = 2) {
  Batch b;
  b.resize(n, ac.actor_input_size(), ac.critic_input_size(), ac.action_dim(), aux_dim, 0);
  for (double& x : b.actor_obs) x = standard_normal(rng);
  for (double& x : b.critic_obs) x = standard_normal(rng);
  for (double& x : b.actions) x = standard_normal(rng);
  for (double& x : b.aux_targets) x = standard_normal(rng);
  for (int i = 0; i < n; ++i) {
    b.log_probs[i] = -3.0 + 0.5 * standard_normal(rng);
    b.advantages[i] = standard_normal(rng);
    b.returns[i] = standard_normal(rng);
  }
  return b;
}

// Teacher and student objectives assembled term by term from forward passes only.
double hand_total(ActorCritic& ac, const Batch& b, const LossCoefs& c, double eps, double disc) {
  const int J = b.action_dim;
  double surr = 0.0, val = 0.0, aux = 0.0;
  for (int i = 0; i < b.size; ++i) {
    Vec mean(J);
    ActorTape tape;
    ac.actor_mean(std::span<const double>(b.actor_obs).subspan(i * b.actor_dim, b.actor_dim), mean,
                  tape);
    double lp = 0.0;
    for (int j = 0; j < J; ++j) {
      const double s = std::exp(ac.dist.log_std[j]);
      const double z = (b.actions[i * J + j] - mean[j]) / s;
      lp += -0.5 * z * z - std::log(s) - 0.5 * std::log(2.0 * M_PI);
    }
    const double r = std::exp(lp - b.log_probs[i]);
    const double a = b.advantages[i];
    surr += std::min(r * a, std::clamp(r, 1.0 - eps, 1.0 + eps) * a);
    if (c.aux != 0.0 || b.aux_dim > 0) {
      const auto p = ac.aux_predict(tape);
      for (int d = 0; d < b.aux_dim; ++d) {
        const double e = p[d] - b.aux_targets[i * b.aux_dim + d];
        aux += e * e;
      }
    }
    nn::Tape vt;
    const double v =
        ac.value(std::span<const double>(b.critic_obs).subspan(i * b.critic_dim, b.critic_dim), vt);
    val += (v - b.returns[i]) * (v - b.returns[i]);
  }
  double ent = 0.0;
  for (double ls : ac.dist.log_std) ent += ls + 0.5 * std::log(2.0 * M_PI * M_E);
  const double n = b.size;
  return -surr / n + c.value * val / n - c.entropy * ent + c.aux * aux / n + c.disc * disc;
}

std::vector<double> flat_params(ActorCritic& ac) {
  std::vector<double> out;
  for (auto& blk : ac.policy_blocks()) out.insert(out.end(), blk.value.begin(), blk.value.end());
  return out;
}

std::vector<double> flat_params_of(std::vector<nn::ParamBlock> blocks) {
  std::vector<double> out;
  for (auto& blk : blocks) out.insert(out.end(), blk.value.begin(), blk.value.end());
  return out;
}

}  // namespace

TEST_CASE("gae terminal single step") {
  const Vec r{1.0}, v{0.0}, d{1.0};
  const auto g = compute_gae(r, v, d, 5.0, 0.99, 0.95);
  CHECK(g.advantages[0] == doctest::Approx(1.0));
  CHECK(g.returns[0] == doctest::Approx(1.0));
}

TEST_CASE("gae with gamma zero is reward minus value") {
  const Vec r{1.0, -2.0, 0.5}, v{0.3, 0.1, -0.4}, d{0.0, 0.0, 0.0};
  const auto g = compute_gae(r, v, d, 7.0, 0.0, 0.95);
  for (int t = 0; t < 3; ++t) CHECK(g.advantages[t] == doctest::Approx(r[t] - v[t]).epsilon(1e-15));
}

TEST_CASE("gae matches the exhaustive double sum") {
  Rng rng(11);
  const Vec r{0.5, -1.0, 2.0, 0.3, 1.1}, v{0.2, 0.4, -0.3, 0.9, 0.0}, d{0, 0, 0, 0, 0};
  const auto g = compute_gae(r, v, d, 0.7, 0.9, 0.8);
  const Vec oracle = brute_force_gae(r, v, d, 0.7, 0.9, 0.8);
  for (int t = 0; t < 5; ++t) {
    CHECK(std::abs(g.advantages[t] - oracle[t]) < 1e-12);
    CHECK(std::abs(g.returns[t] - (oracle[t] + v[t])) < 1e-12);
  }
  for (int trial = 0; trial < 300; ++trial) {
    const int n = uniform_int(rng, 1, 32);
    Vec rr(n), vv(n), dd(n);
    for (int t = 0; t < n; ++t) {
      rr[t] = standard_normal(rng);
      vv[t] = standard_normal(rng);
      dd[t] = uniform(rng, 0.0, 1.0) < 0.15 ? 1.0 : 0.0;
    }
    const double boot = standard_normal(rng);
    const double gm = uniform(rng, 0.0, 1.0), lm = uniform(rng, 0.0, 1.0);
    const auto res = compute_gae(rr, vv, dd, boot, gm, lm);
    const Vec o = brute_force_gae(rr, vv, dd, boot, gm, lm);
    for (int t = 0; t < n; ++t) REQUIRE(std::abs(res.advantages[t] - o[t]) < 1e-12);
  }
}

TEST_CASE("gae rejects mismatched lengths") {
  const Vec r{1.0, 2.0}, v{0.0}, d{0.0, 0.0};
  CHECK_THROWS_AS(compute_gae(r, v, d, 0.0, 0.9, 0.9), Error);
}

TEST_CASE("advantage normalization") {
  Rng rng(3);
  Vec a(500);
  for (double& x : a) x = 3.0 + 2.0 * standard_normal(rng);
  normalize_advantages(a);
  const double mean = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  double var = 0.0;
  for (double x : a) var += (x - mean) * (x - mean);
  CHECK(std::abs(mean) < 1e-9);
  CHECK(std::abs(std::sqrt(var / a.size()) - 1.0) < 1e-6);
}

TEST_CASE("clipped surrogate arithmetic") {
  CHECK(clipped_surrogate(2.0, 1.0, 0.1) == doctest::Approx(1.1));
  CHECK(clipped_surrogate(0.5, -1.0, 0.1) == doctest::Approx(-0.9));
  CHECK(clipped_surrogate(1.05, 1.0, 0.1) == doctest::Approx(1.05));
  CHECK(clipped_surrogate_grad(2.0, 1.0, 0.1) == 0.0);
  CHECK(clipped_surrogate_grad(1.05, 3.0, 0.1) == 3.0);
  const Vec lp{-1.0, -2.0, -0.5}, adv{0.4, -1.0, 2.0};
  CHECK(ppo_clip_loss(lp, lp, adv, 0.1) == doctest::Approx(-(0.4 - 1.0 + 2.0) / 3.0));
}

TEST_CASE("value loss and kl") {
  const Vec v{1.0, 2.0, -1.0, 0.5}, r{2.0, 3.0, 0.0, 1.5};
  CHECK(value_loss(v, v) == 0.0);
  CHECK(value_loss(v, r) == doctest::Approx(1.0));
  const Vec r2{0.3, 2.5, -2.0, 0.0};
  CHECK(value_loss(v, r2) == doctest::Approx((0.49 + 0.25 + 1.0 + 0.25) / 4.0));
  const Vec a{-1.0, -0.3}, b{-1.2, -0.1};
  CHECK(approx_kl(a, a) == 0.0);
  CHECK(approx_kl(a, b) >= 0.0);
  const Vec lo{0.0, 0.0}, hi{0.5, 0.01};
  CHECK(clip_fraction(hi, lo, 0.1) == doctest::Approx(0.5));
}

TEST_CASE("kl adaptive learning rate") {
  LrSchedule s;
  CHECK(adapt_learning_rate(1e-3, 0.05, s) == doctest::Approx(1e-3 / 1.5));
  CHECK(adapt_learning_rate(1e-3, 0.002, s) == doctest::Approx(1.5e-3));
  CHECK(adapt_learning_rate(1e-3, 0.01, s) == 1e-3);
  CHECK(adapt_learning_rate(1e-2, 0.0, s) == 1e-2);
  CHECK(adapt_learning_rate(1e-5, 1.0, s) == 1e-5);
  s.adaptive = false;
  CHECK(adapt_learning_rate(1e-3, 0.5, s) == 1e-3);
}

TEST_CASE("ppo config validation") {
  PpoConfig c;
  CHECK_NOTHROW(c.validate());
  c.clip = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = PpoConfig{};
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("teacher loss equals term-by-term assembly") {
  Rng rng(21);
  ActorCritic ac(7, 5, 3, 0, tiny_policy(), rng);
  for (double& x : ac.head.parameters()) x += 0.1 * standard_normal(rng);
  Batch b = synthetic_batch(ac, 0, rng);
  LossCoefs c;
  c.entropy = 0.01;
  const std::vector<int> idx{0, 1};
  const LossTerms t = minibatch_loss(ac, b, idx, c, 0.1, false);
  CHECK(std::abs(t.total - hand_total(ac, b, c, 0.1, 0.0)) < 1e-10);
  CHECK(std::abs(t.total - (t.surrogate + t.value - 0.01 * t.entropy)) < 1e-12);

  LossCoefs no_ent = c;
  no_ent.entropy = 0.0;
  const LossTerms t0 = minibatch_loss(ac, b, idx, no_ent, 0.1, false);
  CHECK(t0.total == doctest::Approx(t0.surrogate + t0.value).epsilon(1e-14));
}

TEST_CASE("student loss equals term-by-term assembly") {
  Rng rng(22);
  ActorCritic ac(7, 5, 3, 4, tiny_policy(), rng);
  Batch b = synthetic_batch(ac, 4, rng);
  LossCoefs c;
  c.aux = 0.1;
  c.disc = 0.05;
  const std::vector<int> idx{0, 1};
  const double disc = 1.234;
  const LossTerms t = minibatch_loss(ac, b, idx, c, 0.1, false, disc);
  CHECK(std::abs(t.total - hand_total(ac, b, c, 0.1, disc)) < 1e-10);
}

TEST_CASE("entropy lowers the total loss") {
  Rng rng(23);
  ActorCritic ac(7, 5, 3, 0, tiny_policy(), rng);
  Batch b = synthetic_batch(ac, 0, rng);
  LossCoefs c;
  const std::vector<int> idx{0, 1};
  // hold the surrogate fixed by zeroing advantages
  std::fill(b.advantages.begin(), b.advantages.end(), 0.0);
  const double before = minibatch_loss(ac, b, idx, c, 0.1, false).total;
  for (double& ls : ac.dist.log_std) ls += 0.1;
  const double after = minibatch_loss(ac, b, idx, c, 0.1, false).total;
  CHECK(after < before);
}

TEST_CASE("loss gradient matches finite differences") {
  Rng rng(24);
  ActorCritic ac(7, 5, 3, 4, tiny_policy(), rng);
  for (double& x : ac.head.parameters()) x += 0.2 * standard_normal(rng);
  Batch b = synthetic_batch(ac, 4, rng, 3);
  // keep every ratio on the unclipped branch
  for (int i = 0; i < b.size; ++i) {
    Vec mean(3);
    ActorTape tape;
    ac.actor_mean(std::span<const double>(b.actor_obs).subspan(i * 7, 7), mean, tape);
    b.log_probs[i] = nn::gaussian_log_prob(
        mean, ac.dist.log_std, std::span<const double>(b.actions).subspan(i * 3, 3));
  }
  LossCoefs c;
  c.aux = 0.3;
  c.entropy = 0.02;
  const std::vector<int> idx{0, 1, 2};
  ac.zero_grad();
  minibatch_loss(ac, b, idx, c, 0.2, true);
  auto blocks = ac.policy_blocks();
  auto aux = ac.aux_blocks();
  blocks.insert(blocks.end(), aux.begin(), aux.end());
  const double h = 1e-6;
  for (auto& blk : blocks) {
    for (std::size_t k = 0; k < blk.value.size(); k += 3) {
      const double keep = blk.value[k];
      blk.value[k] = keep + h;
      const double up = minibatch_loss(ac, b, idx, c, 0.2, false).total;
      blk.value[k] = keep - h;
      const double dn = minibatch_loss(ac, b, idx, c, 0.2, false).total;
      blk.value[k] = keep;
      const double fd = (up - dn) / (2 * h);
      CHECK(std::abs(fd - blk.grad[k]) <= 1e-6 + 1e-4 * std::abs(fd));
    }
  }
}

TEST_CASE("zero advantages move the policy only through entropy") {
  Rng rng(25);
  ActorCritic ac(7, 5, 3, 0, tiny_policy(), rng);
  Batch b = synthetic_batch(ac, 0, rng, 4);
  std::fill(b.advantages.begin(), b.advantages.end(), 0.0);
  LossCoefs c;
  ac.zero_grad();
  minibatch_loss(ac, b, std::vector<int>{0, 1, 2, 3}, c, 0.1, true);
  for (double g : ac.trunk.gradients()) CHECK(g == 0.0);
  for (double g : ac.head.gradients()) CHECK(g == 0.0);
  for (double g : ac.dist.log_std_grad) CHECK(g == doctest::Approx(-c.entropy));
}

TEST_CASE("aux head shares the actor trunk") {
  Rng rng(26);
  ActorCritic ac(7, 5, 3, 4, tiny_policy(), rng);
  Vec x(7);
  for (double& v : x) v = standard_normal(rng);
  Vec m0(3), m1(3);
  ActorTape tape;
  ac.actor_mean(x, m0, tape);
  const auto a0 = ac.aux_predict(tape);
  const Vec aux0(a0.begin(), a0.end());
  ac.trunk.parameters()[0] += 0.5;
  ac.actor_mean(x, m1, tape);
  const auto a1 = ac.aux_predict(tape);
  CHECK(m0 != m1);
  CHECK(aux0 != Vec(a1.begin(), a1.end()));
}

TEST_CASE("dropping the aux trunk gradient reproduces lambda_aux = 0") {
  Rng rng(27);
  ActorCritic base(7, 5, 3, 4, tiny_policy(), rng);
  Batch b = synthetic_batch(base, 4, rng, 12);
  PpoConfig cfg;
  cfg.minibatches = 3;
  cfg.schedule.adaptive = false;
  auto run = [&](double aux, bool to_trunk) {
    ActorCritic ac = base;
    nn::Adam opt(nn::AdamConfig{1e-3});
    Rng r(5);
    LossCoefs c;
    c.aux = aux;
    c.aux_to_trunk = to_trunk;
    policy_update(ac, opt, b, cfg, c, r);
    return ac;
  };
  ActorCritic without = run(0.0, true);
  ActorCritic dropped = run(0.1, false);
  ActorCritic shared = run(0.1, true);
  CHECK(flat_params(without) == flat_params(dropped));
  CHECK(flat_params(without) != flat_params(shared));
}

TEST_CASE("policy update is deterministic and adapts the rate") {
  Rng rng(28);
  ActorCritic base(7, 5, 3, 0, tiny_policy(), rng);
  Batch b = synthetic_batch(base, 0, rng, 12);
  PpoConfig cfg;
  auto run = [&] {
    ActorCritic ac = base;
    nn::Adam opt(nn::AdamConfig{1e-3});
    Rng r(9);
    const UpdateStats st = teacher_update(ac, opt, b, cfg, r);
    return std::make_pair(flat_params(ac), st.learning_rate);
  };
  const auto a = run();
  const auto c = run();
  CHECK(a.first == c.first);
  CHECK(a.second == c.second);
  CHECK(a.first != flat_params(base));
}

TEST_CASE("non-finite loss aborts the update") {
  Rng rng(29);
  ActorCritic ac(7, 5, 3, 0, tiny_policy(), rng);
  Batch b = synthetic_batch(ac, 0, rng, 6);
  b.returns[2] = std::nan("");
  const auto before = flat_params(ac);
  nn::Adam opt(nn::AdamConfig{1e-3});
  Rng r(1);
  PpoConfig cfg;
  cfg.minibatches = 1;
  const UpdateStats st = teacher_update(ac, opt, b, cfg, r);
  CHECK(st.aborted);
  CHECK(flat_params(ac) == before);
}

TEST_CASE("actor critic checkpoint round trip") {
  Rng rng(30);
  ActorCritic ac(7, 5, 3, 4, tiny_policy(), rng);
  ObsNormalizer norm(3, 2);
  Vec p{1, 2, 3, 4, 5, 6}, v{1, 0, 2, 1};
  norm.update(p, v, 2);
  nn::Checkpoint ck;
  ac.save(ck);
  save_normalizer(ck, norm);
  const nn::Checkpoint back = nn::Checkpoint::parse(ck.serialize(), nn::kCheckpointMagic);
  ActorCritic ac2 = ActorCritic::load(back);
  CHECK(flat_params(ac2) == flat_params(ac));
  CHECK(flat_params_of(ac2.aux_blocks()) == flat_params_of(ac.aux_blocks()));
  const ObsNormalizer n2 = load_normalizer(back);
  Vec a{1.5, 2.5, 3.5}, b2 = a;
  norm.apply_proprio(a);
  n2.apply_proprio(b2);
  CHECK(a == b2);
}

TEST_CASE("collector fills the batch and bootstraps timeouts") {
  env::DoubleIntegratorConfig dc;
  dc.task_weight = 1.0;
  dc.episode_steps = 5;
  env::DoubleIntegratorFactory f(dc);
  env::VecEnv envs(f, 3, 4);
  obs::StackConfig sc{4, 2, 3};
  ObsNormalizer norm(3, 2);
  Rng rng(31);
  ActorCritic ac(actor_input_size(ActorInput::ProprioAndPrivileged, sc, 3, 2),
                 critic_input_size(sc, 3, 2), 1, 0, tiny_policy(), rng);
  Collector col(envs, sc, ActorInput::ProprioAndPrivileged, norm);
  col.reset_all();
  PpoConfig cfg;
  cfg.horizon = 7;
  Batch b;
  const RolloutStats rs = col.collect(ac, b, cfg);
  CHECK(b.size == 21);
  CHECK(b.actor_dim == 4 * 3 + 2 * 2);
  CHECK(b.critic_dim == 2 * 5);
  CHECK(rs.episodes == 3);
  int done = 0;
  for (double d : b.dones) done += d > 0.5;
  CHECK(done == 3);
  for (int e = 0; e < 3; ++e) CHECK(b.dones[4 * 3 + e] == 1.0);
  double mean = 0.0;
  for (double a : b.advantages) mean += a;
  CHECK(std::abs(mean / b.size) < 1e-9);
}

TEST_CASE("proprio-only actor input has no privileged content") {
  obs::StackConfig sc;
  CHECK(actor_input_size(ActorInput::ProprioOnly, sc, 29, 73) == 15 * 29);
  CHECK(actor_input_size(ActorInput::ProprioAndPrivileged, sc, 29, 73) == 15 * 29 + 3 * 73);
  CHECK(critic_input_size(sc, 29, 73) == 3 * (29 + 73));
}
