#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "walkprior/distill/discriminator.hpp"
#include "walkprior/distill/student.hpp"
#include "walkprior/distill/trainer.hpp"
#include "walkprior/env/double_integrator.hpp"

using namespace wp;
using namespace wp::distill;

namespace {

nn::MlpNet random_net(std::vector<int> sizes, Rng& rng) {
  nn::MlpNet net(std::move(sizes));
  for (double& p : net.parameters()) p = 0.5 * standard_normal(rng);
  return net;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("walkprior_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("prediction loss at maximum confusion") {
  const Vec zt{0.0, 0.0, 0.0}, zs{0.0, 0.0};
  CHECK(std::abs(disc_pred_loss(zt, zs) - 2.0 * std::log(2.0)) < 1e-12);
}

TEST_CASE("prediction loss examples and stability") {
  const Vec t{1.0}, s{-1.0};
  const double direct = -std::log(1.0 / (1.0 + std::exp(-1.0))) -
                        std::log(1.0 - 1.0 / (1.0 + std::exp(1.0)));
  CHECK(disc_pred_loss(t, s) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(disc_pred_loss(t, s) == doctest::Approx(0.6265).epsilon(1e-4));
  const Vec big_t{100.0}, big_s{-100.0};
  CHECK(disc_pred_loss(big_t, big_s) < 1e-40);
  const Vec bad_t{-100.0}, bad_s{100.0};
  CHECK(std::isfinite(disc_pred_loss(bad_t, bad_s)));
  CHECK(disc_pred_loss(bad_t, bad_s) == doctest::Approx(200.0));
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Vec a{20.0 * standard_normal(rng)}, b{20.0 * standard_normal(rng)};
    CHECK(disc_pred_loss(a, b) >= 0.0);
  }
}

TEST_CASE("sigmoid stays inside the open unit interval") {
  for (double x : {-30.0, -5.0, 0.0, 3.0, 30.0}) {
    CHECK(sigmoid(x) > 0.0);
    CHECK(sigmoid(x) < 1.0);
  }
  CHECK(sigmoid(0.0) == 0.5);
}

TEST_CASE("gradient penalty of a linear discriminator is |w|^2") {
  nn::MlpNet net({4, 1});
  const Vec w{0.3, -1.2, 2.0, 0.7};
  std::copy(w.begin(), w.end(), net.weights(0).begin());
  net.biases(0)[0] = 0.4;
  Rng rng(2);
  Vec x(4 * 5);
  for (double& v : x) v = standard_normal(rng);
  const double expect = 0.09 + 1.44 + 4.0 + 0.49;
  CHECK(std::abs(disc_gradient_penalty(net, x, 5) - expect) < 1e-10);
}

TEST_CASE("gradient penalty vanishes with zero first-layer weights") {
  Rng rng(3);
  nn::MlpNet net = random_net({5, 6, 1}, rng);
  for (double& v : net.weights(0)) v = 0.0;
  Vec x(5 * 4);
  for (double& v : x) v = standard_normal(rng);
  CHECK(disc_gradient_penalty(net, x, 4) == 0.0);
}

TEST_CASE("gradient penalty matches finite-difference input gradients") {
  Rng rng(4);
  nn::MlpNet net = random_net({5, 7, 6, 1}, rng);
  Vec x(5 * 3);
  for (double& v : x) v = standard_normal(rng);
  double oracle = 0.0;
  const double h = 1e-6;
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 5; ++k) {
      Vec up(x.begin() + r * 5, x.begin() + r * 5 + 5), dn = up;
      up[k] += h;
      dn[k] -= h;
      nn::Tape t;
      const double fu = net.forward(up, t)[0];
      const double fd = net.forward(dn, t)[0];
      const double g = (fu - fd) / (2 * h);
      oracle += g * g;
    }
  }
  oracle /= 3;
  const double pen = disc_gradient_penalty(net, x, 3);
  CHECK(std::abs(pen - oracle) <= 1e-4 * std::abs(oracle));
}

TEST_CASE("weight decay counts weights only") {
  nn::MlpNet net({2, 1});
  CHECK(disc_weight_decay(net) == 0.0);
  net.weights(0)[0] = 3.0;
  net.biases(0)[0] = 5.0;
  CHECK(disc_weight_decay(net) == 9.0);
  Rng rng(5);
  nn::MlpNet r = random_net({4, 5, 3, 1}, rng);
  double direct = 0.0;
  for (int l = 0; l < r.num_layers(); ++l) {
    for (double w : r.weights(l)) direct += w * w;
  }
  CHECK(disc_weight_decay(r) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("disc loss assembles each term once") {
  Rng rng(6);
  nn::MlpNet net = random_net({3, 4, 1}, rng);
  const Vec teacher{0.1, -0.4, 1.0, 0.5, 0.2, -0.3};
  const Vec student{-1.0, 0.3, 0.0, 0.9, -0.6, 0.4};
  DiscConfig cfg;
  const DiscStats st = disc_loss(net, teacher, student, 2, cfg, false);
  Vec lt, ls;
  Vec both(teacher);
  both.insert(both.end(), student.begin(), student.end());
  for (int r = 0; r < 2; ++r) {
    nn::Tape t;
    lt.push_back(net.forward(std::span<const double>(teacher).subspan(r * 3, 3), t)[0]);
    ls.push_back(net.forward(std::span<const double>(student).subspan(r * 3, 3), t)[0]);
  }
  const double pred = disc_pred_loss(lt, ls);
  const double grad = disc_gradient_penalty(net, both, 4);
  const double weight = disc_weight_decay(net);
  CHECK(std::abs(st.pred - pred) < 1e-12);
  CHECK(std::abs(st.grad - grad) < 1e-12);
  CHECK(std::abs(st.weight - weight) < 1e-12);
  CHECK(std::abs(st.total - (0.5 * pred + 0.05 * grad + 0.5 * weight)) < 1e-10);

  DiscConfig only_pred = cfg;
  only_pred.grad_coef = 0.0;
  only_pred.weight_coef = 0.0;
  CHECK(disc_loss(net, teacher, student, 2, only_pred, false).total ==
        doctest::Approx(0.5 * pred).epsilon(1e-14));
}

TEST_CASE("disc loss gradient matches finite differences") {
  Rng rng(7);
  nn::MlpNet net = random_net({3, 5, 1}, rng);
  Vec teacher(3 * 4), student(3 * 4);
  for (double& v : teacher) v = standard_normal(rng);
  for (double& v : student) v = standard_normal(rng);
  DiscConfig cfg;
  net.zero_grad();
  disc_loss(net, teacher, student, 4, cfg, true);
  const Vec analytic(net.gradients().begin(), net.gradients().end());
  const double h = 1e-6;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double keep = net.parameters()[k];
    net.parameters()[k] = keep + h;
    const double up = disc_loss(net, teacher, student, 4, cfg, false).total;
    net.parameters()[k] = keep - h;
    const double dn = disc_loss(net, teacher, student, 4, cfg, false).total;
    net.parameters()[k] = keep;
    const double fd = (up - dn) / (2 * h);
    CHECK(std::abs(fd - analytic[k]) <= 1e-6 + 1e-4 * std::abs(fd));
  }
}

TEST_CASE("disc update requires balanced batches") {
  Rng rng(8);
  Discriminator d(2, 1, {4}, rng);
  nn::Adam opt(nn::AdamConfig{1e-3});
  const Vec t(3 * 3, 0.1), s(3 * 2, 0.2);
  CHECK_THROWS_AS(disc_update(d, opt, t, s, 3, 2, DiscConfig{}, rng), Error);
}

TEST_CASE("disc update separates distinct samples") {
  Rng rng(9);
  Discriminator d(2, 1, {16, 8}, rng);
  nn::Adam opt(nn::AdamConfig{1e-3});
  const int n = 64;
  Vec t(n * 3), s(n * 3);
  for (int i = 0; i < n; ++i) {
    const double a = standard_normal(rng), b = standard_normal(rng);
    t[i * 3] = s[i * 3] = a;
    t[i * 3 + 1] = s[i * 3 + 1] = b;
    t[i * 3 + 2] = -a - b;
    s[i * 3 + 2] = -a - b + 1.5;
  }
  DiscConfig cfg;
  cfg.weight_coef = 1e-3;
  DiscStats first, last;
  for (int k = 0; k < 30; ++k) {
    last = disc_update(d, opt, t, s, n, n, cfg, rng);
    if (k == 0) first = last;
  }
  CHECK(last.pred < first.pred);
  CHECK(last.prob_teacher > 0.6);
  CHECK(last.prob_student < 0.4);
}

TEST_CASE("zero discriminator gives the constant log 2 reward") {
  Rng rng(10);
  Discriminator d(3, 1, {4}, rng);
  for (double& p : d.net.parameters()) p = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Vec s{standard_normal(rng), standard_normal(rng), standard_normal(rng)};
    const Vec a{standard_normal(rng)};
    CHECK(reward::disc_reward(-d.logit(s, a)) == doctest::Approx(std::log(2.0)));
    CHECK(d.prob(s, a) == 0.5);
  }
}

TEST_CASE("aux loss") {
  const Vec p(48 * 2, 1.0);
  CHECK(aux_loss(p, p, 2) == 0.0);
  const Vec t(48 * 2, 0.0);
  CHECK(aux_loss(p, t, 2) == 48.0);
  Rng rng(11);
  Vec a(5 * 7), b(5 * 7);
  for (double& v : a) v = standard_normal(rng);
  for (double& v : b) v = standard_normal(rng);
  double direct = 0.0;
  for (int r = 0; r < 7; ++r) {
    double e = 0.0;
    for (int k = 0; k < 5; ++k) e += (a[r * 5 + k] - b[r * 5 + k]) * (a[r * 5 + k] - b[r * 5 + k]);
    direct += e;
  }
  CHECK(aux_loss(a, b, 7) == doctest::Approx(direct / 7).epsilon(1e-14));
  CHECK_THROWS_AS(aux_loss(a, Vec(3), 7), Error);
}

TEST_CASE("student update without aux and disc is the teacher update") {
  Rng rng(12);
  ppo::PolicyConfig pc;
  pc.actor_hidden = {6, 5};
  pc.critic_hidden = {5};
  pc.aux_hidden = {4};
  ppo::ActorCritic base(6, 4, 2, 3, pc, rng);
  ppo::Batch b;
  b.resize(12, 6, 4, 2, 3, 0);
  for (double& x : b.actor_obs) x = standard_normal(rng);
  for (double& x : b.critic_obs) x = standard_normal(rng);
  for (double& x : b.actions) x = standard_normal(rng);
  for (double& x : b.aux_targets) x = standard_normal(rng);
  for (int i = 0; i < 12; ++i) {
    b.log_probs[i] = -2.5;
    b.advantages[i] = standard_normal(rng);
    b.returns[i] = standard_normal(rng);
  }
  ppo::PpoConfig cfg;
  cfg.schedule.adaptive = false;
  ppo::ActorCritic a = base, c = base;
  nn::Adam oa(nn::AdamConfig{1e-3}), oc(nn::AdamConfig{1e-3});
  Rng ra(3), rc(3);
  ppo::teacher_update(a, oa, b, cfg, ra);
  student_update(c, oc, b, cfg, StudentCoefs{0.0, 0.0}, rc, 0.7);
  auto flat = [](ppo::ActorCritic& ac) {
    Vec out;
    for (auto& blk : ac.policy_blocks()) out.insert(out.end(), blk.value.begin(), blk.value.end());
    return out;
  };
  CHECK(flat(a) == flat(c));
}

TEST_CASE("scripted teacher is deterministic") {
  env::DoubleIntegratorEnv e(env::DoubleIntegratorConfig{});
  Rng rng(13);
  e.reset(rng);
  obs::FrameStack st(obs::StackConfig{}, 3, 2);
  ScriptedTeacher t;
  CHECK(t.act(e, st) == t.act(e, st));
  CHECK(t.act(e, st)[0] == doctest::Approx(-e.position() - 1.5 * e.velocity()));
}

TEST_CASE("checkpoint teacher matches a direct forward pass and stays frozen") {
  env::DoubleIntegratorConfig dc;
  dc.task_weight = 1.0;
  env::DoubleIntegratorFactory f(dc);
  const auto dir = scratch_dir("teacher");
  ppo::TrainOptions o;
  o.num_envs = 2;
  o.iterations = 1;
  o.seed = 4;
  o.out_dir = dir.string();
  o.stacks = {4, 2, 3};
  o.policy.actor_hidden = {8};
  o.policy.critic_hidden = {8};
  o.ppo.horizon = 8;
  const auto tr = ppo::train_teacher(f, o);
  const env::EnvSpec spec = env::DoubleIntegratorEnv(dc).spec();
  const auto teacher = CheckpointTeacher::load(tr.checkpoint_path, spec, o.stacks);

  env::DoubleIntegratorEnv e(dc);
  Rng rng(14);
  e.reset(rng);
  obs::FrameStack st(o.stacks, 3, 2);
  st.reset(e.noisy_proprio(rng), e.frame().privileged, e.frame().state());
  Vec x = ppo::make_actor_input(st, ppo::ActorInput::ProprioAndPrivileged, tr.norm, true);
  Vec direct(1);
  ppo::ActorTape tape;
  tr.policy.actor_mean(x, direct, tape);
  CHECK(teacher.act(e, st) == direct);
  CHECK(teacher.act(e, st) == teacher.act(e, st));

  const std::string before = [&] {
    nn::Checkpoint ck;
    teacher.policy().save(ck);
    return ck.serialize();
  }();
  StudentOptions so;
  so.train = o;
  so.train.out_dir.clear();
  so.train.policy.aux_hidden = {4};
  train_student(env::DoubleIntegratorFactory(env::DoubleIntegratorConfig{}), teacher, so);
  nn::Checkpoint after_ck;
  teacher.policy().save(after_ck);
  CHECK(after_ck.serialize() == before);

  o.stacks = {5, 2, 3};
  CHECK_THROWS_AS(CheckpointTeacher::load(tr.checkpoint_path, spec, o.stacks), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("student run writes an actor-only deployment export") {
  const auto dir = scratch_dir("student");
  StudentOptions so;
  so.train.num_envs = 2;
  so.train.iterations = 2;
  so.train.seed = 5;
  so.train.out_dir = dir.string();
  so.train.stacks = {4, 2, 3};
  so.train.policy.actor_hidden = {8};
  so.train.policy.critic_hidden = {8};
  so.train.policy.aux_hidden = {4};
  so.train.ppo.horizon = 10;
  so.disc.hidden = {6};
  ScriptedTeacher t;
  const auto res = train_student(env::DoubleIntegratorFactory(env::DoubleIntegratorConfig{}), t, so);
  CHECK(res.policy.actor_input_size() == 4 * 3);
  CHECK(res.history.size() == 2);

  const auto dep = nn::Checkpoint::load(res.deploy_path, nn::kDeployMagic);
  CHECK_FALSE(dep.has("critic"));
  CHECK_FALSE(dep.has("aux_head"));
  CHECK_FALSE(dep.has("discriminator"));
  CHECK_THROWS_AS(nn::Checkpoint::load(res.deploy_path, nn::kCheckpointMagic), Error);
  const DeployedPolicy pol = DeployedPolicy::parse(dep);
  CHECK(pol.frames() == 4);
  CHECK(pol.proprio_dim() == 3);
  Vec x(12, 0.3);
  Vec direct = x;
  res.norm.apply_proprio(direct);
  Vec mean(1);
  ppo::ActorTape tape;
  res.policy.actor_mean(direct, mean, tape);
  CHECK(pol.act(x) == mean);
  CHECK_THROWS_AS(pol.act(Vec(5, 0.0)), Error);

  std::ifstream csv(res.metrics_path);
  std::string comment, header;
  std::getline(csv, comment);
  std::getline(csv, header);
  CHECK(comment.rfind("# walkprior metrics v1", 0) == 0);
  CHECK(header.find("disc_prob_student") != std::string::npos);
  CHECK(header.find("loss_aux") != std::string::npos);
  std::filesystem::remove_all(dir);
}
