#include "walkprior/distill/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

namespace wp::distill {

namespace {

// Rows of (stacked state, action) discriminator inputs.
Vec disc_inputs(const ppo::Batch& b, const Vec& actions) {
  const int w = b.disc_dim + b.action_dim;
  Vec out(static_cast<std::size_t>(b.size) * w);
  for (int i = 0; i < b.size; ++i) {
    double* dst = out.data() + static_cast<std::size_t>(i) * w;
    std::copy_n(b.disc_states.data() + static_cast<std::size_t>(i) * b.disc_dim, b.disc_dim, dst);
    std::copy_n(actions.data() + static_cast<std::size_t>(i) * b.action_dim, b.action_dim,
                dst + b.disc_dim);
  }
  return out;
}

double mean_action_distance(const ppo::Batch& b) {
  double sum = 0.0;
  for (int i = 0; i < b.size; ++i) {
    double d2 = 0.0;
    for (int j = 0; j < b.action_dim; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * b.action_dim + j;
      d2 += (b.mean_actions[k] - b.teacher_actions[k]) * (b.mean_actions[k] - b.teacher_actions[k]);
    }
    sum += std::sqrt(d2);
  }
  return sum / b.size;
}

}  // namespace

StudentResult train_student(const env::EnvFactory& factory, const TeacherOracle& teacher,
                            const StudentOptions& opts) {
  const ppo::TrainOptions& o = opts.train;
  o.ppo.validate();
  if (o.iterations < 1) throw Error("train_student: iterations must be >= 1");
  env::VecEnv envs(factory, o.num_envs, o.seed);
  const env::EnvSpec spec = envs.spec();
  Rng init_rng = make_stream(o.seed, 2000001);
  Rng update_rng = make_stream(o.seed, 2000002);
  Rng disc_rng = make_stream(o.seed, 2000003);

  StudentResult res;
  res.norm = ppo::ObsNormalizer(spec.proprio_dim, spec.privileged_dim);
  if (opts.init_normalizer_from_teacher && teacher.normalizer()) {
    res.norm = *teacher.normalizer();
    res.norm.frozen = false;
  }
  res.policy = ppo::ActorCritic(
      ppo::actor_input_size(ppo::ActorInput::ProprioOnly, o.stacks, spec.proprio_dim,
                            spec.privileged_dim),
      ppo::critic_input_size(o.stacks, spec.proprio_dim, spec.privileged_dim), spec.action_dim,
      spec.aux_dim, o.policy, init_rng);
  res.disc = Discriminator(o.stacks.state_frames * spec.state_dim(), spec.action_dim,
                           opts.disc.hidden, init_rng);

  ppo::PpoConfig pcfg = o.ppo;
  pcfg.schedule.adaptive = false;
  nn::Adam opt(nn::AdamConfig{pcfg.learning_rate});
  nn::Adam disc_opt(nn::AdamConfig{opts.disc.learning_rate});

  for (auto& e : envs.envs) {
    e->set_phase(reward::Phase::Student);
    e->set_command_limit(o.command.initial);
  }
  ppo::Collector col(envs, o.stacks, ppo::ActorInput::ProprioOnly, res.norm);
  col.reset_all();

  ppo::StudentHooks hooks;
  hooks.teacher = [&](int, const env::Env& env, const obs::FrameStack& stack) {
    return teacher.act(env, stack);
  };
  // The reward reads the "student-generated" logit, the negated teacher logit.
  hooks.disc_logit = [&](std::span<const double> state, std::span<const double> action) {
    return -res.disc.logit(state, action);
  };

  std::unique_ptr<ppo::MetricsWriter> writer;
  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    res.metrics_path = o.out_dir + "/student_metrics.csv";
    writer = std::make_unique<ppo::MetricsWriter>(res.metrics_path, true, o.config_hash, o.seed);
  }
  auto save = [&](const std::string& path) {
    nn::Checkpoint ck = ppo::make_checkpoint(res.policy, res.norm, &opt, "student", o.stacks, spec,
                                             o.config_hash, o.seed, o.config_text);
    ck.add_mlp("discriminator", res.disc.net);
    ck.add_adam("disc_optimizer", disc_opt);
    ck.save(path);
  };

  ppo::Batch batch;
  for (int it = 1; it <= o.iterations; ++it) {
    ppo::RolloutStats rs = col.collect(res.policy, batch, pcfg, &hooks);
    ppo::IterationMetrics m;
    m.iteration = it;
    m.action_distance = mean_action_distance(batch);

    const Vec teacher_in = disc_inputs(batch, batch.teacher_actions);
    const Vec student_in = disc_inputs(batch, batch.actions);
    const DiscStats ds = disc_update(res.disc, disc_opt, teacher_in, student_in, batch.size,
                                     batch.size, opts.disc, disc_rng);
    m.disc_loss = ds.total;
    m.disc_pred = ds.pred;
    m.disc_grad = ds.grad;
    m.disc_weight = ds.weight;
    m.disc_prob_teacher = ds.prob_teacher;
    m.disc_prob_student = ds.prob_student;
    m.disc_reward = rs.rewards.mean("disc");

    m.update = student_update(res.policy, opt, batch, pcfg, opts.coefs, update_rng, ds.total);
    m.update.aborted = m.update.aborted || ds.aborted;
    for (const auto& n : reward::reward_term_names()) m.reward_terms.push_back(rs.rewards.mean(n));
    m.reward_terms.push_back(rs.rewards.mean("total"));
    m.mean_level = rs.mean_level;
    m.tracking_error = rs.tracking_error;
    m.mean_reward = rs.mean_reward;
    m.fall_rate = rs.episodes ? static_cast<double>(rs.falls) / rs.episodes : 0.0;
    m.command_limit = o.command.initial;
    if (writer) writer->write(m);
    if (o.progress) {
      std::fprintf(stderr,
                   "student it %d dist %.4f pT %.3f pS %.3f aux %.4f track %.3f falls %d/%d\n", it,
                   m.action_distance, m.disc_prob_teacher, m.disc_prob_student, m.update.mean.aux,
                   m.tracking_error, rs.falls, rs.episodes);
    }
    res.history.push_back(std::move(m));
    if (!o.out_dir.empty() && o.checkpoint_interval > 0 && it % o.checkpoint_interval == 0 &&
        it != o.iterations) {
      save(o.out_dir + "/student_iter_" + std::to_string(it) + ".ckpt");
    }
  }
  if (!o.out_dir.empty()) {
    res.checkpoint_path = o.out_dir + "/student.ckpt";
    save(res.checkpoint_path);
    res.deploy_path = o.out_dir + "/student.deploy";
    make_deploy_export(res.policy, res.norm, o.config_hash, o.seed).save(res.deploy_path);
  }
  return res;
}

}  // namespace wp::distill
