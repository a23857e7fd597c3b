#include "walkprior/ppo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "walkprior/nn/gaussian.hpp"
#include "walkprior/ppo/gae.hpp"

namespace wp::ppo {

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("ppo: gamma must be in (0, 1]");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error("ppo: lambda must be in (0, 1]");
  if (!(clip > 0.0 && clip < 1.0)) throw Error("ppo: clip must be in (0, 1)");
  if (!(value_coef > 0.0)) throw Error("ppo: value coefficient must be positive");
  if (!(entropy_coef >= 0.0)) throw Error("ppo: entropy coefficient must be non-negative");
  if (epochs < 1 || minibatches < 1 || horizon < 1) throw Error("ppo: epochs, minibatches, horizon >= 1");
  if (!(max_grad > 0.0)) throw Error("ppo: max_grad must be positive");
  if (!(learning_rate > 0.0)) throw Error("ppo: learning rate must be positive");
  if (!(schedule.desired_kl > 0.0)) throw Error("ppo: desired KL must be positive");
}

void Batch::resize(int n, int actor, int critic, int action, int aux, int disc) {
  size = n;
  actor_dim = actor;
  critic_dim = critic;
  action_dim = action;
  aux_dim = aux;
  disc_dim = disc;
  actor_obs.assign(static_cast<std::size_t>(n) * actor, 0.0);
  critic_obs.assign(static_cast<std::size_t>(n) * critic, 0.0);
  actions.assign(static_cast<std::size_t>(n) * action, 0.0);
  mean_actions.assign(static_cast<std::size_t>(n) * action, 0.0);
  log_probs.assign(n, 0.0);
  values.assign(n, 0.0);
  rewards.assign(n, 0.0);
  dones.assign(n, 0.0);
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  aux_targets.assign(static_cast<std::size_t>(n) * aux, 0.0);
  teacher_actions.assign(disc > 0 ? static_cast<std::size_t>(n) * action : 0, 0.0);
  disc_states.assign(static_cast<std::size_t>(n) * disc, 0.0);
}

namespace {

std::span<const double> row(const Vec& v, int i, int width) {
  return std::span<const double>(v).subspan(static_cast<std::size_t>(i) * width, width);
}

std::span<double> row(Vec& v, int i, int width) {
  return std::span<double>(v).subspan(static_cast<std::size_t>(i) * width, width);
}

}  // namespace

LossTerms minibatch_loss(ActorCritic& ac, const Batch& batch, std::span<const int> indices,
                         const LossCoefs& coefs, double clip_eps, bool backward,
                         double disc_loss) {
  LossTerms out;
  const int n = static_cast<int>(indices.size());
  if (n == 0) return out;
  const int J = batch.action_dim;
  const bool use_aux = ac.has_aux() && batch.aux_dim > 0;
  const double inv = 1.0 / n;
  Vec mean(J), gmean(J), new_lp(n), old_lp(n);
  Vec gtrunk(ac.trunk.output_size()), gaux_in(use_aux ? ac.trunk.output_size() : 0);
  ActorTape tape;
  nn::Tape vtape;
  double surr = 0.0, vloss = 0.0, aloss = 0.0;
  for (int k = 0; k < n; ++k) {
    const int i = indices[k];
    const auto action = row(batch.actions, i, J);
    ac.actor_mean(row(batch.actor_obs, i, batch.actor_dim), mean, tape);
    const double lp = nn::gaussian_log_prob(mean, ac.dist.log_std, action);
    const double ratio = std::exp(lp - batch.log_probs[i]);
    const double adv = batch.advantages[i];
    new_lp[k] = lp;
    old_lp[k] = batch.log_probs[i];
    surr += clipped_surrogate(ratio, adv, clip_eps);
    if (backward) {
      const double coef = -clipped_surrogate_grad(ratio, adv, clip_eps) * ratio * inv;
      std::fill(gmean.begin(), gmean.end(), 0.0);
      nn::gaussian_log_prob_grad(mean, ac.dist.log_std, action, coef, gmean,
                                 ac.dist.log_std_grad);
      ac.head.backward(tape.head, gmean, gtrunk);
    }
    if (use_aux) {
      const auto pred = ac.aux_predict(tape);
      const auto target = row(batch.aux_targets, i, batch.aux_dim);
      Vec gpred(batch.aux_dim);
      for (int d = 0; d < batch.aux_dim; ++d) {
        const double e = pred[d] - target[d];
        aloss += e * e;
        gpred[d] = coefs.aux * 2.0 * e * inv;
      }
      if (backward) {
        ac.aux.backward(tape.aux, gpred, gaux_in);
        if (coefs.aux_to_trunk) {
          for (std::size_t d = 0; d < gtrunk.size(); ++d) gtrunk[d] += gaux_in[d];
        }
      }
    }
    if (backward) ac.trunk.backward(tape.trunk, gtrunk);

    const double v = ac.value(row(batch.critic_obs, i, batch.critic_dim), vtape);
    const double e = v - batch.returns[i];
    vloss += e * e;
    if (backward) {
      const double g = coefs.value * 2.0 * e * inv;
      ac.critic.backward(vtape, std::span<const double>(&g, 1));
    }
  }
  out.surrogate = -surr * inv;
  out.value = vloss * inv;
  out.entropy = nn::gaussian_entropy(ac.dist.log_std);
  out.aux = aloss * inv;
  out.disc = disc_loss;
  if (backward) {
    for (double& g : ac.dist.log_std_grad) g -= coefs.entropy;
  }
  out.total = out.surrogate + coefs.value * out.value - coefs.entropy * out.entropy +
              coefs.aux * out.aux + coefs.disc * out.disc;
  out.kl = approx_kl(new_lp, old_lp);
  out.clip_fraction = clip_fraction(new_lp, old_lp, clip_eps);
  return out;
}

UpdateStats policy_update(ActorCritic& ac, nn::Adam& opt, const Batch& batch, const PpoConfig& cfg,
                          const LossCoefs& coefs, Rng& rng, double disc_loss) {
  UpdateStats st;
  std::vector<int> perm(batch.size);
  std::iota(perm.begin(), perm.end(), 0);
  const int mbs = std::min(cfg.minibatches, std::max(batch.size, 1));
  auto policy_blocks = ac.policy_blocks();
  auto aux_blocks = ac.aux_blocks();
  std::vector<nn::ParamBlock> all(policy_blocks);
  all.insert(all.end(), aux_blocks.begin(), aux_blocks.end());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int m = 0; m < mbs; ++m) {
      const int lo = static_cast<int>(static_cast<long>(batch.size) * m / mbs);
      const int hi = static_cast<int>(static_cast<long>(batch.size) * (m + 1) / mbs);
      ac.zero_grad();
      const LossTerms t = minibatch_loss(ac, batch, std::span<const int>(perm).subspan(lo, hi - lo),
                                         coefs, cfg.clip, true, disc_loss);
      if (!std::isfinite(t.total)) {
        ac.zero_grad();
        st.aborted = true;
        st.learning_rate = opt.learning_rate();
        return st;
      }
      opt.set_learning_rate(adapt_learning_rate(opt.learning_rate(), t.kl, cfg.schedule));
      nn::clip_gradients(policy_blocks, cfg.max_grad, cfg.clip_mode);
      if (!aux_blocks.empty()) nn::clip_gradients(aux_blocks, cfg.max_grad, cfg.clip_mode);
      opt.step(all);
      st.mean.surrogate += t.surrogate;
      st.mean.value += t.value;
      st.mean.entropy += t.entropy;
      st.mean.aux += t.aux;
      st.mean.disc += t.disc;
      st.mean.total += t.total;
      st.mean.kl += t.kl;
      st.mean.clip_fraction += t.clip_fraction;
      ++st.minibatches;
    }
  }
  if (st.minibatches > 0) {
    const double inv = 1.0 / st.minibatches;
    for (double* x : {&st.mean.surrogate, &st.mean.value, &st.mean.entropy, &st.mean.aux,
                      &st.mean.disc, &st.mean.total, &st.mean.kl, &st.mean.clip_fraction}) {
      *x *= inv;
    }
  }
  st.learning_rate = opt.learning_rate();
  return st;
}

UpdateStats teacher_update(ActorCritic& ac, nn::Adam& opt, const Batch& batch,
                           const PpoConfig& cfg, Rng& rng) {
  LossCoefs c;
  c.value = cfg.value_coef;
  c.entropy = cfg.entropy_coef;
  return policy_update(ac, opt, batch, cfg, c, rng);
}

void finish_batch(Batch& batch, int num_envs, std::span<const double> bootstrap,
                  const PpoConfig& cfg) {
  if (num_envs < 1 || batch.size % num_envs != 0 ||
      static_cast<int>(bootstrap.size()) != num_envs) {
    throw Error("finish_batch: batch is not envs x steps");
  }
  const int T = batch.size / num_envs;
  Vec r(T), v(T), d(T);
  for (int e = 0; e < num_envs; ++e) {
    for (int t = 0; t < T; ++t) {
      const int i = t * num_envs + e;
      r[t] = batch.rewards[i];
      v[t] = batch.values[i];
      d[t] = batch.dones[i];
    }
    const GaeResult g = compute_gae(r, v, d, bootstrap[e], cfg.gamma, cfg.lambda);
    for (int t = 0; t < T; ++t) {
      batch.advantages[t * num_envs + e] = g.advantages[t];
      batch.returns[t * num_envs + e] = g.returns[t];
    }
  }
  normalize_advantages(batch.advantages);
}

Collector::Collector(env::VecEnv& envs, const obs::StackConfig& stacks, ActorInput kind,
                     ObsNormalizer& norm)
    : envs_(envs), stack_cfg_(stacks), kind_(kind), norm_(norm) {
  const auto& spec = envs_.spec();
  for (int e = 0; e < envs_.size(); ++e) {
    stacks_.emplace_back(stacks, spec.proprio_dim, spec.privileged_dim);
  }
}

void Collector::push_frame(int e, bool reset) {
  env::Env& env = *envs_.envs[e];
  const Vec noisy = env.noisy_proprio(envs_.rngs[e]);
  const auto& f = env.frame();
  if (reset) stacks_[e].reset(noisy, f.privileged, f.state());
  else stacks_[e].push(noisy, f.privileged, f.state());
}

void Collector::reset_env(int e) {
  envs_.envs[e]->reset(envs_.rngs[e]);
  push_frame(e, true);
}

void Collector::reset_all() {
  for (int e = 0; e < envs_.size(); ++e) reset_env(e);
}

RolloutStats Collector::collect(const ActorCritic& ac, Batch& batch, const PpoConfig& cfg,
                                const StudentHooks* hooks) {
  const int E = envs_.size();
  const int T = cfg.horizon;
  const auto& spec = envs_.spec();
  const int J = spec.action_dim;
  const int disc_dim = hooks ? stack_cfg_.state_frames * spec.state_dim() : 0;
  batch.resize(T * E, ac.actor_input_size(), ac.critic_input_size(), J,
               hooks ? spec.aux_dim : 0, disc_dim);
  RolloutStats stats;
  Vec prow(static_cast<std::size_t>(E) * spec.proprio_dim);
  Vec vrow(static_cast<std::size_t>(E) * spec.privileged_dim);
  Vec mean(J), action(J);
  ActorTape tape;
  nn::Tape vtape;
  double track = 0.0, reward_sum = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int e = 0; e < E; ++e) {
      const auto& f = envs_.envs[e]->frame();
      std::copy(f.proprio.begin(), f.proprio.end(), prow.begin() + e * spec.proprio_dim);
      std::copy(f.privileged.begin(), f.privileged.end(), vrow.begin() + e * spec.privileged_dim);
    }
    norm_.update(prow, vrow, E);
    for (int e = 0; e < E; ++e) {
      env::Env& env = *envs_.envs[e];
      Rng& rng = envs_.rngs[e];
      const int i = t * E + e;
      const Vec x = make_actor_input(stacks_[e], kind_, norm_);
      const Vec c = make_critic_input(stacks_[e], norm_);
      std::copy(x.begin(), x.end(), row(batch.actor_obs, i, batch.actor_dim).begin());
      std::copy(c.begin(), c.end(), row(batch.critic_obs, i, batch.critic_dim).begin());
      ac.actor_mean(x, mean, tape);
      batch.values[i] = ac.value(c, vtape);
      nn::gaussian_sample(mean, ac.dist.log_std, rng, action);
      batch.log_probs[i] = nn::gaussian_log_prob(mean, ac.dist.log_std, action);
      std::copy(action.begin(), action.end(), row(batch.actions, i, J).begin());
      std::copy(mean.begin(), mean.end(), row(batch.mean_actions, i, J).begin());
      std::optional<double> logit;
      if (hooks) {
        const Vec ta = hooks->teacher(e, env, stacks_[e]);
        std::copy(ta.begin(), ta.end(), row(batch.teacher_actions, i, J).begin());
        const Vec ds = make_disc_state(stacks_[e], norm_);
        std::copy(ds.begin(), ds.end(), row(batch.disc_states, i, disc_dim).begin());
        logit = hooks->disc_logit(ds, action);
        const auto& aux = env.frame().aux;
        std::copy(aux.begin(), aux.end(), row(batch.aux_targets, i, spec.aux_dim).begin());
      }
      env::StepInfo info = env.step(action, logit, rng);
      stats.rewards.add(info.breakdown);
      track += info.tracking_error;
      reward_sum += info.reward;
      double r = info.reward;
      if (info.done) {
        ++stats.episodes;
        if (info.fault) ++stats.faults;
        if (info.episode) {
          if (info.episode->fell) ++stats.falls;
          stats.finished.push_back(*info.episode);
        }
        if (info.timeout && !info.fault) {
          push_frame(e, false);
          r += cfg.gamma * ac.value(make_critic_input(stacks_[e], norm_), vtape);
        }
        reset_env(e);
      } else {
        push_frame(e, false);
      }
      batch.rewards[i] = r;
      batch.dones[i] = info.done ? 1.0 : 0.0;
    }
  }
  Vec bootstrap(E);
  double levels = 0.0;
  for (int e = 0; e < E; ++e) {
    bootstrap[e] = ac.value(make_critic_input(stacks_[e], norm_), vtape);
    levels += envs_.envs[e]->terrain_level();
  }
  finish_batch(batch, E, bootstrap, cfg);
  stats.tracking_error = track / (T * E);
  stats.mean_reward = reward_sum / (T * E);
  stats.mean_level = levels / E;
  return stats;
}

MetricsWriter::MetricsWriter(const std::string& path, bool student, std::uint64_t config_hash,
                             std::uint64_t seed)
    : path_(path), student_(student) {
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw Error("cannot write metrics file " + path_);
  out << "# walkprior metrics v1 config_hash=" << config_hash << " seed=" << seed << "\n"
      << header(student_) << "\n";
}

std::string MetricsWriter::header(bool student) {
  std::string h = "iteration";
  for (const auto& n : reward::reward_term_names()) h += ",reward_" + n;
  h += ",reward_total,mean_terrain_level,tracking_error,mean_step_reward,fall_rate,command_limit,"
       "kl,learning_rate,loss_surrogate,loss_value,entropy,loss_total,clip_fraction";
  if (student) {
    h += ",loss_aux,action_distance,disc_loss,disc_pred,disc_grad,disc_weight,"
         "disc_prob_teacher,disc_prob_student,disc_reward";
  }
  return h;
}

std::string MetricsWriter::row(const IterationMetrics& m, bool student) {
  std::string r = std::to_string(m.iteration);
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.10g", v);
    r += buf;
  };
  for (double v : m.reward_terms) put(v);
  for (double v : {m.mean_level, m.tracking_error, m.mean_reward, m.fall_rate, m.command_limit,
                   m.update.mean.kl, m.update.learning_rate, m.update.mean.surrogate,
                   m.update.mean.value, m.update.mean.entropy, m.update.mean.total,
                   m.update.mean.clip_fraction}) {
    put(v);
  }
  if (student) {
    for (double v : {m.update.mean.aux, m.action_distance, m.disc_loss, m.disc_pred, m.disc_grad,
                     m.disc_weight, m.disc_prob_teacher, m.disc_prob_student, m.disc_reward}) {
      put(v);
    }
  }
  return r;
}

void MetricsWriter::write(const IterationMetrics& m) {
  std::ofstream out(path_, std::ios::app);
  out << row(m, student_) << "\n";
}

nn::Checkpoint make_checkpoint(const ActorCritic& ac, const ObsNormalizer& norm,
                               const nn::Adam* opt, const std::string& kind,
                               const obs::StackConfig& stacks, const env::EnvSpec& spec,
                               std::uint64_t config_hash, std::uint64_t seed,
                               const std::string& config_text) {
  nn::Checkpoint ck;
  ck.config_hash = config_hash;
  ck.seed = seed;
  ac.save(ck);
  save_normalizer(ck, norm);
  if (opt) ck.add_adam("optimizer", *opt);
  nlohmann::ordered_json meta;
  meta["kind"] = kind;
  meta["proprio_dim"] = spec.proprio_dim;
  meta["privileged_dim"] = spec.privileged_dim;
  meta["aux_dim"] = spec.aux_dim;
  meta["action_dim"] = spec.action_dim;
  meta["proprio_frames"] = stacks.proprio_frames;
  meta["privileged_frames"] = stacks.privileged_frames;
  meta["state_frames"] = stacks.state_frames;
  ck.add_text("meta", meta.dump());
  if (!config_text.empty()) ck.add_text("config", config_text);
  return ck;
}

namespace {

void apply_command_curriculum(env::VecEnv& envs, const CommandCurriculum& cc, int iteration,
                              double mean_level, double& limit, int& last_growth) {
  if (!cc.enabled) return;
  const int max_level = envs.envs.front()->max_terrain_level();
  if (max_level <= 0 || mean_level < cc.trigger * max_level) return;
  if (iteration - last_growth < cc.period || limit >= cc.cap) return;
  limit = std::min(cc.cap, limit * (1.0 + cc.growth));
  last_growth = iteration;
  for (auto& e : envs.envs) e->set_command_limit(limit);
}

}  // namespace

TrainResult train_teacher(const env::EnvFactory& factory, const TrainOptions& opts) {
  opts.ppo.validate();
  if (opts.iterations < 1) throw Error("train_teacher: iterations must be >= 1");
  env::VecEnv envs(factory, opts.num_envs, opts.seed);
  const env::EnvSpec spec = envs.spec();
  Rng init_rng = make_stream(opts.seed, 1000001);
  Rng update_rng = make_stream(opts.seed, 1000002);
  TrainResult res;
  res.norm = ObsNormalizer(spec.proprio_dim, spec.privileged_dim);
  res.policy = ActorCritic(actor_input_size(ActorInput::ProprioAndPrivileged, opts.stacks,
                                            spec.proprio_dim, spec.privileged_dim),
                           critic_input_size(opts.stacks, spec.proprio_dim, spec.privileged_dim),
                           spec.action_dim, 0, opts.policy, init_rng);
  nn::Adam opt(nn::AdamConfig{opts.ppo.learning_rate});
  for (auto& e : envs.envs) {
    e->set_phase(reward::Phase::Teacher);
    e->set_command_limit(opts.command.initial);
  }
  double limit = opts.command.initial;
  int last_growth = 0;
  Collector col(envs, opts.stacks, ActorInput::ProprioAndPrivileged, res.norm);
  col.reset_all();

  std::unique_ptr<MetricsWriter> writer;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    res.metrics_path = opts.out_dir + "/teacher_metrics.csv";
    writer = std::make_unique<MetricsWriter>(res.metrics_path, false, opts.config_hash, opts.seed);
  }
  auto save = [&](const std::string& path) {
    make_checkpoint(res.policy, res.norm, &opt, "teacher", opts.stacks, spec, opts.config_hash,
                    opts.seed, opts.config_text)
        .save(path);
  };

  Batch batch;
  for (int it = 1; it <= opts.iterations; ++it) {
    RolloutStats rs = col.collect(res.policy, batch, opts.ppo);
    IterationMetrics m;
    m.iteration = it;
    m.update = teacher_update(res.policy, opt, batch, opts.ppo, update_rng);
    for (const auto& n : reward::reward_term_names()) m.reward_terms.push_back(rs.rewards.mean(n));
    m.reward_terms.push_back(rs.rewards.mean("total"));
    m.mean_level = rs.mean_level;
    m.tracking_error = rs.tracking_error;
    m.mean_reward = rs.mean_reward;
    m.fall_rate = rs.episodes ? static_cast<double>(rs.falls) / rs.episodes : 0.0;
    m.command_limit = limit;
    apply_command_curriculum(envs, opts.command, it, rs.mean_level, limit, last_growth);
    if (writer) writer->write(m);
    if (opts.progress) {
      std::fprintf(stderr, "teacher it %d track %.3f reward %.4f level %.2f falls %d/%d kl %.4f lr %.2e\n",
                   it, m.tracking_error, m.mean_reward, m.mean_level, rs.falls, rs.episodes,
                   m.update.mean.kl, m.update.learning_rate);
    }
    res.history.push_back(std::move(m));
    if (!opts.out_dir.empty() && opts.checkpoint_interval > 0 && it % opts.checkpoint_interval == 0 &&
        it != opts.iterations) {
      save(opts.out_dir + "/teacher_iter_" + std::to_string(it) + ".ckpt");
    }
  }
  if (!opts.out_dir.empty()) {
    res.checkpoint_path = opts.out_dir + "/teacher.ckpt";
    save(res.checkpoint_path);
  }
  return res;
}

}  // namespace wp::ppo
