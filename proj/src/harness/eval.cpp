#include "walkprior/harness/eval.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "walkprior/harness/metrics.hpp"

namespace wp::harness {

namespace {

void check_meta(const nlohmann::json& meta, const env::EnvSpec& spec,
                const obs::StackConfig& stacks) {
  auto mismatch = [&](const char* key, int want) {
    if (meta.at(key).get<int>() != want) {
      throw Error(std::string("checkpoint does not match the configuration: ") + key + " is " +
                  std::to_string(meta.at(key).get<int>()) + ", config gives " +
                  std::to_string(want));
    }
  };
  mismatch("proprio_dim", spec.proprio_dim);
  mismatch("privileged_dim", spec.privileged_dim);
  mismatch("action_dim", spec.action_dim);
  mismatch("proprio_frames", stacks.proprio_frames);
  mismatch("privileged_frames", stacks.privileged_frames);
}

std::vector<terrain::TerrainFamily> families_of(terrain::TerrainGroup g) {
  std::vector<terrain::TerrainFamily> out;
  for (int f = 0; f < terrain::kNumFamilies; ++f) {
    const auto fam = static_cast<terrain::TerrainFamily>(f);
    if (terrain::group_of(fam) == g) out.push_back(fam);
  }
  return out;
}

struct Accum {
  int episodes = 0;
  int falls = 0;
  double tracking = 0.0;
  double level = 0.0;
  double cot = 0.0;
  int cot_episodes = 0;

  void add(const env::EpisodeSummary& ep, double tracking_err) {
    ++episodes;
    falls += ep.fell;
    tracking += tracking_err;
    level += ep.level;
    if (auto c = cost_of_transport(ep)) {
      cot += *c;
      ++cot_episodes;
    }
  }
  void merge(const Accum& o) {
    episodes += o.episodes;
    falls += o.falls;
    tracking += o.tracking;
    level += o.level;
    cot += o.cot;
    cot_episodes += o.cot_episodes;
  }
  GroupReport report(const std::string& name) const {
    GroupReport r;
    r.group = name;
    r.episodes = episodes;
    r.falls = falls;
    if (episodes > 0) {
      r.fall_rate = static_cast<double>(falls) / episodes;
      r.tracking_error = tracking / episodes;
      r.mean_level = level / episodes;
    }
    if (cot_episodes > 0) r.cot = cot / cot_episodes;
    r.cot_episodes = cot_episodes;
    return r;
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

CheckpointPolicy::CheckpointPolicy(const nn::Checkpoint& ck, const ExperimentConfig& cfg) {
  if (!ck.has("meta")) throw Error("checkpoint: missing metadata");
  const auto meta = nlohmann::json::parse(ck.text("meta"));
  kind_ = meta.at("kind").get<std::string>();
  if (kind_ == "teacher") input_ = ppo::ActorInput::ProprioAndPrivileged;
  else if (kind_ == "student") input_ = ppo::ActorInput::ProprioOnly;
  else throw Error("checkpoint: unknown policy kind '" + kind_ + "'");
  const env::EnvSpec spec = walker_spec(cfg);
  check_meta(meta, spec, cfg.stacks);
  policy_ = ppo::ActorCritic::load(ck);
  norm_ = ppo::load_normalizer(ck);
  norm_.frozen = true;
  if (policy_.actor_input_size() !=
      ppo::actor_input_size(input_, cfg.stacks, spec.proprio_dim, spec.privileged_dim)) {
    throw Error("checkpoint does not match the configuration: actor input size");
  }
}

Vec CheckpointPolicy::act(const obs::FrameStack& stack) const {
  const Vec x = ppo::make_actor_input(stack, input_, norm_);
  Vec mean(policy_.action_dim());
  ppo::ActorTape tape;
  policy_.actor_mean(x, mean, tape);
  return mean;
}

DeployPolicy::DeployPolicy(distill::DeployedPolicy policy, const ExperimentConfig& cfg)
    : policy_(std::move(policy)) {
  const env::EnvSpec spec = walker_spec(cfg);
  if (policy_.proprio_dim() != spec.proprio_dim ||
      policy_.frames() != cfg.stacks.proprio_frames) {
    throw Error("deployment export does not match the configuration: proprio " +
                std::to_string(policy_.proprio_dim()) + " x " + std::to_string(policy_.frames()) +
                " frames");
  }
}

std::unique_ptr<EvalPolicy> load_eval_policy(const std::string& path, const ExperimentConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::string magic;
  std::getline(in, magic, '\0');
  if (magic == nn::kDeployMagic) {
    return std::make_unique<DeployPolicy>(distill::DeployedPolicy::load(path), cfg);
  }
  return std::make_unique<CheckpointPolicy>(nn::Checkpoint::load(path, nn::kCheckpointMagic), cfg);
}

EvalReport evaluate(const EvalPolicy& policy, const ExperimentConfig& cfg) {
  const EvalConfig& ev = cfg.eval;
  env::WalkerEnvConfig ecfg = cfg.env;
  ecfg.curriculum_enabled = ev.curriculum;
  ecfg.initial_level_max = 0;
  ecfg.command_limit = ev.command_range;
  ecfg.sim.episode_length = ev.episode_length;
  const env::WalkerEnvFactory factory(ecfg, cfg.seed);
  (void)walker_spec(cfg);

  EvalReport report;
  report.policy = policy.name();
  report.config_hash = config_hash(cfg);
  report.seed = cfg.seed;
  Accum total;
  for (int g = 0; g < terrain::kNumGroups; ++g) {
    const auto group = static_cast<terrain::TerrainGroup>(g);
    const auto fams = families_of(group);
    Accum acc;
    for (std::size_t k = 0; k < fams.size(); ++k) {
      // Episodes split across the group's families, earlier families take the remainder.
      const int n = ev.episodes_per_family / static_cast<int>(fams.size()) +
                    (static_cast<int>(k) < ev.episodes_per_family % static_cast<int>(fams.size()));
      const int fam = static_cast<int>(fams[k]);
      auto env_ptr = factory.make(fam);
      auto& env = static_cast<env::WalkerEnv&>(*env_ptr);
      env.set_family(fams[k]);
      if (!ev.curriculum) env.set_level(ev.level);
      obs::FrameStack stack(cfg.stacks, env.spec().proprio_dim, env.spec().privileged_dim);
      for (int e = 0; e < n; ++e) {
        // One stream per episode: every policy meets the same commands and parameters.
        Rng rng = make_stream(cfg.seed, 3000000 + 10000 * static_cast<std::uint64_t>(fam) +
                                            static_cast<std::uint64_t>(e));
        env.reset(rng);
        stack.reset(env.noisy_proprio(rng), env.frame().privileged, env.frame().state());
        std::vector<double> cmd, vel;
        for (;;) {
          const Vec a = policy.act(stack);
          const env::StepInfo info = env.step(a, std::nullopt, rng);
          cmd.push_back(env.command().vx);
          const double vx = env.sim().state().qd[0];
          vel.push_back(std::isfinite(vx) ? vx : env.command().vx);
          if (info.done) {
            acc.add(*info.episode, tracking_error(cmd, vel));
            break;
          }
          stack.push(env.noisy_proprio(rng), env.frame().privileged, env.frame().state());
        }
      }
    }
    GroupReport r = acc.report(terrain::to_string(group));
    if (r.episodes < ev.min_episodes) {
      throw Error("eval: group " + r.group + " ran " + std::to_string(r.episodes) +
                  " episodes, below eval.min_episodes");
    }
    report.groups.push_back(r);
    total.merge(acc);
  }
  report.overall = total.report("overall");
  return report;
}

nlohmann::ordered_json report_json(const EvalReport& r) {
  auto group = [](const GroupReport& g) {
    nlohmann::ordered_json j;
    j["group"] = g.group;
    j["episodes"] = g.episodes;
    j["falls"] = g.falls;
    j["fall_rate"] = g.fall_rate;
    j["tracking_error"] = g.tracking_error;
    j["mean_terrain_level"] = g.mean_level;
    j["cot"] = g.cot ? nlohmann::ordered_json(*g.cot) : nlohmann::ordered_json(nullptr);
    j["cot_episodes"] = g.cot_episodes;
    return j;
  };
  nlohmann::ordered_json j;
  j["format"] = "walkprior-eval-v1";
  j["policy"] = r.policy;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : r.groups) j["groups"].push_back(group(g));
  j["overall"] = group(r.overall);
  return j;
}

std::string report_csv(const EvalReport& r) {
  std::string s = "# walkprior eval v1 config_hash=" + std::to_string(r.config_hash) +
                  " seed=" + std::to_string(r.seed) + " policy=" + r.policy + "\n";
  s += "group,episodes,falls,fall_rate,tracking_error,mean_terrain_level,cot\n";
  auto row = [&](const GroupReport& g) {
    s += g.group + "," + std::to_string(g.episodes) + "," + std::to_string(g.falls) + "," +
         fmt(g.fall_rate) + "," + fmt(g.tracking_error) + "," + fmt(g.mean_level) + "," +
         (g.cot ? fmt(*g.cot) : std::string()) + "\n";
  };
  for (const auto& g : r.groups) row(g);
  row(r.overall);
  return s;
}

void write_report(const EvalReport& r, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream js(dir + "/eval_report.json", std::ios::trunc);
  std::ofstream cs(dir + "/eval_report.csv", std::ios::trunc);
  if (!js || !cs) throw Error("cannot write eval report into " + dir);
  js << report_json(r).dump(2) << "\n";
  cs << report_csv(r);
}

}  // namespace wp::harness
