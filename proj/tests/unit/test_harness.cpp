#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "walkprior/harness/cli.hpp"
#include "walkprior/harness/config.hpp"
#include "walkprior/harness/eval.hpp"
#include "walkprior/harness/metrics.hpp"
#include "walkprior/harness/plot.hpp"

using namespace wp;
using namespace wp::harness;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("walkprior_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string source_path(const std::string& rel) {
  return std::string(WALKPRIOR_SOURCE_DIR) + "/" + rel;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

int cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream o, e;
  const int rc = run_command(args, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

ExperimentConfig tiny_eval_config() {
  ExperimentConfig cfg = preset("desk");
  cfg.env.flat_only = true;
  cfg.env.randomization.enabled = false;
  cfg.env.randomization.pushes = false;
  cfg.eval.command_range = 0.0;
  cfg.eval.episode_length = 1.0;
  cfg.eval.episodes_per_family = 2;
  return cfg;
}

}  // namespace

TEST_CASE("config: empty file gives desk defaults") {
  const ExperimentConfig c = parse_config("  \n", "desk");
  CHECK(c.preset == "desk");
  CHECK(c.teacher_ppo.gamma == 0.995);
  CHECK(dump_config(c) == dump_config(preset("desk")));
  CHECK(dump_config(parse_config("{}")) == dump_config(c));
}

TEST_CASE("config: unknown keys are named in the error") {
  CHECK(error_of([] { parse_config(R"({"gama": 0.9})"); }).find("'gama'") != std::string::npos);
  CHECK(error_of([] { parse_config(R"({"teacher_ppo": {"gama": 0.9}})"); })
            .find("'teacher_ppo.gama'") != std::string::npos);
  CHECK(error_of([] { parse_config(R"({"nope": {}})"); }).find("'nope'") != std::string::npos);
}

TEST_CASE("config: range and type errors") {
  const std::string clip = error_of([] { parse_config(R"({"teacher_ppo": {"clip": 1.5}})"); });
  CHECK(clip.find("teacher_ppo.clip") != std::string::npos);
  CHECK(clip.find("(0, 1)") != std::string::npos);
  CHECK(error_of([] { parse_config(R"({"run": {"num_envs": "many"}})"); })
            .find("run.num_envs") != std::string::npos);
  CHECK(error_of([] { parse_config(R"({"randomization": {"friction": [1.3, 0.2]}})"); })
            .find("randomization.friction") != std::string::npos);
  CHECK(error_of([] { parse_config(R"({"preset": "huge"})"); }).find("huge") != std::string::npos);
  CHECK(error_of([] { parse_config("{ broken"); }).find("parse error") != std::string::npos);
  CHECK(error_of([] { parse_config(R"({"observation": {"height_points": 54}})"); })
            .find("height_points") != std::string::npos);
}

TEST_CASE("config: missing keys come from the named preset") {
  const ExperimentConfig c = parse_config(R"({"preset": "paper-scale", "run": {"num_envs": 8}})");
  CHECK(c.run.num_envs == 8);
  CHECK(c.run.teacher_iterations == 3000);
  CHECK(c.env.dims.height_points == 187);
}

TEST_CASE("config: round trip is lossless") {
  for (const char* name : {"desk", "paper-scale"}) {
    const ExperimentConfig a = preset(name);
    const std::string text = dump_config(a);
    const ExperimentConfig b = parse_config(text);
    CHECK(dump_config(b) == text);
    CHECK(config_hash(a) == config_hash(b));
  }
  ExperimentConfig c = preset("desk");
  c.teacher_ppo.gamma = 0.98765432101234;
  c.env.randomization.friction = {0.123456789, 1.987654321};
  c.disc.hidden = {7, 5, 3};
  c.teacher_ppo.clip_mode = nn::ClipMode::Elementwise;
  c.seed = 18446744073709551557ULL;
  const ExperimentConfig d = parse_config(dump_config(c));
  CHECK(d.teacher_ppo.gamma == c.teacher_ppo.gamma);
  CHECK(d.env.randomization.friction.hi == c.env.randomization.friction.hi);
  CHECK(d.disc.hidden == c.disc.hidden);
  CHECK(d.teacher_ppo.clip_mode == nn::ClipMode::Elementwise);
  CHECK(d.seed == c.seed);
  CHECK(dump_config(d) == dump_config(c));
}

TEST_CASE("config: hash ignores the seed and tracks everything else") {
  ExperimentConfig a = preset("desk");
  ExperimentConfig b = a;
  b.seed = 99;
  CHECK(config_hash(a) == config_hash(b));
  b.teacher_ppo.entropy_coef = 0.002;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(fnv1a64("") == 14695981039346656037ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("config: dimension arithmetic") {
  const DerivedDims p = derive(preset("paper-scale"));
  CHECK(p.proprio == 47);
  CHECK(p.privileged == 213);
  CHECK(p.aux == 48);
  CHECK(p.actions == 12);
  CHECK(p.height_points == 187);
  CHECK(p.student_actor_input == 47 * 15);
  CHECK(p.teacher_actor_input == 47 * 15 + 213 * 3);
  CHECK(p.batch == 10240 * 24);
  CHECK(p.minibatch == 10240 * 4);
  const DerivedDims d = derive(preset("desk"));
  CHECK(d.proprio == 29);
  CHECK(d.privileged == 73);
  CHECK(d.aux == 30);
  CHECK(walker_spec(preset("desk")).action_dim == 6);
  CHECK_THROWS_AS(walker_spec(preset("paper-scale")), Error);
}

TEST_CASE("metrics: tracking error") {
  const std::vector<double> cmd{0.5, 0.5, -0.2, 1.0};
  CHECK(tracking_error(cmd, cmd) == 0.0);
  std::vector<double> off = cmd;
  for (double& v : off) v += 0.3;
  CHECK(tracking_error(cmd, off) == doctest::Approx(0.3).epsilon(1e-12));
  std::vector<double> c(200), m(200);
  double oracle = 0.0;
  for (int i = 0; i < 200; ++i) {
    c[i] = 0.8;
    m[i] = 0.8 + 0.25 * std::sin(0.1 * i);
    oracle += std::abs(c[i] - m[i]);
  }
  CHECK(tracking_error(c, m) == doctest::Approx(oracle / 200).epsilon(1e-12));
  CHECK_THROWS_AS(tracking_error(c, cmd), Error);
}

TEST_CASE("metrics: cost of transport") {
  PowerTrace zero{2, 0.01, std::vector<double>(200, 0.0), std::vector<double>(200, 3.0)};
  CHECK(*cost_of_transport(zero, 10.0, 10.0, 1.0) == 0.0);

  PowerTrace one{1, 0.01, std::vector<double>(100, 5.0), std::vector<double>(100, 2.0)};
  CHECK(*cost_of_transport(one, 10.0, 10.0, 1.0) == doctest::Approx(0.1).epsilon(1e-12));

  PowerTrace neg{1, 0.01, std::vector<double>(100, -5.0), std::vector<double>(100, 2.0)};
  CHECK(*cost_of_transport(neg, 10.0, 10.0, 1.0) == 0.0);
  CHECK_FALSE(cost_of_transport(one, 10.0, 10.0, 0.04).has_value());

  // Resampling a piecewise-constant trace at half the step keeps work and CoT.
  Rng rng(3);
  PowerTrace coarse{3, 0.02, {}, {}};
  for (int i = 0; i < 3 * 50; ++i) {
    coarse.torque.push_back(uniform(rng, -20.0, 20.0));
    coarse.joint_vel.push_back(uniform(rng, -3.0, 3.0));
  }
  PowerTrace fine{3, 0.01, {}, {}};
  for (int s = 0; s < 50; ++s) {
    for (int rep = 0; rep < 2; ++rep) {
      for (int j = 0; j < 3; ++j) {
        fine.torque.push_back(coarse.torque[s * 3 + j]);
        fine.joint_vel.push_back(coarse.joint_vel[s * 3 + j]);
      }
    }
  }
  CHECK(std::abs(*cost_of_transport(coarse, 30.0, 9.81, 2.0) -
                 *cost_of_transport(fine, 30.0, 9.81, 2.0)) < 1e-6);

  env::EpisodeSummary ep;
  ep.positive_work = 50.0;
  ep.weight = 250.0;
  ep.distance = -2.0;
  CHECK(*cost_of_transport(ep) == doctest::Approx(0.1));
  ep.distance = 0.01;
  CHECK_FALSE(cost_of_transport(ep).has_value());
}

TEST_CASE("eval: stand-still on flat ground tracks a zero command") {
  const ExperimentConfig cfg = tiny_eval_config();
  const EvalReport r = evaluate(StandStillPolicy(6), cfg);
  REQUIRE(r.groups.size() == 4);
  CHECK(r.groups[0].group == "slopes");
  CHECK(r.groups[1].group == "rough");
  CHECK(r.groups[2].group == "stairs");
  CHECK(r.groups[3].group == "obstacles");
  for (const auto& g : r.groups) {
    CHECK(g.episodes == 2);
    CHECK(g.falls == 0);
    CHECK(g.tracking_error < 0.05);
    CHECK(std::isfinite(g.tracking_error));
  }
  CHECK(r.overall.episodes == 8);
  CHECK(r.config_hash == config_hash(cfg));
}

TEST_CASE("eval: same seed gives the same report") {
  ExperimentConfig cfg = tiny_eval_config();
  cfg.env.flat_only = false;
  cfg.eval.command_range = 1.5;
  const std::string a = report_json(evaluate(StandStillPolicy(6), cfg)).dump();
  const std::string b = report_json(evaluate(StandStillPolicy(6), cfg)).dump();
  CHECK(a == b);
  cfg.seed = 2;
  CHECK(report_json(evaluate(StandStillPolicy(6), cfg)).dump() != a);
  CHECK(a.find("nan") == std::string::npos);
}

TEST_CASE("eval: checkpoint and config must agree") {
  ExperimentConfig cfg = tiny_eval_config();
  ExperimentConfig other = cfg;
  other.stacks.proprio_frames = 4;
  const env::EnvSpec spec = walker_spec(other);
  Rng rng(1);
  const int in = ppo::actor_input_size(ppo::ActorInput::ProprioAndPrivileged, other.stacks,
                                       spec.proprio_dim, spec.privileged_dim);
  ppo::ActorCritic ac(in, ppo::critic_input_size(other.stacks, spec.proprio_dim, spec.privileged_dim),
                      spec.action_dim, 0, other.teacher_policy, rng);
  ppo::ObsNormalizer norm(spec.proprio_dim, spec.privileged_dim);
  const nn::Checkpoint ck =
      ppo::make_checkpoint(ac, norm, nullptr, "teacher", other.stacks, spec, 1, 1, "");
  CHECK(error_of([&] { CheckpointPolicy(ck, cfg); }).find("proprio_frames") != std::string::npos);
  CheckpointPolicy ok(ck, other);
  CHECK(ok.name() == "teacher");
  const EvalReport r = evaluate(ok, other);
  CHECK(r.policy == "teacher");
}

TEST_CASE("eval: report files carry hash and seed") {
  const auto dir = scratch_dir("eval_report");
  const ExperimentConfig cfg = tiny_eval_config();
  const EvalReport r = evaluate(StandStillPolicy(6), cfg);
  write_report(r, dir.string());
  const std::string csv = slurp(dir / "eval_report.csv");
  CHECK(csv.find("config_hash=" + std::to_string(config_hash(cfg))) != std::string::npos);
  CHECK(csv.find("seed=1") != std::string::npos);
  const auto js = nlohmann::json::parse(slurp(dir / "eval_report.json"));
  CHECK(js.at("config_hash").get<std::uint64_t>() == config_hash(cfg));
  CHECK(js.at("groups").size() == 4);
}

TEST_CASE("plot: malformed CSV reports the line") {
  const std::string short_row = "# c\niteration,loss\n1,0.5\n2\n";
  CHECK(error_of([&] { parse_csv(short_row, "m.csv"); }).find("m.csv:4:") != std::string::npos);
  const std::string bad_num = "iteration,loss\n1,0.5\n\n3,abc\n";
  const std::string e = error_of([&] { parse_csv(bad_num, "n.csv"); });
  CHECK(e.find("n.csv:4:") != std::string::npos);
  CHECK(e.find("abc") != std::string::npos);
  CHECK(error_of([] { parse_csv("# only a comment\n", "h.csv"); }).find("h.csv:1:") !=
        std::string::npos);
  CHECK(error_of([] { parse_csv("iteration,loss\n", "r.csv"); }).find("no data rows") !=
        std::string::npos);
}

TEST_CASE("plot: bands only with several seeds") {
  const CsvTable one = parse_csv("iteration,tracking_error\n0,0.5\n1,0.4\n2,0.3\n", "one.csv");
  const auto single = render_plots({one});
  REQUIRE(single.size() == 1);
  CHECK(single[0].first == "tracking_error");
  CHECK(single[0].second.find("<polygon") == std::string::npos);
  CHECK(single[0].second.find("<polyline") != std::string::npos);

  const CsvTable two = read_csv(source_path("tests/fixtures/plot_two_seeds.csv"));
  const auto banded = render_plots({two});
  REQUIRE(banded.size() == 2);
  CHECK(banded[0].second.find("<polygon") != std::string::npos);
  CHECK(banded[0].second.find("2 seeds") != std::string::npos);
  CHECK(banded[0].second.find("config_hash=123456789") != std::string::npos);

  const auto only = render_plots({two}, PlotOptions{{"mean_terrain_level"}});
  CHECK(only.size() == 1);
  CHECK_THROWS_AS(render_plots({two}, PlotOptions{{"missing"}}), Error);
}

TEST_CASE("plot: per-group bars from eval reports of two seeds") {
  const auto a = read_csv(source_path("tests/fixtures/eval_two_seeds_a.csv"));
  const auto b = read_csv(source_path("tests/fixtures/eval_two_seeds_b.csv"));
  const auto plots = render_plots({a, b}, PlotOptions{{"tracking_error", "cot"}});
  REQUIRE(plots.size() == 2);
  for (const auto& [name, svg] : plots) {
    CHECK(svg.find("<rect") != std::string::npos);
    CHECK(svg.find(">stairs<") != std::string::npos);
    CHECK(svg.find("seed=2") != std::string::npos);
  }
}

TEST_CASE("plot: golden output") {
  const CsvTable t = read_csv(source_path("tests/fixtures/plot_two_seeds.csv"));
  const auto plots = render_plots({t});
  const std::string golden = source_path("tests/golden/plot_tracking_error.svg");
  if (std::getenv("WALKPRIOR_UPDATE_GOLDEN")) {
    std::ofstream(golden, std::ios::binary) << plots[0].second;
  }
  CHECK(plots[0].second == slurp(golden));
}

TEST_CASE("cli: usage errors exit 2") {
  std::string out, err;
  CHECK(cli({"train-student"}, &out, &err) == 2);
  CHECK(err.find("--teacher-ckpt") != std::string::npos);
  CHECK(cli({}) == 2);
  CHECK(cli({"fly"}) == 2);
  CHECK(cli({"print-config", "--bogus"}) == 2);
  CHECK(cli({"print-config", "--preset", "tiny"}) == 2);
  CHECK(cli({"eval"}) == 2);
  CHECK(cli({"print-config", "--help"}, &out) == 0);
  CHECK(out.find("--derived") != std::string::npos);
}

TEST_CASE("cli: runtime errors exit 1") {
  std::string err;
  CHECK(cli({"print-config", "--set", "teacher_ppo.clip=1.5"}, nullptr, &err) == 1);
  CHECK(err.find("teacher_ppo.clip") != std::string::npos);
}

TEST_CASE("cli: print-config matches the paper-scale golden file") {
  std::string out;
  REQUIRE(cli({"print-config", "--preset", "paper-scale"}, &out) == 0);
  CHECK(out == slurp(source_path("tests/golden/paper_scale_config.json")));
  CHECK(out.find("\"num_envs\": 10240") != std::string::npos);
  REQUIRE(cli({"print-config", "--preset", "paper-scale", "--derived"}, &out) == 0);
  const auto d = nlohmann::json::parse(out);
  CHECK(d.at("proprio_dim") == 47);
  CHECK(d.at("privileged_dim") == 213);
  CHECK(d.at("aux_dim") == 48);
}

TEST_CASE("cli: flags and config file") {
  const auto dir = scratch_dir("cli_cfg");
  std::ofstream(dir / "c.json") << R"({"run": {"num_envs": 12}, "seed": 5})";
  std::string out;
  REQUIRE(cli({"print-config", "--config", (dir / "c.json").string(), "--seed", "9", "--out",
               (dir / "echo").string()},
              &out) == 0);
  const auto j = nlohmann::json::parse(out);
  CHECK(j["run"]["num_envs"] == 12);
  CHECK(j["seed"] == 9);
  CHECK(slurp(dir / "echo" / "config.json") == out);
}

TEST_CASE("cli: eval twice writes identical reports") {
  const auto dir = scratch_dir("cli_eval");
  auto run = [&](const std::string& sub) {
    return cli({"eval", "--stand-still", "--seed", "4", "--out", (dir / sub).string(), "--set",
                "eval.episode_length=0.5", "--set", "eval.episodes_per_family=2"});
  };
  REQUIRE(run("a") == 0);
  REQUIRE(run("b") == 0);
  CHECK(slurp(dir / "a" / "eval_report.json") == slurp(dir / "b" / "eval_report.json"));
  CHECK(slurp(dir / "a" / "eval_report.csv") == slurp(dir / "b" / "eval_report.csv"));
  CHECK(std::filesystem::exists(dir / "a" / "config.json"));

  std::string out;
  REQUIRE(cli({"plot", "--csv", (dir / "a" / "eval_report.csv").string(), "--out",
               (dir / "plots").string(), "--columns", "tracking_error"},
              &out) == 0);
  CHECK(std::filesystem::exists(dir / "plots" / "tracking_error.svg"));
}
