#include "walkprior/harness/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "walkprior/distill/trainer.hpp"
#include "walkprior/harness/config.hpp"
#include "walkprior/harness/eval.hpp"
#include "walkprior/harness/plot.hpp"

namespace wp::harness {

namespace {

struct Common {
  std::string config_path;
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;  // section.key=value
  bool progress = false;
};

void add_common(CLI::App* sub, Common& c, const std::string& default_out) {
  c.out = default_out;
  sub->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--preset", c.preset, "desk or paper-scale")
      ->check(CLI::IsMember({"desk", "paper-scale"}));
  sub->add_option("--seed", c.seed, "master seed")->each([&c](const std::string&) {
    c.seed_set = true;
  });
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--set", c.overrides, "override a key, e.g. run.num_envs=8");
}

nlohmann::json parse_value(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    return text;
  }
}

ExperimentConfig resolve(const Common& c) {
  nlohmann::json doc = nlohmann::json::object();
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      try {
        doc = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error("config " + c.config_path + ": parse error: " + e.what());
      }
    }
  }
  if (!c.preset.empty()) doc["preset"] = c.preset;
  for (const auto& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("--set expects section.key=value, got " + o);
    const std::string key = o.substr(0, eq);
    const auto dot = key.find('.');
    const nlohmann::json value = parse_value(o.substr(eq + 1));
    if (dot == std::string::npos) doc[key] = value;
    else doc[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  if (c.seed_set) doc["seed"] = c.seed;
  ExperimentConfig cfg = config_from_json(doc, "desk");
  if (c.progress) cfg.run.progress = true;
  return cfg;
}

void echo_config(const ExperimentConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir + "/config.json", std::ios::trunc);
  if (!f) throw Error("cannot write " + dir + "/config.json");
  f << dump_config(cfg);
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Teacher-student locomotion training and evaluation", "walkprior"};
  app.require_subcommand(1);

  Common teacher_c, student_c, eval_c, plot_c, export_c, print_c;
  std::string teacher_ckpt, eval_ckpt, student_ckpt;
  std::vector<std::string> csvs, columns;
  bool stand_still = false, derived = false;

  auto* tt = app.add_subcommand("train-teacher", "train the privileged teacher with PPO");
  add_common(tt, teacher_c, "runs/teacher");
  tt->add_flag("--progress", teacher_c.progress, "one line per iteration on stderr");

  auto* ts = app.add_subcommand("train-student", "distill a student from a teacher checkpoint");
  add_common(ts, student_c, "runs/student");
  ts->add_option("--teacher-ckpt", teacher_ckpt, "teacher checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  ts->add_flag("--progress", student_c.progress, "one line per iteration on stderr");

  auto* ev = app.add_subcommand("eval", "run the evaluation battery");
  add_common(ev, eval_c, "runs/eval");
  auto* ck_opt = ev->add_option("--ckpt", eval_ckpt, "teacher/student checkpoint or deploy export")
                     ->check(CLI::ExistingFile);
  auto* ss_opt = ev->add_flag("--stand-still", stand_still, "evaluate the nominal-pose policy");
  ck_opt->excludes(ss_opt);
  ss_opt->excludes(ck_opt);

  auto* pl = app.add_subcommand("plot", "render metrics CSV files to SVG");
  add_common(pl, plot_c, "plots");
  pl->add_option("--csv", csvs, "metrics CSV, one per seed")->required()->check(CLI::ExistingFile);
  pl->add_option("--columns", columns, "metric columns to plot (default: all)");

  auto* ex = app.add_subcommand("export-deploy", "write the actor-only deployment file");
  add_common(ex, export_c, "runs/student");
  ex->add_option("--student-ckpt", student_ckpt, "student checkpoint")
      ->required()
      ->check(CLI::ExistingFile);

  auto* pc = app.add_subcommand("print-config", "print the resolved configuration");
  add_common(pc, print_c, "");
  pc->add_flag("--derived", derived, "print derived dimensions instead");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (tt->parsed()) {
      const ExperimentConfig cfg = resolve(teacher_c);
      echo_config(cfg, teacher_c.out);
      const auto factory = make_factory(cfg);
      const auto res = ppo::train_teacher(factory, teacher_options(cfg, teacher_c.out));
      const auto& last = res.history.back();
      out << "teacher: " << res.history.size() << " iterations, tracking error "
          << last.tracking_error << ", mean level " << last.mean_level << "\n"
          << "checkpoint " << res.checkpoint_path << "\nmetrics " << res.metrics_path << "\n";
    } else if (ts->parsed()) {
      const ExperimentConfig cfg = resolve(student_c);
      echo_config(cfg, student_c.out);
      const auto factory = make_factory(cfg);
      const distill::CheckpointTeacher teacher = distill::CheckpointTeacher::load(
          teacher_ckpt, walker_spec(cfg), cfg.stacks, cfg.run.teacher_query_noisy);
      const auto res = distill::train_student(factory, teacher, student_options(cfg, student_c.out));
      const auto& last = res.history.back();
      out << "student: " << res.history.size() << " iterations, action distance "
          << last.action_distance << ", p_D(student) " << last.disc_prob_student << "\n"
          << "checkpoint " << res.checkpoint_path << "\ndeploy " << res.deploy_path
          << "\nmetrics " << res.metrics_path << "\n";
    } else if (ev->parsed()) {
      if (eval_ckpt.empty() && !stand_still) {
        err << "error: eval needs --ckpt or --stand-still\n\n" << ev->help();
        return 2;
      }
      const ExperimentConfig cfg = resolve(eval_c);
      echo_config(cfg, eval_c.out);
      std::unique_ptr<EvalPolicy> policy;
      if (stand_still) policy = std::make_unique<StandStillPolicy>(walker_spec(cfg).action_dim);
      else policy = load_eval_policy(eval_ckpt, cfg);
      const EvalReport r = evaluate(*policy, cfg);
      write_report(r, eval_c.out);
      out << report_csv(r);
    } else if (pl->parsed()) {
      PlotOptions o;
      o.columns = columns;
      for (const auto& p : emit_plots(csvs, plot_c.out, o)) out << p << "\n";
    } else if (ex->parsed()) {
      const nn::Checkpoint ck = nn::Checkpoint::load(student_ckpt, nn::kCheckpointMagic);
      const auto meta = nlohmann::json::parse(ck.text("meta"));
      if (meta.at("kind") != "student") throw Error(student_ckpt + " is not a student checkpoint");
      const ppo::ActorCritic ac = ppo::ActorCritic::load(ck);
      const ppo::ObsNormalizer norm = ppo::load_normalizer(ck);
      std::filesystem::create_directories(export_c.out);
      const std::string path = export_c.out + "/student.deploy";
      distill::make_deploy_export(ac, norm, ck.config_hash, ck.seed).save(path);
      out << path << "\n";
    } else if (pc->parsed()) {
      const ExperimentConfig cfg = resolve(print_c);
      if (derived) {
        out << derived_json(cfg).dump(2) << "\n";
      } else {
        out << dump_config(cfg);
      }
      if (!print_c.out.empty()) echo_config(cfg, print_c.out);
      err << "config hash " << config_hash(cfg) << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace wp::harness
