// morphrl: robot-set generation, training, evaluation and reports.
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "morphrl/errors.hpp"
#include "morphrl/harness/commands.hpp"

namespace {

using namespace morphrl;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> arch;
  std::optional<std::string> terrain;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "run config file");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "seed");
  cmd->add_option("--arch", c.arch, "metamorph, modumorph, rmemo or rmomo");
  cmd->add_option("--terrain", c.terrain, "flat, incline, variable or obstacles");
  cmd->add_option("-o,--override", c.overrides, "section.key=value override")->take_all();
}

RunConfig resolve(const Common& c) {
  std::vector<std::string> overrides = c.overrides;
  if (c.seed) overrides.push_back("run.seed=" + std::to_string(*c.seed));
  if (c.arch) overrides.push_back("run.arch=" + *c.arch);
  if (c.terrain) overrides.push_back("trainer.terrain=" + *c.terrain);
  if (c.config.empty()) return parse_run_config("", overrides);
  return load_run_config(c.config, overrides);
}

std::vector<PerturbKind> parse_kinds(const std::string& text) {
  std::vector<PerturbKind> kinds;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) kinds.push_back(parse_perturb_kind(item));
  }
  return kinds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modular recurrent policies for morphology-agnostic locomotion"};
  app.require_subcommand(1);

  Common gen_opts, train_opts, eval_opts, perturb_opts;

  auto* gen = app.add_subcommand("genrobots", "sample a robot set and its train/validation/test split");
  add_common(gen, gen_opts, false);
  std::string gen_out;
  gen->add_option("--out", gen_out, "robot directory (overrides run.robot_dir; split.json goes inside)");

  auto* train = app.add_subcommand("train", "train a policy; writes <out_dir>/<arch>-<terrain>-<seed>");
  add_common(train, train_opts, true);

  auto* eval = app.add_subcommand("eval", "zero-shot evaluation of a checkpoint");
  add_common(eval, eval_opts, true);
  EvalCommand eval_cmd;
  std::string eval_trace;
  eval->add_option("--checkpoint", eval_cmd.checkpoint, "checkpoint (.mrl or stem)")->required();
  eval->add_option("--set", eval_cmd.set, "train, validation or test")->check(CLI::IsMember({"train", "validation", "test"}));
  std::optional<std::size_t> eval_episodes;
  eval->add_option("--episodes", eval_episodes, "episodes per robot (default run.eval_episodes)");
  eval->add_option("--out", eval_cmd.out, "report stem; writes .json and .csv")->required();
  eval->add_option("--trace-dir", eval_trace, "write one episode trace CSV per robot");

  auto* perturb = app.add_subcommand("perturb-eval", "evaluate on context-perturbed copies of a robot set");
  add_common(perturb, perturb_opts, true);
  PerturbCommand perturb_cmd;
  std::string kinds_text;
  std::optional<std::size_t> draws, perturb_episodes;
  perturb->add_option("--checkpoint", perturb_cmd.checkpoint, "checkpoint (.mrl or stem)")->required();
  perturb->add_option("--set", perturb_cmd.set, "base robots")->check(CLI::IsMember({"train", "validation", "test"}));
  perturb->add_option("--kinds", kinds_text, "comma-separated kinds (default perturb.kinds)");
  perturb->add_option("--draws", draws, "variants per robot and kind (default perturb.draws)");
  perturb->add_option("--episodes", perturb_episodes, "episodes per variant (default run.eval_episodes)");
  perturb->add_option("--out", perturb_cmd.out_dir, "output directory")->required();

  auto* delta = app.add_subcommand("report-delta", "per-robot return difference between two eval reports");
  std::string report_a, report_b, delta_out;
  delta->add_option("report_a", report_a, "eval report JSON")->required();
  delta->add_option("report_b", report_b, "eval report JSON")->required();
  delta->add_option("--out", delta_out, "output stem; writes .csv and .json")->required();

  auto* plot = app.add_subcommand("plotdata", "plot-ready CSV from metrics logs or a delta report");
  std::vector<std::string> plot_metrics;
  std::string plot_delta, plot_out;
  plot->add_option("--metrics", plot_metrics, "metrics.csv files (one curve each)");
  plot->add_option("--delta", plot_delta, "delta report CSV");
  plot->add_option("--out", plot_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      RunConfig config = resolve(gen_opts);
      if (!gen_out.empty()) {
        config.robot_dir = gen_out;
        config.split_file = config.robot_dir / "split.json";
      }
      const auto files = cmd_genrobots(config);
      std::cout << "wrote " << files.size() << " files to " << config.robot_dir.string() << "\n";
    } else if (*train) {
      const RunConfig config = resolve(train_opts);
      std::cout << cmd_train(config).string() << "\n";
    } else if (*eval) {
      const RunConfig config = resolve(eval_opts);
      eval_cmd.seed = config.seed;
      eval_cmd.episodes = eval_episodes.value_or(config.eval_episodes);
      if (!eval_trace.empty()) eval_cmd.trace_dir = eval_trace;
      const EvalReport report = cmd_eval(config, eval_cmd);
      std::printf("robots %zu  mean %.6g  std %.6g\n", report.robots.size(), report.mean, report.std);
    } else if (*perturb) {
      const RunConfig config = resolve(perturb_opts);
      perturb_cmd.kinds = kinds_text.empty() ? config.perturb_kinds : parse_kinds(kinds_text);
      perturb_cmd.draws = draws.value_or(config.perturb_draws);
      perturb_cmd.strength = config.perturb_strength;
      perturb_cmd.episodes = perturb_episodes.value_or(config.eval_episodes);
      perturb_cmd.seed = config.seed;
      const PerturbResult result = cmd_perturb_eval(config, perturb_cmd);
      for (const auto& [kind, report] : result.by_kind) {
        std::printf("%-12s robots %zu  mean %.6g  std %.6g\n", std::string(to_string(kind)).c_str(),
                    report.robots.size(), report.mean, report.std);
      }
      std::printf("rows %zu\n", result.rows);
    } else if (*delta) {
      const DeltaReport report = cmd_report_delta(report_a, report_b, delta_out);
      std::printf("robots %zu  mean_delta %.6g  positive_fraction %.6g\n", report.rows.size(), report.mean_delta,
                  report.positive_fraction);
    } else if (*plot) {
      if (plot_metrics.empty() == plot_delta.empty()) throw UsageError("plotdata needs exactly one of --metrics, --delta");
      if (!plot_delta.empty()) {
        cmd_plotdata_delta(plot_delta, plot_out);
      } else {
        cmd_plotdata_training({plot_metrics.begin(), plot_metrics.end()}, plot_out);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
