#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "morphrl/harness/eval.hpp"
#include "morphrl/harness/report.hpp"
#include "morphrl/harness/run_config.hpp"

namespace morphrl {

// Writes <id>.json per robot and split.json into config.robot_dir.
std::vector<std::filesystem::path> cmd_genrobots(const RunConfig& config);

// Runs training into <out_dir>/<arch>-<terrain>-<seed>; returns that path.
std::filesystem::path cmd_train(const RunConfig& config);

struct EvalCommand {
  std::filesystem::path checkpoint;
  std::string set = "test";
  std::size_t episodes = 3;
  std::uint64_t seed = 0;
  std::filesystem::path out;  // report stem: <out>.json and <out>.csv
  std::optional<std::filesystem::path> trace_dir;
};

EvalReport cmd_eval(const RunConfig& config, const EvalCommand& command);

struct PerturbCommand {
  std::filesystem::path checkpoint;
  std::vector<PerturbKind> kinds;
  std::size_t draws = 2;
  double strength = kDefaultPerturbStrength;
  std::size_t episodes = 3;
  std::uint64_t seed = 0;
  std::string set = "train";
  std::filesystem::path out_dir;  // perturb.csv plus perturb_<kind>.json
};

struct PerturbResult {
  std::vector<std::pair<PerturbKind, EvalReport>> by_kind;
  std::size_t rows = 0;
};

PerturbResult cmd_perturb_eval(const RunConfig& config, const PerturbCommand& command);

// Writes <out>.csv and <out>.json.
DeltaReport cmd_report_delta(const std::filesystem::path& report_a, const std::filesystem::path& report_b,
                             const std::filesystem::path& out);

// Training curves: iter plus one mean-return column per metrics file, then
// their mean and std. Delta: rank, id, delta, mean_delta.
void cmd_plotdata_training(const std::vector<std::filesystem::path>& metrics, const std::filesystem::path& out);
void cmd_plotdata_delta(const std::filesystem::path& delta_csv, const std::filesystem::path& out);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace morphrl
