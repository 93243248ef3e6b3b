#include "morphrl/harness/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "morphrl/domain/io.hpp"
#include "morphrl/errors.hpp"
#include "morphrl/trainer/train.hpp"

namespace morphrl {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void ensure_parent(const std::filesystem::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  std::filesystem::path p = stem;
  p += suffix;
  return p;
}

Policy checkpoint_policy(const std::filesystem::path& path) {
  return load_checkpoint(path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) cells.push_back(cell);
  return cells;
}

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::filesystem::path> cmd_genrobots(const RunConfig& config) {
  const std::size_t total = config.counts.train + config.counts.validation + config.counts.test;
  if (total == 0) throw ConfigError("robots: all split counts are zero");
  ensure_dir(config.robot_dir);
  Rng rng(config.seed);
  const std::size_t width = std::max<std::size_t>(3, std::to_string(total - 1).size());
  std::set<std::string> topologies;
  std::vector<std::string> ids;
  std::vector<std::filesystem::path> written;
  constexpr std::size_t kMaxAttempts = 100000;
  for (std::size_t i = 0; i < total; ++i) {
    std::string digits = std::to_string(i);
    const std::string id = "robot_" + std::string(width - std::min(width, digits.size()), '0') + digits;
    Morphology m;
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt == kMaxAttempts) {
        throw ConfigError("robots.unique_topologies: no new topology after " + std::to_string(kMaxAttempts) +
                          " draws; widen the limb range or lower the counts");
      }
      m = sample_morphology(rng, config.gen, id);
      if (!config.unique_topologies || topologies.insert(topology_signature(m)).second) break;
    }
    const auto path = config.robot_dir / (m.id + ".json");
    save_morphology(path, m);
    written.push_back(path);
    ids.push_back(m.id);
  }
  const RobotSplit split = split_robots(ids, config.seed, config.counts);
  ensure_parent(config.split_file);
  write_json_file(config.split_file, split_to_json(split));
  written.push_back(config.split_file);
  return written;
}

std::filesystem::path cmd_train(const RunConfig& config) {
  const auto robots = load_robot_set(config.robot_dir, config.split_file, config.train_set);
  const auto dir = config.out_dir / run_name(config);
  train(config.trainer, config.model, robots, dir);
  return dir;
}

EvalReport cmd_eval(const RunConfig& config, const EvalCommand& command) {
  if (command.episodes == 0) throw InvalidInput("eval: --episodes must be at least 1");
  const Policy policy = checkpoint_policy(command.checkpoint);
  const auto robots = load_robot_set(config.robot_dir, config.split_file, command.set);
  EvalOptions options{config.trainer.terrain, command.episodes, command.seed, config.trainer.sim};
  EvalReport report = evaluate(policy, robots, options);
  if (!command.out.empty()) {
    ensure_parent(command.out);
    write_json_file(with_suffix(command.out, ".json"), eval_report_to_json(report));
    write_text_file(with_suffix(command.out, ".csv"), eval_report_csv(report));
  }
  if (command.trace_dir) {
    for (const auto& robot : robots) {
      write_text_file(*command.trace_dir / (robot.id + ".csv"), trace_csv(trace_episode(policy, robot, options)));
    }
  }
  return report;
}

PerturbResult cmd_perturb_eval(const RunConfig& config, const PerturbCommand& command) {
  if (command.kinds.empty()) throw InvalidInput("perturb-eval: no perturbation kinds");
  if (command.draws == 0) throw InvalidInput("perturb-eval: draws must be at least 1");
  if (command.episodes == 0) throw InvalidInput("perturb-eval: episodes must be at least 1");
  const Policy policy = checkpoint_policy(command.checkpoint);
  const auto base = load_robot_set(config.robot_dir, config.split_file, command.set);
  EvalOptions options{config.trainer.terrain, command.episodes, command.seed, config.trainer.sim};

  if (!command.out_dir.empty()) ensure_dir(command.out_dir);
  PerturbResult result;
  std::ostringstream csv;
  csv << "kind,base_robot,robot_id,mean_return,std_return\n";
  for (std::size_t k = 0; k < command.kinds.size(); ++k) {
    const PerturbKind kind = command.kinds[k];
    std::vector<Morphology> variants;
    std::vector<std::string> bases;
    for (std::size_t r = 0; r < base.size(); ++r) {
      std::seed_seq seq{static_cast<std::uint32_t>(command.seed), static_cast<std::uint32_t>(command.seed >> 32),
                        static_cast<std::uint32_t>(kind), static_cast<std::uint32_t>(r)};
      Rng rng(seq);
      for (std::size_t d = 0; d < command.draws; ++d) {
        variants.push_back(perturb_context(base[r], kind, rng, command.strength, static_cast<int>(d)));
        bases.push_back(base[r].id);
      }
    }
    EvalOptions kind_options = options;
    kind_options.seed = command.seed + 7919 * (k + 1);
    EvalReport report = evaluate(policy, variants, kind_options);
    for (std::size_t i = 0; i < report.robots.size(); ++i) {
      const auto& row = report.robots[i];
      csv << to_string(kind) << "," << bases[i] << "," << row.id << "," << fmt(row.mean_return) << ","
          << fmt(row.std_return) << "\n";
      ++result.rows;
    }
    if (!command.out_dir.empty()) {
      write_json_file(command.out_dir / ("perturb_" + std::string(to_string(kind)) + ".json"),
                      eval_report_to_json(report));
    }
    result.by_kind.emplace_back(kind, std::move(report));
  }
  if (!command.out_dir.empty()) {
    write_text_file(command.out_dir / "perturb.csv", csv.str());
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& [kind, report] : result.by_kind) {
      summary.push_back({{"kind", std::string(to_string(kind))},
                         {"robots", report.robots.size()},
                         {"mean", report.mean},
                         {"std", report.std}});
    }
    write_json_file(command.out_dir / "perturb_summary.json", summary);
  }
  return result;
}

DeltaReport cmd_report_delta(const std::filesystem::path& report_a, const std::filesystem::path& report_b,
                             const std::filesystem::path& out) {
  const EvalReport a = eval_report_from_json(read_json_file(report_a));
  const EvalReport b = eval_report_from_json(read_json_file(report_b));
  DeltaReport delta = report_delta(a, b);
  if (!out.empty()) {
    write_text_file(with_suffix(out, ".csv"), delta_report_csv(delta));
    write_json_file(with_suffix(out, ".json"), delta_report_to_json(delta));
  }
  return delta;
}

void cmd_plotdata_training(const std::vector<std::filesystem::path>& metrics, const std::filesystem::path& out) {
  if (metrics.empty()) throw InvalidInput("plotdata: no metrics files");
  std::vector<std::vector<double>> curves;
  for (const auto& path : metrics) {
    std::stringstream in(read_text_file(path));
    std::string line;
    std::getline(in, line);
    if (!line.starts_with("iter,robot_id,mean_return")) throw InvalidInput(path.string() + " is not a metrics log");
    std::vector<double> curve;
    while (std::getline(in, line)) {
      const auto cells = split_csv_line(line);
      if (cells.size() < 3) throw InvalidInput("short row in " + path.string());
      if (cells[1] == "ALL") curve.push_back(std::stod(cells[2]));
    }
    curves.push_back(std::move(curve));
  }
  std::size_t n = curves.front().size();
  for (const auto& c : curves) n = std::min(n, c.size());
  std::ostringstream csv;
  csv << "iter";
  for (std::size_t r = 0; r < curves.size(); ++r) csv << ",run_" << r;
  csv << ",mean,std\n";
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (const auto& c : curves) m += c[i];
    m /= static_cast<double>(curves.size());
    double s = 0.0;
    for (const auto& c : curves) s += (c[i] - m) * (c[i] - m);
    s = std::sqrt(s / static_cast<double>(curves.size()));
    csv << i;
    for (const auto& c : curves) csv << "," << fmt(c[i]);
    csv << "," << fmt(m) << "," << fmt(s) << "\n";
  }
  write_text_file(out, csv.str());
}

void cmd_plotdata_delta(const std::filesystem::path& delta_csv, const std::filesystem::path& out) {
  std::stringstream in(read_text_file(delta_csv));
  std::string line;
  std::getline(in, line);
  if (!line.starts_with("rank,robot_id")) throw InvalidInput(delta_csv.string() + " is not a delta report");
  std::vector<std::vector<std::string>> rows;
  std::string mean = "0";
  while (std::getline(in, line)) {
    const auto cells = split_csv_line(line);
    if (line.starts_with("# mean_delta") && cells.size() == 2) mean = cells[1];
    if (line.starts_with("#")) continue;
    if (cells.size() < 5) throw InvalidInput("short row in " + delta_csv.string());
    rows.push_back(cells);
  }
  std::ostringstream csv;
  csv << "x,robot_id,delta,mean_delta\n";
  for (const auto& r : rows) csv << r[0] << "," << r[1] << "," << r[4] << "," << mean << "\n";
  write_text_file(out, csv.str());
}

}  // namespace morphrl
