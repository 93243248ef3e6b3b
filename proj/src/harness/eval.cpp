#include "morphrl/harness/eval.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "morphrl/errors.hpp"
#include "morphrl/trainer/parallel.hpp"

namespace morphrl {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

Rng robot_rng(std::uint64_t seed, std::size_t robot) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(robot), 0xe7a1u};
  return Rng(seq);
}

void check_robot(const Policy& policy, const Morphology& robot) {
  if (robot.limbs.size() > policy.config().max_limbs) {
    throw InvalidInput("robot " + robot.id + " has " + std::to_string(robot.limbs.size()) +
                       " limbs; the checkpoint supports at most " + std::to_string(policy.config().max_limbs));
  }
}

// Runs one episode, calling on_step after every transition.
template <class OnStep>
double run_episode(const Policy& policy, const Morphology& robot, const EvalOptions& options, Rng& rng,
                   OnStep&& on_step) {
  NoGradGuard no_grad;
  ResetResult r = reset(robot, options.terrain, rng, options.sim);
  if (r.observation.lookahead_width() != policy.config().lookahead_width) {
    throw InvalidInput("checkpoint lookahead width does not match " + std::string(to_string(options.terrain)) +
                       " terrain");
  }
  ModularObservation obs = std::move(r.observation);
  const ContextCache cache = policy.prepare(obs);
  HiddenStateBank bank = policy.initial_bank(obs.slots());
  Array prev(Shape{obs.slots()});
  double total = 0.0;
  for (;;) {
    PolicyOutput out = policy.step(cache, obs, prev, &bank);
    SampledAction a = sample_action(out, obs.valid, rng);
    StepResult sr = step(r.state, robot, r.terrain, a.env_action.data(), options.sim);
    total += sr.reward;
    on_step(r.state, sr);
    if (out.new_hidden) bank = std::move(*out.new_hidden);
    prev = std::move(a.env_action);
    obs = std::move(sr.observation);
    if (sr.done) break;
  }
  return total;
}

}  // namespace

void refresh_aggregate(EvalReport& report) {
  std::vector<double> means;
  for (const auto& r : report.robots) means.push_back(r.mean_return);
  std::tie(report.mean, report.std) = mean_std(means);
}

EvalReport evaluate(const Policy& policy, const std::vector<Morphology>& robots, const EvalOptions& options) {
  if (options.episodes == 0) throw InvalidInput("evaluation needs at least one episode per robot");
  if (robots.empty()) throw InvalidInput("evaluation robot set is empty");
  for (const auto& robot : robots) check_robot(policy, robot);
  EvalReport report;
  report.robots.resize(robots.size());
  parallel_for(robots.size(), [&](std::size_t i) {
    Rng rng = robot_rng(options.seed, i);
    RobotEval& row = report.robots[i];
    row.id = robots[i].id;
    for (std::size_t e = 0; e < options.episodes; ++e) {
      row.returns.push_back(run_episode(policy, robots[i], options, rng, [](const SimState&, const StepResult&) {}));
    }
    std::tie(row.mean_return, row.std_return) = mean_std(row.returns);
  });
  refresh_aggregate(report);
  return report;
}

json eval_report_to_json(const EvalReport& report) {
  json robots = json::array();
  for (const auto& r : report.robots) {
    robots.push_back(json{{"id", r.id}, {"mean_return", r.mean_return}, {"std_return", r.std_return},
                          {"returns", r.returns}});
  }
  return json{{"robots", robots}, {"aggregate", json{{"mean", report.mean}, {"std", report.std}}}};
}

EvalReport eval_report_from_json(const json& j) {
  EvalReport report;
  try {
    for (const auto& r : j.at("robots")) {
      RobotEval row;
      row.id = r.at("id").get<std::string>();
      row.mean_return = r.at("mean_return").get<double>();
      row.std_return = r.value("std_return", 0.0);
      if (r.contains("returns")) row.returns = r.at("returns").get<std::vector<double>>();
      report.robots.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed eval report: ") + e.what());
  }
  refresh_aggregate(report);
  return report;
}

std::string eval_report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "robot_id,mean_return,std_return,episodes\n";
  for (const auto& r : report.robots) {
    out << r.id << "," << fmt(r.mean_return) << "," << fmt(r.std_return) << "," << r.returns.size() << "\n";
  }
  out << "ALL," << fmt(report.mean) << "," << fmt(report.std) << "," << report.robots.size() << "\n";
  return out.str();
}

std::vector<TraceRow> trace_episode(const Policy& policy, const Morphology& robot, const EvalOptions& options) {
  check_robot(policy, robot);
  Rng rng = robot_rng(options.seed, 0);
  std::vector<TraceRow> rows;
  run_episode(policy, robot, options, rng, [&](const SimState& s, const StepResult& sr) {
    rows.push_back(TraceRow{s.t, s.x, sr.reward, s.angles, s.omegas});
  });
  return rows;
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::ostringstream out;
  out << "t,x,reward";
  const std::size_t n = rows.empty() ? 0 : rows.front().angles.size();
  for (std::size_t i = 0; i < n; ++i) out << ",angle_" << i << ",omega_" << i;
  out << "\n";
  for (const auto& r : rows) {
    out << r.t << "," << fmt(r.x) << "," << fmt(r.reward);
    for (std::size_t i = 0; i < n; ++i) out << "," << fmt(r.angles[i]) << "," << fmt(r.omegas[i]);
    out << "\n";
  }
  return out.str();
}

}  // namespace morphrl
