#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphrl/arch/policy.hpp"
#include "morphrl/sim/simulator.hpp"

namespace morphrl {

struct RobotEval {
  std::string id;
  double mean_return = 0.0;
  double std_return = 0.0;
  std::vector<double> returns;
};

struct EvalReport {
  std::vector<RobotEval> robots;
  double mean = 0.0;  // arithmetic mean of per-robot means
  double std = 0.0;   // population std of per-robot means
};

struct EvalOptions {
  TerrainKind terrain = TerrainKind::flat;
  std::size_t episodes = 3;
  std::uint64_t seed = 0;
  SimConfig sim;
};

// Sampled actions from per-robot seeded streams; banks start at zero each
// episode. Robots wider than the policy's max_limbs raise InvalidInput.
EvalReport evaluate(const Policy& policy, const std::vector<Morphology>& robots, const EvalOptions& options);

// Recomputes the aggregate from the per-robot rows.
void refresh_aggregate(EvalReport& report);

nlohmann::json eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);
std::string eval_report_csv(const EvalReport& report);

struct TraceRow {
  int t = 0;
  double x = 0.0;
  double reward = 0.0;
  std::vector<double> angles;
  std::vector<double> omegas;
};

// One sampled episode, recorded step by step.
std::vector<TraceRow> trace_episode(const Policy& policy, const Morphology& robot, const EvalOptions& options);
std::string trace_csv(const std::vector<TraceRow>& rows);

}  // namespace morphrl
