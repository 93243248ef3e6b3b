#include "morphrl/harness/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "morphrl/errors.hpp"

namespace morphrl {

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
}  // namespace

DeltaReport report_delta(const EvalReport& a, const EvalReport& b) {
  std::map<std::string, double> ma, mb;
  for (const auto& r : a.robots)
    if (!ma.emplace(r.id, r.mean_return).second) throw InvalidInput("report A lists " + r.id + " twice");
  for (const auto& r : b.robots)
    if (!mb.emplace(r.id, r.mean_return).second) throw InvalidInput("report B lists " + r.id + " twice");
  std::vector<std::string> only_a, only_b;
  for (const auto& [id, _] : ma)
    if (!mb.contains(id)) only_a.push_back(id);
  for (const auto& [id, _] : mb)
    if (!ma.contains(id)) only_b.push_back(id);
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg = "reports cover different robots;";
    if (!only_a.empty()) {
      msg += " only in A:";
      for (const auto& id : only_a) msg += " " + id;
      if (!only_b.empty()) msg += ";";
    }
    if (!only_b.empty()) {
      msg += " only in B:";
      for (const auto& id : only_b) msg += " " + id;
    }
    throw InvalidInput(msg);
  }
  DeltaReport out;
  std::size_t positive = 0;
  for (const auto& [id, ra] : ma) {
    const double d = ra - mb.at(id);
    out.rows.push_back(DeltaRow{id, ra, mb.at(id), d});
    out.mean_delta += d;
    if (d > 0.0) ++positive;
  }
  if (!out.rows.empty()) {
    out.mean_delta /= static_cast<double>(out.rows.size());
    out.positive_fraction = static_cast<double>(positive) / static_cast<double>(out.rows.size());
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const DeltaRow& x, const DeltaRow& y) {
    return x.delta != y.delta ? x.delta > y.delta : x.id < y.id;
  });
  return out;
}

std::string delta_report_csv(const DeltaReport& report) {
  std::ostringstream out;
  out << "rank,robot_id,return_a,return_b,delta\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    out << i + 1 << "," << r.id << "," << fmt(r.return_a) << "," << fmt(r.return_b) << "," << fmt(r.delta) << "\n";
  }
  out << "# mean_delta," << fmt(report.mean_delta) << "\n";
  out << "# positive_fraction," << fmt(report.positive_fraction) << "\n";
  return out.str();
}

nlohmann::json delta_report_to_json(const DeltaReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"id", r.id}, {"return_a", r.return_a}, {"return_b", r.return_b}, {"delta", r.delta}});
  }
  return {{"rows", rows}, {"mean_delta", report.mean_delta}, {"positive_fraction", report.positive_fraction}};
}

}  // namespace morphrl
