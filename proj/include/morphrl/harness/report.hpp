#pragma once

#include <string>
#include <vector>

#include "morphrl/harness/eval.hpp"

namespace morphrl {

struct DeltaRow {
  std::string id;
  double return_a = 0.0;
  double return_b = 0.0;
  double delta = 0.0;
};

struct DeltaReport {
  std::vector<DeltaRow> rows;  // sorted by delta, descending; ties by id
  double mean_delta = 0.0;
  double positive_fraction = 0.0;  // share of rows with delta > 0
};

// Per-robot mean_return(a) − mean_return(b). Both reports must cover the
// same ids; otherwise InvalidInput lists the symmetric difference.
DeltaReport report_delta(const EvalReport& a, const EvalReport& b);

std::string delta_report_csv(const DeltaReport& report);
nlohmann::json delta_report_to_json(const DeltaReport& report);

}  // namespace morphrl
