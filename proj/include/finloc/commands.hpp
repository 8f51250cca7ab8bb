#pragma once

#include <string>

#include "finloc/config.hpp"
#include "finloc/matching.hpp"

namespace finloc {

// Worst relative finite-difference error per checked gradient family.
struct GradcheckReport {
  double fgl_max_error = 0.0;
  double ddf_max_error = 0.0;
  double gate_max_error = 0.0;
  int instances = 0;
  double epsilon = 1e-5;
  double threshold = 1e-5;

  bool passed() const {
    return fgl_max_error < threshold && ddf_max_error < threshold &&
           gate_max_error < threshold;
  }
};

// Knot table as CSV with header "n,w"; written to out_path, or stdout
// when out_path is empty.
void cmd_weights(const RunConfig& config, const std::string& out_path);

struct TrainFiles {
  std::string metrics_csv;
  std::string summary_json;
  std::string config_json;
};

// Generates the seeded problem, trains, and writes metrics.csv,
// summary.json and effective_config.json under out_dir. On divergence a
// diagnostics.json is left behind and the error rethrown.
TrainFiles cmd_train(const RunConfig& config, const std::string& out_dir);

// Probes the localization loss, the distillation loss (both argument
// orders) and the gating layer against central differences at seeded
// random points.
GradcheckReport run_gradient_checks(const RunConfig& config, int instances,
                                    double epsilon);

// Reads a cost matrix CSV (plain numbers, no header) and emits the
// optimal assignment as JSON to out_path, or stdout when empty.
Assignment cmd_match(const std::string& csv_path, const std::string& out_path);

}  // namespace finloc
