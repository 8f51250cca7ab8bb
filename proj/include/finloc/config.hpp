#pragma once

#include <cstdint>
#include <string>

#include "finloc/toytrain.hpp"

namespace finloc {

// Everything a run needs, with the defaults used throughout. JSON form
// mirrors the nesting: {"weighting": {"a": ...}, "train": {...}, ...}.
struct RunConfig {
  struct Weighting {
    double a = 0.5;
    double c = 0.25;
    int n_bins = 32;
    bool operator==(const Weighting&) const = default;
  };
  struct LossWeights {
    double fgl = 0.15;
    double ddf = 1.5;
    bool operator==(const LossWeights&) const = default;
  };
  struct Train {
    int steps = 500;
    double learning_rate = 0.5;
    std::uint64_t seed = 1;
    int rematch_every = 10;
    bool distill = true;
    bool operator==(const Train&) const = default;
  };
  struct Data {
    int num_queries = 8;
    int num_gt = 4;
    double scene_size = 100.0;
    double noise = 0.05;
    bool operator==(const Data&) const = default;
  };

  Weighting weighting;
  int layers = 3;
  double temperature = 5.0;
  LossWeights loss_weights;
  Train train;
  Data data;

  bool operator==(const RunConfig&) const = default;
};

// Strict parse: unknown keys, wrong types and out-of-range values are
// all ConfigErrors naming the offending dotted key. Missing keys keep
// their defaults.
RunConfig parse_config(const std::string& json_text);

// Reads and parses a JSON config file; IoError if unreadable.
RunConfig load_config_file(const std::string& path);

// JSON text that parses back to an identical RunConfig.
std::string serialize_config(const RunConfig& config);

// Range checks shared by parse and flag overrides.
void validate_config(const RunConfig& config);

// Conversions into the trainer's vocabulary.
TrainConfig to_train_config(const RunConfig& config);
ToyProblem make_problem(const RunConfig& config);

}  // namespace finloc
