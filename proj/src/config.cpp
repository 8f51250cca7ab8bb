#include "finloc/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "finloc/errors.hpp"

namespace finloc {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& prefix,
                    std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("config: unknown key " + prefix + it.key());
    }
  }
}

const json* maybe_section(const json& root, const std::string& key) {
  if (!root.contains(key)) {
    return nullptr;
  }
  const json& section = root.at(key);
  if (!section.is_object()) {
    throw ConfigError("config: " + key + " must be an object");
  }
  return &section;
}

void read_number(const json& obj, const std::string& path, const char* key,
                 double* out) {
  if (!obj.contains(key)) {
    return;
  }
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw ConfigError("config: " + path + key + " must be a number");
  }
  *out = v.get<double>();
}

void read_int(const json& obj, const std::string& path, const char* key,
              int* out) {
  if (!obj.contains(key)) {
    return;
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer() ||
      v.get<std::int64_t>() > std::numeric_limits<int>::max() ||
      v.get<std::int64_t>() < std::numeric_limits<int>::min()) {
    throw ConfigError("config: " + path + key + " must be an integer");
  }
  *out = static_cast<int>(v.get<std::int64_t>());
}

void read_bool(const json& obj, const std::string& path, const char* key,
               bool* out) {
  if (!obj.contains(key)) {
    return;
  }
  const json& v = obj.at(key);
  if (!v.is_boolean()) {
    throw ConfigError("config: " + path + key + " must be a boolean");
  }
  *out = v.get<bool>();
}

void read_seed(const json& obj, const std::string& path, const char* key,
               std::uint64_t* out) {
  if (!obj.contains(key)) {
    return;
  }
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) {
    throw ConfigError("config: " + path + key +
                      " must be a non-negative integer");
  }
  *out = v.get<std::uint64_t>();
}

void check(bool ok, const char* message) {
  if (!ok) {
    throw ConfigError(std::string("config: ") + message);
  }
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!root.is_object()) {
    throw ConfigError("config: top level must be an object");
  }
  reject_unknown(root, "",
                 {"weighting", "layers", "temperature", "loss_weights",
                  "train", "data"});

  RunConfig cfg;
  if (const json* w = maybe_section(root, "weighting")) {
    reject_unknown(*w, "weighting.", {"a", "c", "n_bins"});
    read_number(*w, "weighting.", "a", &cfg.weighting.a);
    read_number(*w, "weighting.", "c", &cfg.weighting.c);
    read_int(*w, "weighting.", "n_bins", &cfg.weighting.n_bins);
  }
  read_int(root, "", "layers", &cfg.layers);
  read_number(root, "", "temperature", &cfg.temperature);
  if (const json* lw = maybe_section(root, "loss_weights")) {
    reject_unknown(*lw, "loss_weights.", {"fgl", "ddf"});
    read_number(*lw, "loss_weights.", "fgl", &cfg.loss_weights.fgl);
    read_number(*lw, "loss_weights.", "ddf", &cfg.loss_weights.ddf);
  }
  if (const json* t = maybe_section(root, "train")) {
    reject_unknown(*t, "train.",
                   {"steps", "learning_rate", "seed", "rematch_every",
                    "distill"});
    read_int(*t, "train.", "steps", &cfg.train.steps);
    read_number(*t, "train.", "learning_rate", &cfg.train.learning_rate);
    read_seed(*t, "train.", "seed", &cfg.train.seed);
    read_int(*t, "train.", "rematch_every", &cfg.train.rematch_every);
    read_bool(*t, "train.", "distill", &cfg.train.distill);
  }
  if (const json* d = maybe_section(root, "data")) {
    reject_unknown(*d, "data.",
                   {"num_queries", "num_gt", "scene_size", "noise"});
    read_int(*d, "data.", "num_queries", &cfg.data.num_queries);
    read_int(*d, "data.", "num_gt", &cfg.data.num_gt);
    read_number(*d, "data.", "scene_size", &cfg.data.scene_size);
    read_number(*d, "data.", "noise", &cfg.data.noise);
  }

  validate_config(cfg);
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("config: cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw IoError("config: cannot read " + path);
  }
  return parse_config(buffer.str());
}

std::string serialize_config(const RunConfig& cfg) {
  json root;
  root["weighting"] = {{"a", cfg.weighting.a},
                       {"c", cfg.weighting.c},
                       {"n_bins", cfg.weighting.n_bins}};
  root["layers"] = cfg.layers;
  root["temperature"] = cfg.temperature;
  root["loss_weights"] = {{"fgl", cfg.loss_weights.fgl},
                          {"ddf", cfg.loss_weights.ddf}};
  root["train"] = {{"steps", cfg.train.steps},
                   {"learning_rate", cfg.train.learning_rate},
                   {"seed", cfg.train.seed},
                   {"rematch_every", cfg.train.rematch_every},
                   {"distill", cfg.train.distill}};
  root["data"] = {{"num_queries", cfg.data.num_queries},
                  {"num_gt", cfg.data.num_gt},
                  {"scene_size", cfg.data.scene_size},
                  {"noise", cfg.data.noise}};
  return root.dump(2) + "\n";
}

void validate_config(const RunConfig& cfg) {
  check(std::isfinite(cfg.weighting.a) && cfg.weighting.a > 0.0,
        "weighting.a must be finite and > 0");
  check(std::isfinite(cfg.weighting.c) && cfg.weighting.c > 0.0,
        "weighting.c must be finite and > 0");
  check(cfg.weighting.n_bins >= 4 && cfg.weighting.n_bins % 2 == 0,
        "weighting.n_bins must be even and >= 4");
  check(cfg.layers >= 2, "layers must be >= 2");
  check(std::isfinite(cfg.temperature) && cfg.temperature > 0.0,
        "temperature must be finite and > 0");
  check(std::isfinite(cfg.loss_weights.fgl) && cfg.loss_weights.fgl >= 0.0,
        "loss_weights.fgl must be finite and >= 0");
  check(std::isfinite(cfg.loss_weights.ddf) && cfg.loss_weights.ddf >= 0.0,
        "loss_weights.ddf must be finite and >= 0");
  check(cfg.train.steps >= 0, "train.steps must be >= 0");
  check(std::isfinite(cfg.train.learning_rate) &&
            cfg.train.learning_rate > 0.0,
        "train.learning_rate must be finite and > 0");
  check(cfg.train.rematch_every >= 1, "train.rematch_every must be >= 1");
  check(cfg.data.num_gt >= 1, "data.num_gt must be >= 1");
  check(cfg.data.num_queries >= cfg.data.num_gt,
        "data.num_queries must be >= data.num_gt");
  check(std::isfinite(cfg.data.scene_size) && cfg.data.scene_size > 0.0,
        "data.scene_size must be finite and > 0");
  check(std::isfinite(cfg.data.noise) && cfg.data.noise >= 0.0,
        "data.noise must be finite and >= 0");
}

TrainConfig to_train_config(const RunConfig& cfg) {
  TrainConfig t;
  t.steps = cfg.train.steps;
  t.learning_rate = cfg.train.learning_rate;
  t.weighting_range_scale = cfg.weighting.a;
  t.weighting_curvature = cfg.weighting.c;
  t.num_bins = cfg.weighting.n_bins;
  t.temperature = cfg.temperature;
  t.fgl_weight = cfg.loss_weights.fgl;
  t.ddf_weight = cfg.loss_weights.ddf;
  t.distill = cfg.train.distill;
  t.rematch_every = cfg.train.rematch_every;
  return t;
}

ToyProblem make_problem(const RunConfig& cfg) {
  ToyProblem problem =
      generate_problem(cfg.train.seed, cfg.data.num_queries, cfg.data.num_gt,
                       cfg.data.scene_size, cfg.data.noise);
  problem.layers = cfg.layers;
  return problem;
}

}  // namespace finloc
