#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "finloc/config.hpp"
#include "finloc/errors.hpp"

using namespace finloc;

namespace {

std::string message_of(const char* json) {
  try {
    parse_config(json);
    return "";
  } catch (const Error& e) {
    return e.what();
  }
}

}  // namespace

TEST_CASE("an empty object keeps every default") {
  CHECK(parse_config("{}") == RunConfig{});
  const RunConfig cfg;
  CHECK(cfg.weighting.a == 0.5);
  CHECK(cfg.weighting.c == 0.25);
  CHECK(cfg.weighting.n_bins == 32);
  CHECK(cfg.layers == 3);
  CHECK(cfg.temperature == 5.0);
  CHECK(cfg.loss_weights.fgl == 0.15);
  CHECK(cfg.loss_weights.ddf == 1.5);
  CHECK(cfg.train.steps == 500);
  CHECK(cfg.train.learning_rate == 0.5);
  CHECK(cfg.train.seed == 1);
  CHECK(cfg.train.rematch_every == 10);
  CHECK(cfg.train.distill);
  CHECK(cfg.data.num_queries == 8);
  CHECK(cfg.data.num_gt == 4);
  CHECK(cfg.data.scene_size == 100.0);
  CHECK(cfg.data.noise == 0.05);
}

TEST_CASE("partial configs override only what they mention") {
  const RunConfig cfg = parse_config(R"({"train": {"steps": 7}, "layers": 5})");
  CHECK(cfg.train.steps == 7);
  CHECK(cfg.layers == 5);
  CHECK(cfg.train.learning_rate == 0.5);
  CHECK(cfg.weighting.n_bins == 32);
}

TEST_CASE("serialization round-trips every field") {
  RunConfig cfg;
  cfg.weighting = {0.75, 0.1, 16};
  cfg.layers = 4;
  cfg.temperature = 2.5;
  cfg.loss_weights = {0.3, 0.7};
  cfg.train.steps = 123;
  cfg.train.learning_rate = 0.05;
  cfg.train.seed = 18446744073709551615ull;  // largest possible seed
  cfg.train.rematch_every = 3;
  cfg.train.distill = false;
  cfg.data = {12, 5, 64.0, 0.125};

  const std::string text = serialize_config(cfg);
  CHECK(text.back() == '\n');
  CHECK(parse_config(text) == cfg);
}

TEST_CASE("malformed json is a parse error, unknown keys are config errors") {
  CHECK_THROWS_AS(parse_config("{"), ParseError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"data": {"bogus": 1}})"), ConfigError);
  CHECK(message_of(R"({"data": {"bogus": 1}})").find("data.bogus") !=
        std::string::npos);
  CHECK(message_of(R"({"weighting": {"knots": []}})").find("weighting.knots") !=
        std::string::npos);
}

TEST_CASE("type mismatches name the offending key") {
  CHECK_THROWS_AS(parse_config(R"({"train": {"steps": "many"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"steps": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"distill": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"train": {"seed": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"layers": {}})"), ConfigError);
  CHECK(message_of(R"({"train": {"seed": -1}})").find("train.seed") !=
        std::string::npos);
}

TEST_CASE("out-of-range values are rejected with their dotted key") {
  for (const char* bad : {
           R"({"train": {"steps": -1}})",
           R"({"train": {"learning_rate": 0}})",
           R"({"train": {"rematch_every": 0}})",
           R"({"temperature": 0})",
           R"({"weighting": {"a": 0}})",
           R"({"weighting": {"c": -0.5}})",
           R"({"weighting": {"n_bins": 31}})",
           R"({"weighting": {"n_bins": 2}})",
           R"({"layers": 1})",
           R"({"loss_weights": {"fgl": -0.1}})",
           R"({"data": {"noise": -0.01}})",
           R"({"data": {"scene_size": 0}})",
           R"({"data": {"num_queries": 0}})",
           R"({"data": {"num_queries": 3, "num_gt": 4}})",
       }) {
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
  }
  CHECK(message_of(R"({"train": {"learning_rate": 0}})")
            .find("train.learning_rate") != std::string::npos);
}

TEST_CASE("config files load and missing ones are io errors") {
  const std::string path = "/tmp/finloc_test_cfg.json";
  {
    std::ofstream out(path);
    out << R"({"train": {"steps": 11, "seed": 99}})" << "\n";
  }
  const RunConfig cfg = load_config_file(path);
  CHECK(cfg.train.steps == 11);
  CHECK(cfg.train.seed == 99);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_config_file("/nonexistent/nope.json"), IoError);
}

TEST_CASE("conversion into the trainer vocabulary") {
  RunConfig cfg;
  cfg.weighting = {0.6, 0.2, 16};
  cfg.temperature = 3.0;
  cfg.loss_weights = {0.25, 2.0};
  cfg.train.steps = 77;
  cfg.train.learning_rate = 0.125;
  cfg.train.rematch_every = 4;
  cfg.train.distill = false;

  const TrainConfig t = to_train_config(cfg);
  CHECK(t.steps == 77);
  CHECK(t.learning_rate == 0.125);
  CHECK(t.weighting_range_scale == 0.6);
  CHECK(t.weighting_curvature == 0.2);
  CHECK(t.num_bins == 16);
  CHECK(t.temperature == 3.0);
  CHECK(t.fgl_weight == 0.25);
  CHECK(t.ddf_weight == 2.0);
  CHECK_FALSE(t.distill);
  CHECK(t.distill_gradient);  // not a config surface, always on
  CHECK(t.rematch_every == 4);

  cfg.data = {10, 2, 64.0, 0.0};
  cfg.layers = 4;
  const ToyProblem p = make_problem(cfg);
  CHECK(p.initial_boxes.size() == 10);
  CHECK(p.gt_boxes.size() == 2);
  CHECK(p.scene_size == 64.0);
  CHECK(p.layers == 4);
  CHECK(p.seed == cfg.train.seed);
}
