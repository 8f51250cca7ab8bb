#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "finloc/commands.hpp"
#include "finloc/config.hpp"
#include "finloc/errors.hpp"
#include "finloc/numeric.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

}  // namespace

int main(int argc, char** argv) {
  // First pass pulls out --config only, so the file can seed the
  // defaults before the real parser applies flag overrides on top.
  std::string config_path;
  {
    CLI::App pre;
    pre.allow_extras();
    pre.set_help_flag();
    pre.add_option("--config", config_path);
    try {
      pre.parse(argc, argv);
    } catch (const CLI::ParseError&) {
      // the real parser below reports problems
    }
  }

  finloc::RunConfig cfg;
  if (!config_path.empty()) {
    try {
      cfg = finloc::load_config_file(config_path);
    } catch (const finloc::IoError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitIo;
    } catch (const finloc::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
  }

  CLI::App app{"box refinement over edge-offset distributions"};
  app.require_subcommand(1);

  std::string config_path_again;
  app.add_option("--config", config_path_again, "JSON config file");
  std::string out_path;
  app.add_option("--out", out_path, "output file (weights, match) or directory (train)");
  std::uint64_t seed_flag = 0;
  auto* seed_opt = app.add_option("--seed", seed_flag, "alias for --train.seed");

  app.add_option("--weighting.a", cfg.weighting.a, "offset scale");
  app.add_option("--weighting.c", cfg.weighting.c, "knot curvature");
  app.add_option("--weighting.n_bins", cfg.weighting.n_bins, "bin count");
  app.add_option("--layers", cfg.layers, "refinement layers");
  app.add_option("--temperature", cfg.temperature, "distillation temperature");
  app.add_option("--loss_weights.fgl", cfg.loss_weights.fgl, "localization loss weight");
  app.add_option("--loss_weights.ddf", cfg.loss_weights.ddf, "distillation loss weight");
  app.add_option("--train.steps", cfg.train.steps, "gradient steps");
  app.add_option("--train.learning_rate", cfg.train.learning_rate, "step size");
  app.add_option("--train.seed", cfg.train.seed, "RNG seed");
  app.add_option("--train.rematch_every", cfg.train.rematch_every, "steps between rematches");
  app.add_option("--train.distill", cfg.train.distill, "enable distillation (true/false)");
  app.add_option("--data.num_queries", cfg.data.num_queries, "query count");
  app.add_option("--data.num_gt", cfg.data.num_gt, "ground-truth count");
  app.add_option("--data.scene_size", cfg.data.scene_size, "scene side length");
  app.add_option("--data.noise", cfg.data.noise, "jitter fraction of the scene");

  auto* weights_cmd =
      app.add_subcommand("weights", "dump the offset knot table as CSV");
  auto* train_cmd = app.add_subcommand("train", "run the toy trainer");
  auto* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "compare analytic gradients against finite differences");
  auto* match_cmd =
      app.add_subcommand("match", "solve a CSV cost matrix assignment");

  double epsilon = 1e-5;
  int instances = 50;
  gradcheck_cmd->add_option("--epsilon", epsilon, "finite-difference step");
  gradcheck_cmd->add_option("--instances", instances,
                            "random instances per gradient family");
  std::string cost_csv;
  match_cmd->add_option("cost_csv", cost_csv, "cost matrix CSV path")
      ->required();

  for (CLI::App* sub : {weights_cmd, train_cmd, gradcheck_cmd, match_cmd}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (seed_opt->count() > 0) {
      cfg.train.seed = seed_flag;
    }
    finloc::validate_config(cfg);

    if (weights_cmd->parsed()) {
      finloc::cmd_weights(cfg, out_path);
    } else if (train_cmd->parsed()) {
      finloc::cmd_train(cfg, out_path);
    } else if (gradcheck_cmd->parsed()) {
      const finloc::GradcheckReport report =
          finloc::run_gradient_checks(cfg, instances, epsilon);
      std::cout << "fgl  max_rel_err "
                << finloc::format_double(report.fgl_max_error) << "\n"
                << "ddf  max_rel_err "
                << finloc::format_double(report.ddf_max_error) << "\n"
                << "gate max_rel_err "
                << finloc::format_double(report.gate_max_error) << "\n"
                << (report.passed() ? "PASS" : "FAIL") << " ("
                << report.instances << " instances per family, threshold "
                << finloc::format_double(report.threshold) << ")\n";
      if (!report.passed()) {
        return kExitFailure;
      }
    } else if (match_cmd->parsed()) {
      finloc::cmd_match(cost_csv, out_path);
    }
  } catch (const finloc::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const finloc::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const finloc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const finloc::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const finloc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
