#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

// FINLOC_CLI_PATH is injected by the build
const std::string cli = FINLOC_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file ", path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag)
      : path(fs::temp_directory_path() / (std::string("finloc_cli_") + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("usage errors exit with the configuration code") {
  CHECK(run("definitely-not-a-command") == 2);
  CHECK(run("weights --no-such-flag") == 2);
  CHECK(run("train") == 2);       // --out is required
  CHECK(run("match") == 2);       // the csv path is required
  CHECK(run("--config /nonexistent.json weights") == 4);
  CHECK(run("--help") == 0);
  CHECK(run("train --help") == 0);
}

TEST_CASE("config file values apply and flags override them") {
  TempDir dir("cfg");
  const fs::path cfg_path = dir.path / "run.json";
  {
    std::ofstream out(cfg_path);
    out << R"({"train": {"steps": 12, "seed": 5}})";
  }

  const fs::path out_a = dir.path / "a";
  CHECK(run("--config " + cfg_path.string() + " train --out " + out_a.string()) == 0);
  const auto summary_a = nlohmann::json::parse(slurp(out_a / "summary.json"));
  CHECK(summary_a.at("steps") == 12);
  CHECK(summary_a.at("seed") == 5);

  // a flag wins over the file, and --seed is the documented alias
  const fs::path out_b = dir.path / "b";
  CHECK(run("--config " + cfg_path.string() + " train --seed 9 --train.steps 15 --out " +
            out_b.string()) == 0);
  const auto summary_b = nlohmann::json::parse(slurp(out_b / "summary.json"));
  CHECK(summary_b.at("steps") == 15);
  CHECK(summary_b.at("seed") == 9);

  // the effective config reflects the merge
  const auto effective =
      nlohmann::json::parse(slurp(out_b / "effective_config.json"));
  CHECK(effective.at("train").at("steps") == 15);
  CHECK(effective.at("train").at("seed") == 9);

  // rejected values surface as exit code 2
  CHECK(run("train --train.learning_rate 0 --out " + (dir.path / "c").string()) == 2);
  {
    std::ofstream out(cfg_path);
    out << R"({"train": {"bogus": 1}})";
  }
  CHECK(run("--config " + cfg_path.string() + " weights") == 2);
}

TEST_CASE("a diverging training run exits with its own code") {
  TempDir dir("div");
  CHECK(run("train --loss_weights.fgl 1e308 --out " + dir.path.string()) == 3);
  CHECK(fs::exists(dir.path / "diagnostics.json"));
}

TEST_CASE("identical seeds give byte-identical training outputs") {
  TempDir dir("det");
  const fs::path a = dir.path / "a";
  const fs::path b = dir.path / "b";
  const std::string flags = "train --train.steps 40 --seed 11 --out ";
  REQUIRE(run(flags + a.string()) == 0);
  REQUIRE(run(flags + b.string()) == 0);
  for (const char* name : {"metrics.csv", "summary.json", "effective_config.json"}) {
    CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name, " differs between runs");
  }
}

TEST_CASE("the assignment solver round-trips through the filesystem") {
  TempDir dir("match");
  const fs::path csv = dir.path / "m.csv";
  {
    std::ofstream out(csv);
    out << "4,1,3\n2,0,5\n3,2,2\n";
  }
  const fs::path json_out = dir.path / "a.json";
  CHECK(run("match " + csv.string() + " --out " + json_out.string()) == 0);
  const auto j = nlohmann::json::parse(slurp(json_out));
  CHECK(j.at("total_cost") == 5.0);

  {
    std::ofstream out(csv);
    out << "1,2\n3\n";
  }
  CHECK(run("match " + csv.string()) == 2);
}

TEST_CASE("gradient checks run from the command line") {
  CHECK(run("gradcheck --instances 3") == 0);
  CHECK(run("gradcheck --instances 0") == 2);
  CHECK(run("gradcheck --epsilon 1e-9") == 2);
}
