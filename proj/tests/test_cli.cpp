#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "latent_itr/dataset_io.hpp"
#include "latent_itr/evaluation.hpp"
#include "latent_itr/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Workdir {
  fs::path path;
  explicit Workdir(const std::string& name) : path(fs::temp_directory_path() / ("latent_itr_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Workdir() { fs::remove_all(path); }
  std::string operator/(const std::string& file) const { return (path / file).string(); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(LATENT_ITR_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the full pipeline in `dir`; returns 0 when every step succeeds.
int pipeline(const Workdir& w, const std::string& threads) {
  int rc = run("simulate --n 300 --seed 4 --threads " + threads + " --out " + (w / "d.csv"));
  rc |= run("train --data " + (w / "d.csv") + " --iterations 2 --seed 5 --threads " + threads + " --out " +
            (w / "m.json"));
  rc |= run("recommend --model " + (w / "m.json") + " --data " + (w / "d.csv") + " --threads " + threads +
            " --out " + (w / "r.csv"));
  rc |= run("evaluate --data " + (w / "d.csv") + " --policy " + (w / "r.csv") + " --truth " + (w / "d.truth.json") +
            " --out " + (w / "e.json"));
  rc |= run("crossval --data " + (w / "d.csv") + " --folds 2 --iterations 1 --seed 6 --threads " + threads +
            " --out " + (w / "cv.json"));
  return rc;
}

// chosen_arm is the last column of a recommendation file.
std::vector<litr::Arm> read_arms(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  std::vector<litr::Arm> arms;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) continue;
    if (header) {
      header = false;
      continue;
    }
    arms.push_back(line.ends_with(",1") ? litr::Arm::kPositive : litr::Arm::kNegative);
  }
  return arms;
}

const char* const kArtifacts[] = {"d.csv", "d.schema.json", "d.truth.json", "m.json", "r.csv", "e.json", "cv.json"};

}  // namespace

TEST_CASE("pipeline output is byte-identical across runs and thread counts") {
  Workdir a("a"), b("b"), c("c");
  REQUIRE(pipeline(a, "1") == 0);
  REQUIRE(pipeline(b, "1") == 0);
  REQUIRE(pipeline(c, "8") == 0);
  for (const char* f : kArtifacts) {
    CAPTURE(f);
    const std::string x = slurp(a / f);
    CHECK(!x.empty());
    CHECK(x == slurp(b / f));
    CHECK(x == slurp(c / f));
  }
}

TEST_CASE("evaluate consumes recommend output") {
  Workdir w("consume");
  REQUIRE(pipeline(w, "0") == 0);
  const auto data = litr::load_dataset(w / "d.csv", w / "d.schema.json");
  const auto policy = read_arms(w / "r.csv");
  REQUIRE(policy.size() == data.size());
  const auto truth = litr::load_truth(w / "d.truth.json");
  const json report = json::parse(slurp(w / "e.json"));
  CHECK(report["n"] == data.size());
  CHECK(report["oracle"]["latent_sum"].get<double>() == doctest::Approx(litr::oracle_value(policy, truth, "latent_sum")));
  CHECK(report["oracle"]["optimal_accuracy"].get<double>() ==
        doctest::Approx(litr::optimal_accuracy(policy, truth.optimal_arm)));
}

TEST_CASE("a constant policy's value is the arm-restricted IPW mean") {
  Workdir w("constant");
  REQUIRE(run("simulate --n 400 --seed 8 --out " + (w / "d.csv")) == 0);
  const auto data = litr::load_dataset(w / "d.csv", w / "d.schema.json");
  {
    std::ofstream p(w / "p.csv");
    p << "chosen_arm\n";
    for (std::size_t i = 0; i < data.size(); ++i) p << "1\n";
  }
  REQUIRE(run("evaluate --data " + (w / "d.csv") + " --policy " + (w / "p.csv") + " --outcome first=c1 --out " +
              (w / "e.json")) == 0);
  double total = 0.0;
  for (const auto& r : data.records) {
    if (r.arm == litr::Arm::kPositive) total += r.y1[9] / r.propensity;
  }
  const json report = json::parse(slurp(w / "e.json"));
  CHECK(report["empirical"][0]["empirical_value"].get<double>() ==
        doctest::Approx(total / static_cast<double>(data.size())).epsilon(1e-12));
}

TEST_CASE("an empty data file yields a header-only recommendation file") {
  Workdir w("empty");
  REQUIRE(run("simulate --n 200 --seed 2 --out " + (w / "d.csv")) == 0);
  REQUIRE(run("train --data " + (w / "d.csv") + " --iterations 1 --out " + (w / "m.json")) == 0);
  std::string header;
  {
    std::ifstream in(w / "d.csv");
    std::string line;
    while (std::getline(in, line) && line.starts_with("#")) {
    }
    header = line;
  }
  std::ofstream(w / "empty.csv") << header << "\n";
  REQUIRE(run("recommend --model " + (w / "m.json") + " --data " + (w / "empty.csv") + " --out " + (w / "r.csv")) ==
          0);
  std::ifstream in(w / "r.csv");
  std::string line;
  std::vector<std::string> body;
  while (std::getline(in, line)) {
    if (!line.starts_with("#")) body.push_back(line);
  }
  REQUIRE(body.size() == 1);
  CHECK(body[0] == "z0_hat_1,z0_hat_2,z0_hat_3,g_pos,g_neg,chosen_arm");
}

TEST_CASE("exit codes") {
  Workdir w("codes");
  CHECK(run("simulate --propensity 1.5 --out " + (w / "d.csv")) == 2);
  CHECK(run("simulate --n 50 --k 0 --out " + (w / "d.csv")) == 2);
  CHECK(run("simulate --threads -1 --out " + (w / "d.csv")) == 2);
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  REQUIRE(run("simulate --n 60 --out " + (w / "d.csv")) == 0);
  CHECK(run("crossval --data " + (w / "d.csv") + " --folds 1 --out " + (w / "cv.json")) == 2);
  CHECK(run("train --data " + (w / "d.csv") + " --iterations 0 --out " + (w / "m.json")) == 2);
  CHECK(run("evaluate --data " + (w / "d.csv") + " --folds 1 --policy x --out " + (w / "e.json")) == 2);
  CHECK(run("recommend --model " + (w / "missing.json") + " --data " + (w / "d.csv") + " --out " + (w / "r.csv")) ==
        1);
  CHECK(run("train --data " + (w / "missing.csv") + " --schema " + (w / "d.schema.json") + " --out " +
            (w / "m.json")) == 1);
  CHECK(run("--help") == 0);
}

TEST_CASE("config files feed flags and explicit flags win") {
  Workdir w("config");
  std::ofstream(w / "cfg.json") << R"({"seed": 3, "simulate": {"n": 40, "propensity": 0.3}})";
  REQUIRE(run("simulate --config " + (w / "cfg.json") + " --n 25 --out " + (w / "d.csv")) == 0);
  const auto data = litr::load_dataset(w / "d.csv", w / "d.schema.json");
  CHECK(data.size() == 25);
  CHECK(data.records[0].propensity == doctest::Approx(data.records[0].arm == litr::Arm::kPositive ? 0.3 : 0.7));
  std::ofstream(w / "bad.json") << R"({"simulate": {"no-such-flag": 1}})";
  CHECK(run("simulate --config " + (w / "bad.json") + " --out " + (w / "x.csv")) == 2);
}
