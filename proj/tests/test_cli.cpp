#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "iwgvem/csv.hpp"
#include "iwgvem/simstudy.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace iwgvem;

namespace {

const std::string kCli = IWGVEM_CLI_PATH;

struct Workdir {
  fs::path root;
  Workdir() {
    root = fs::path("/tmp") /
           ("iwgvem_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(root);
  }
  ~Workdir() { fs::remove_all(root); }
  std::string p(const std::string& name) const {
    return (root / name).string();
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

int run(const std::string& cmd_tail, const std::string& log_path) {
  const std::string cmd = kCli + " " + cmd_tail + " >" + log_path + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small dataset on disk plus the flags that keep the second phase short.
struct FitFixture {
  Workdir wd;
  std::string data_path, mask_path;
  FitFixture() {
    StudyDesign d = testsup::small_design(60, 8, 2, StructureKind::between);
    const Dataset data = generate_dataset(d, 2024);
    data_path = wd.p("responses.csv");
    mask_path = wd.p("mask.csv");
    write_matrix_csv(data_path, data.responses.data);
    write_matrix_csv(mask_path, data.truth.structure.mask);
  }
  std::string quick_flags() const {
    return "--outer 3 --inner 3 --lr-grid 0.1 --selection-steps 2 "
           "--iw-max-iter 3";
  }
};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  Workdir wd;
  CHECK(run("", wd.p("log0")) == 2);
  CHECK(run("frobnicate", wd.p("log1")) == 2);
  CHECK(run("fit --no-such-flag", wd.p("log2")) == 2);
  CHECK(run("fit", wd.p("log3")) == 2);  // missing required options
  CHECK(run("--help", wd.p("log4")) == 0);
  CHECK(run("fit --help", wd.p("log5")) == 0);
}

TEST_CASE("fit writes parameters, metadata, and a manifest") {
  FitFixture fx;
  const std::string out = fx.wd.p("out");
  const int code = run("fit --data " + fx.data_path + " --structure " +
                           fx.mask_path + " --seed 7 --out " + out + " " +
                           fx.quick_flags(),
                       fx.wd.p("log"));
  REQUIRE(code == 0);

  const Eigen::MatrixXd a = read_numeric_csv(out + "/a.csv");
  CHECK(a.rows() == 8);
  CHECK(a.cols() == 2);
  CHECK(read_numeric_csv(out + "/b.csv").rows() == 8);
  CHECK(read_numeric_csv(out + "/sigma.csv").rows() == 2);
  CHECK(read_numeric_csv(out + "/gvem_a.csv").rows() == 8);
  CHECK(read_numeric_csv(out + "/scores.csv").rows() == 60);
  CHECK(!fs::exists(out + "/rotated_a.csv"));

  const auto meta = nlohmann::json::parse(slurp(out + "/fit.json"));
  CHECK(meta.at("mode") == "confirmatory");
  CHECK(meta.at("gvem").at("converged").get<bool>());
  CHECK(meta.at("iw").at("chosen_lr").get<double>() == 0.1);

  const auto manifest = nlohmann::json::parse(slurp(out + "/manifest.json"));
  CHECK(manifest.at("subcommand") == "fit");
  CHECK(manifest.at("config").at("seed").get<int>() == 7);
  CHECK(manifest.at("inputs").size() == 2);
  const std::string checksum =
      manifest.at("inputs").at(0).at("checksum").get<std::string>();
  CHECK(checksum.rfind("fnv1a64:", 0) == 0);
}

TEST_CASE("fit outputs are identical for identical seeds") {
  FitFixture fx;
  const std::string base = "fit --data " + fx.data_path + " --structure " +
                           fx.mask_path + " --seed 11 " + fx.quick_flags();
  REQUIRE(run(base + " --out " + fx.wd.p("o1"), fx.wd.p("l1")) == 0);
  REQUIRE(run(base + " --out " + fx.wd.p("o2"), fx.wd.p("l2")) == 0);
  CHECK(slurp(fx.wd.p("o1") + "/a.csv") == slurp(fx.wd.p("o2") + "/a.csv"));
  CHECK(slurp(fx.wd.p("o1") + "/b.csv") == slurp(fx.wd.p("o2") + "/b.csv"));
  CHECK(slurp(fx.wd.p("o1") + "/sigma.csv") ==
        slurp(fx.wd.p("o2") + "/sigma.csv"));
}

TEST_CASE("exploratory fit attaches rotation outputs") {
  FitFixture fx;
  const std::string out = fx.wd.p("out");
  const int code = run("fit --data " + fx.data_path +
                           " --structure exploratory:2 --seed 3 --out " + out +
                           " " + fx.quick_flags(),
                       fx.wd.p("log"));
  REQUIRE(code == 0);
  CHECK(fs::exists(out + "/rotated_a.csv"));
  const Eigen::MatrixXd phi = read_numeric_csv(out + "/rotated_phi.csv");
  CHECK(phi(0, 0) == 1.0);
  const auto meta = nlohmann::json::parse(slurp(out + "/fit.json"));
  CHECK(meta.at("mode") == "exploratory");

  CHECK(run("fit --data " + fx.data_path +
                " --structure exploratory:zero --out " + fx.wd.p("bad"),
            fx.wd.p("logb")) == 3);
}

TEST_CASE("malformed inputs exit with code 3") {
  FitFixture fx;
  CHECK(run("fit --data /tmp/iwgvem_missing.csv --structure " + fx.mask_path +
                " --out " + fx.wd.p("o"),
            fx.wd.p("l1")) == 3);

  const std::string bad = fx.wd.p("bad.csv");
  {
    std::ofstream f(bad);
    f << "1,0\n0,2\n";
  }
  CHECK(run("fit --data " + bad + " --structure " + fx.mask_path + " --out " +
                fx.wd.p("o2"),
            fx.wd.p("l2")) == 3);

  const std::string badcfg = fx.wd.p("bad.json");
  {
    std::ofstream f(badcfg);
    f << "{ not json";
  }
  CHECK(run("fit --data " + fx.data_path + " --structure " + fx.mask_path +
                " --config " + badcfg + " --out " + fx.wd.p("o3"),
            fx.wd.p("l3")) == 3);
}

TEST_CASE("config files fill unset options and flags win over them") {
  FitFixture fx;
  const std::string cfg = fx.wd.p("cfg.json");
  {
    std::ofstream f(cfg);
    f << R"({"outer": 4, "inner": 3, "iw_max_iter": 2, "lr_grid": [0.1],)"
      << R"( "selection_steps": 2, "seed": 21})";
  }
  const std::string out1 = fx.wd.p("c1");
  REQUIRE(run("fit --data " + fx.data_path + " --structure " + fx.mask_path +
                  " --config " + cfg + " --out " + out1,
              fx.wd.p("lc1")) == 0);
  auto manifest = nlohmann::json::parse(slurp(out1 + "/manifest.json"));
  CHECK(manifest.at("config").at("outer").get<int>() == 4);
  CHECK(manifest.at("config").at("seed").get<int>() == 21);

  const std::string out2 = fx.wd.p("c2");
  REQUIRE(run("fit --data " + fx.data_path + " --structure " + fx.mask_path +
                  " --config " + cfg + " --outer 5 --out " + out2,
              fx.wd.p("lc2")) == 0);
  manifest = nlohmann::json::parse(slurp(out2 + "/manifest.json"));
  CHECK(manifest.at("config").at("outer").get<int>() == 5);
}

TEST_CASE("study runs a single cell deterministically across threads") {
  Workdir wd;
  const std::string flags =
      "study --n 40 --factors 2 --items 6 --kind between --corr low "
      "--cell-reps 2 --seed 5 --outer 3 --inner 3 --lr-grid 0.1 "
      "--selection-steps 2 --iw-max-iter 2";
  REQUIRE(run(flags + " --threads 1 --out " + wd.p("s1"), wd.p("l1")) == 0);
  REQUIRE(run(flags + " --threads 3 --out " + wd.p("s2"), wd.p("l2")) == 0);

  const std::string r1 = slurp(wd.p("s1") + "/results.csv");
  CHECK(r1 == slurp(wd.p("s2") + "/results.csv"));
  CHECK(r1.substr(0, r1.find('\n')) ==
        "n,k,j,structure,correlation,mode,rep,seed,method,block,bias,rmse,"
        "converged");
  CHECK(fs::exists(wd.p("s1") + "/timings.csv"));
  CHECK(slurp(wd.p("s1") + "/summary.json") ==
        slurp(wd.p("s2") + "/summary.json"));

  const auto summary = nlohmann::json::parse(slurp(wd.p("s1") + "/summary.json"));
  REQUIRE(summary.at("cells").size() == 1);
  CHECK(summary.at("cells").at(0).at("metrics").size() == 6);
}

TEST_CASE("study presets expand to the expected grids") {
  Workdir wd;
  // Preset cells are recorded in the manifest before fitting begins, so an
  // aborted run still documents its plan; quick is small enough to finish.
  REQUIRE(run("study --preset quick --seed 2 --outer 3 --inner 3 "
              "--lr-grid 0.1 --selection-steps 2 --iw-max-iter 2 --out " +
                  wd.p("q"),
              wd.p("lq")) == 0);
  const auto manifest = nlohmann::json::parse(slurp(wd.p("q") + "/manifest.json"));
  CHECK(manifest.at("config").at("cells").size() == 1);
  CHECK(run("study --preset nope --out " + wd.p("x"), wd.p("lx")) == 3);
}

TEST_CASE("bound comparison writes its table and summary") {
  Workdir wd;
  REQUIRE(run("elbo --n 25 --factors 2 --items 5 --reps 2 --outer 15 "
              "--m-grid 1 5 --seed 9 --out " +
                  wd.p("e"),
              wd.p("le")) == 0);
  const std::string csv = slurp(wd.p("e") + "/elbo.csv");
  CHECK(csv.substr(0, csv.find('\n')) ==
        "n,k,j,structure,correlation,rep,seed,elbo_gvem,elbo_iw_m1,"
        "elbo_iw_m5");
  const auto summary = nlohmann::json::parse(slurp(wd.p("e") + "/summary.json"));
  CHECK(summary.at("reweighted").size() == 2);
  CHECK(summary.at("reweighted").at(1).at("mean_elbo").get<double>() >=
        summary.at("mean_elbo_gvem").get<double>() - 0.5);
}
