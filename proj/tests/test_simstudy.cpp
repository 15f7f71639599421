#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "iwgvem/simstudy.hpp"
#include "test_support.hpp"

using namespace iwgvem;

namespace {

FitConfig tiny_config() {
  FitConfig cfg;
  cfg.iw.s = 3;
  cfg.iw.m = 3;
  cfg.adam.lr_grid = {0.1};
  cfg.adam.selection_steps = 2;
  cfg.iw_max_iter = 3;
  return cfg;
}

int line_count(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("between structure splits items into nearly equal blocks") {
  const LoadingStructure st =
      generate_structure(30, 2, StructureKind::between);
  for (int r = 0; r < 15; ++r) {
    CHECK(st.mask(r, 0) == 1.0);
    CHECK(st.mask(r, 1) == 0.0);
  }
  for (int r = 15; r < 30; ++r) {
    CHECK(st.mask(r, 0) == 0.0);
    CHECK(st.mask(r, 1) == 1.0);
  }
  // Remainder items go to the leading blocks.
  const LoadingStructure odd = generate_structure(31, 2, StructureKind::between);
  CHECK(odd.mask.col(0).sum() == 16.0);
  CHECK(odd.mask.col(1).sum() == 15.0);

  const LoadingStructure five = generate_structure(55, 5, StructureKind::between);
  for (int c = 0; c < 5; ++c) CHECK(five.mask.col(c).sum() == 11.0);
  CHECK((five.mask.rowwise().sum().array() == 1.0).all());
}

TEST_CASE("two-factor within structure uses thirds with a cross-loading block") {
  const LoadingStructure st = generate_structure(30, 2, StructureKind::within);
  for (int r = 0; r < 10; ++r) {
    CHECK(st.mask(r, 0) == 1.0);
    CHECK(st.mask(r, 1) == 0.0);
  }
  for (int r = 10; r < 20; ++r) {
    CHECK(st.mask(r, 0) == 0.0);
    CHECK(st.mask(r, 1) == 1.0);
  }
  for (int r = 20; r < 30; ++r) {
    CHECK(st.mask(r, 0) == 1.0);
    CHECK(st.mask(r, 1) == 1.0);
  }
}

TEST_CASE("many-factor within structure cycles singles, pairs, and triples") {
  const LoadingStructure st = generate_structure(9, 3, StructureKind::within);
  Eigen::MatrixXd expect(9, 3);
  expect << 1, 0, 0,  //
      0, 1, 0,        //
      0, 0, 1,        //
      1, 1, 0,        //
      1, 0, 1,        //
      0, 1, 1,        //
      1, 1, 1,        //
      1, 1, 1,        //
      1, 1, 1;
  CHECK((st.mask - expect).cwiseAbs().maxCoeff() == 0.0);

  const LoadingStructure big = generate_structure(55, 5, StructureKind::within);
  // 19 single-loading items, 18 pairs, 18 triples.
  const Eigen::VectorXd row_sums = big.mask.rowwise().sum();
  for (int r = 0; r < 19; ++r) CHECK(row_sums[r] == 1.0);
  for (int r = 19; r < 37; ++r) CHECK(row_sums[r] == 2.0);
  for (int r = 37; r < 55; ++r) CHECK(row_sums[r] == 3.0);
  CHECK((big.mask.colwise().sum().array() >= 1.0).all());
  // Second pair block starts over at the lexicographically first pair.
  CHECK(big.mask(19, 0) == 1.0);
  CHECK(big.mask(19, 1) == 1.0);
}

TEST_CASE("degenerate structure requests are rejected") {
  CHECK_THROWS_AS(generate_structure(1, 2, StructureKind::between),
                  DesignError);
  CHECK_THROWS_AS(generate_structure(2, 2, StructureKind::within),
                  DesignError);
  CHECK_THROWS_AS(generate_structure(0, 1, StructureKind::between),
                  DomainError);
  // One factor loads everything regardless of the requested kind.
  const LoadingStructure one = generate_structure(7, 1, StructureKind::within);
  CHECK(one.mask.sum() == 7.0);
}

TEST_CASE("generated datasets are deterministic and respect the design") {
  StudyDesign d = testsup::small_design(40, 12, 2, StructureKind::within);
  d.corr_lo = 0.5;
  d.corr_hi = 0.7;
  const Dataset a = generate_dataset(d, 987);
  const Dataset b = generate_dataset(d, 987);
  const Dataset c = generate_dataset(d, 988);
  CHECK((a.responses.data - b.responses.data).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.truth.params.a - b.truth.params.a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.responses.data - c.responses.data).cwiseAbs().maxCoeff() > 0.0);

  CHECK(a.responses.data.rows() == 40);
  CHECK(a.responses.data.cols() == 12);
  CHECK(((a.responses.data.array() == 0.0) || (a.responses.data.array() == 1.0))
            .all());
  CHECK(a.truth.theta.rows() == 40);

  for (int r = 0; r < 12; ++r)
    for (int k = 0; k < 2; ++k) {
      if (a.truth.structure.mask(r, k) == 0.0) {
        CHECK(a.truth.params.a(r, k) == 0.0);
      } else {
        CHECK(a.truth.params.a(r, k) >= 1.0);
        CHECK(a.truth.params.a(r, k) <= 2.0);
      }
    }
  CHECK(a.truth.params.sigma_theta(0, 0) == 1.0);
  CHECK(a.truth.params.sigma_theta(0, 1) >= 0.5);
  CHECK(a.truth.params.sigma_theta(0, 1) <= 0.7);
}

TEST_CASE("confirmatory metrics are plain entrywise errors") {
  StudyDesign d = testsup::small_design(10, 6, 2, StructureKind::between);
  const Dataset data = generate_dataset(d, 11);
  ModelParams est = data.truth.params;
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 2; ++c)
      if (data.truth.structure.mask(r, c) != 0.0) est.a(r, c) += 0.1;
  est.b.array() -= 0.2;
  const EvalResult ev = evaluate(est, data.truth, /*exploratory=*/false);
  CHECK(ev.a.bias == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(ev.a.rmse == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(ev.b.bias == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(ev.b.rmse == doctest::Approx(0.2).epsilon(1e-12));
  REQUIRE(ev.sigma.has_value());
  CHECK(ev.sigma->bias == doctest::Approx(0.0));
  CHECK(ev.sigma->rmse == doctest::Approx(0.0));

  StudyDesign d1 = testsup::small_design(10, 6, 1, StructureKind::between);
  const Dataset data1 = generate_dataset(d1, 12);
  const EvalResult ev1 =
      evaluate(data1.truth.params, data1.truth, /*exploratory=*/false);
  CHECK(!ev1.sigma.has_value());
}

TEST_CASE("exploratory metrics rotate and align before comparing") {
  StudyDesign d = testsup::small_design(10, 30, 2, StructureKind::between);
  d.corr_lo = d.corr_hi = 0.6;
  const Dataset data = generate_dataset(d, 5);
  // An exploratory estimate equivalent to the truth: loadings mixed by the
  // correlation Cholesky factor, identity covariance.
  ModelParams est;
  const Eigen::MatrixXd l =
      Eigen::LLT<Eigen::MatrixXd>(data.truth.params.sigma_theta).matrixL();
  est.a = data.truth.params.a * l;
  est.b = data.truth.params.b;
  est.sigma_theta = Eigen::MatrixXd::Identity(2, 2);
  const EvalResult ev = evaluate(est, data.truth, /*exploratory=*/true);
  CHECK(std::abs(ev.a.bias) < 0.05);
  CHECK(ev.a.rmse < 0.12);
  CHECK(ev.b.rmse == doctest::Approx(0.0));
  REQUIRE(ev.sigma.has_value());
  CHECK(std::abs(ev.sigma->bias) < 0.1);
}

TEST_CASE("study driver is reproducible across thread counts") {
  StudyDesign d = testsup::small_design(40, 6, 2, StructureKind::between);
  d.n_replications = 3;
  const FitConfig cfg = tiny_config();
  const StudyResult r1 = run_study({d}, cfg, 100, 1);
  const StudyResult r3 = run_study({d}, cfg, 100, 3);
  const std::string csv1 = results_csv(r1);
  const std::string csv3 = results_csv(r3);
  CHECK(csv1 == csv3);

  REQUIRE(r1.cells.size() == 1);
  REQUIRE(r1.cells[0].records.size() == 6);
  for (int rep = 0; rep < 3; ++rep) {
    const auto& g = r1.cells[0].records[static_cast<std::size_t>(rep) * 2];
    const auto& w = r1.cells[0].records[static_cast<std::size_t>(rep) * 2 + 1];
    CHECK(g.method == "gvem");
    CHECK(w.method == "iwgvem");
    CHECK(g.rep == rep);
    CHECK(g.seed == 100 + static_cast<std::uint64_t>(rep));
    CHECK(w.seconds >= g.seconds);  // total includes the first phase
  }
}

TEST_CASE("rendered tables have the documented shape") {
  StudyDesign d = testsup::small_design(30, 6, 2, StructureKind::between);
  d.n_replications = 2;
  const StudyResult res = run_study({d}, tiny_config(), 7, 1);
  const std::string csv = results_csv(res);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "n,k,j,structure,correlation,mode,rep,seed,method,block,bias,rmse,"
        "converged");
  // 2 reps x 2 methods x 3 blocks.
  CHECK(line_count(csv) == 1 + 12);
  std::string first;
  std::getline(in, first);
  CHECK(first.substr(0, 31) == "30,2,6,between,low,confirmatory");

  const std::string times = timings_csv(res);
  CHECK(line_count(times) == 1 + 4);
  CHECK(times.substr(0, times.find('\n')) ==
        "n,k,j,structure,correlation,mode,rep,seed,method,seconds");

  const auto aggs = aggregate(res);
  REQUIRE(aggs.size() == 1);
  CHECK(aggs[0].n_reps == 2);
  REQUIRE(aggs[0].rows.size() == 6);
  // Hand-average one block to pin the aggregation.
  double bias = 0.0;
  for (const auto& rec : res.cells[0].records)
    if (rec.method == "gvem") bias += rec.metrics.a.bias;
  bias /= 2.0;
  CHECK(aggs[0].rows[0].method == "gvem");
  CHECK(aggs[0].rows[0].block == "a");
  CHECK(aggs[0].rows[0].mean_bias == doctest::Approx(bias).epsilon(1e-12));
}

TEST_CASE("bound comparison experiment lines up with its table") {
  StudyDesign d = testsup::small_design(25, 5, 2, StructureKind::between);
  d.n_replications = 2;
  const ElboExperimentResult res = elbo_experiment(d, {1, 5}, 30, 50, 1);
  REQUIRE(res.rows.size() == 2);
  for (const auto& row : res.rows) {
    REQUIRE(row.iw_elbo.size() == 2);
    CHECK(std::isfinite(row.gvem_elbo));
    // The reweighted estimates sit above the first-phase bound.
    CHECK(row.iw_elbo[0] >= row.gvem_elbo - 0.5);
    CHECK(row.iw_elbo[1] >= row.iw_elbo[0] - 0.25);
  }
  const std::string csv = elbo_csv(res);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "n,k,j,structure,correlation,rep,seed,elbo_gvem,elbo_iw_m1,"
        "elbo_iw_m5");
  CHECK(line_count(csv) == 3);

  const ElboExperimentResult res3 = elbo_experiment(d, {1, 5}, 30, 50, 3);
  CHECK(elbo_csv(res3) == csv);
}
