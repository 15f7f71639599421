#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <random>

#include "iwgvem/errors.hpp"
#include "iwgvem/rotation.hpp"
#include "test_support.hpp"

using namespace iwgvem;

namespace {

// Criterion maximized by the rotation, recomputed independently: sum over
// factors of the variance of squared row-normalized loadings.
double simplicity(const Eigen::MatrixXd& loadings) {
  Eigen::MatrixXd w = loadings;
  for (int r = 0; r < w.rows(); ++r) {
    const double norm = w.row(r).norm();
    if (norm > 0.0) w.row(r) /= norm;
  }
  const double j = static_cast<double>(w.rows());
  double acc = 0.0;
  for (int c = 0; c < w.cols(); ++c) {
    const Eigen::ArrayXd sq = w.col(c).array().square();
    acc += sq.square().sum() - sq.sum() * sq.sum() / j;
  }
  return acc;
}

Eigen::MatrixXd rot2(double angle) {
  Eigen::MatrixXd r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

// Block loading pattern with correlated factors: input spans the same
// column space as truth * chol(phi)'.
struct ObliqueCase {
  Eigen::MatrixXd truth;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd mixed;
};

ObliqueCase make_oblique(int j, double corr, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  ObliqueCase out;
  out.truth = Eigen::MatrixXd::Zero(j, 2);
  for (int r = 0; r < j; ++r) out.truth(r, r < j / 2 ? 0 : 1) = u(eng);
  out.phi = Eigen::MatrixXd::Identity(2, 2);
  out.phi(0, 1) = out.phi(1, 0) = corr;
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(out.phi).matrixL();
  out.mixed = out.truth * l;  // orthogonal-factor representation
  return out;
}

}  // namespace

TEST_CASE("orthogonal rotation output is input times an orthogonal transform") {
  std::mt19937_64 eng(3);
  std::normal_distribution<double> z;
  Eigen::MatrixXd in(10, 3);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 3; ++c) in(r, c) = z(eng);
  const RotationResult res = varimax(in);
  CHECK((res.loadings - in * res.transform).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((res.transform.transpose() * res.transform -
         Eigen::MatrixXd::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK((res.phi - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() ==
        0.0);
  // The criterion never went down.
  CHECK(simplicity(res.loadings) >= simplicity(in) - 1e-12);
}

TEST_CASE("two-factor rotation beats a dense angle grid") {
  std::mt19937_64 eng(5);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 3; ++rep) {
    Eigen::MatrixXd in(8, 2);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 2; ++c) in(r, c) = z(eng);
    const RotationResult res = varimax(in);
    const double got = simplicity(res.loadings);
    double best_grid = -1e300;
    for (double ang = 0.0; ang < 2.0 * std::acos(-1.0); ang += 0.001)
      best_grid = std::max(best_grid, simplicity(in * rot2(ang)));
    CHECK(got >= best_grid - 1e-6);
  }
}

TEST_CASE("simple structure is a fixed point up to column order and sign") {
  Eigen::MatrixXd in = Eigen::MatrixXd::Zero(6, 2);
  in << 1.2, 0, 1.7, 0, 1.1, 0, 0, 1.9, 0, 0.8, 0, 1.4;
  const RotationResult res = varimax(in);
  CHECK(simplicity(res.loadings) ==
        doctest::Approx(simplicity(in)).epsilon(1e-9));
  // Every entry is either (close to) zero or matches an input magnitude.
  for (int r = 0; r < 6; ++r)
    CHECK(res.loadings.row(r).cwiseAbs().maxCoeff() ==
          doctest::Approx(in.row(r).cwiseAbs().maxCoeff()).epsilon(1e-6));
}

TEST_CASE("single column rotation is the identity") {
  Eigen::MatrixXd in(4, 1);
  in << 1.0, -2.0, 0.5, 3.0;
  const RotationResult v = varimax(in);
  CHECK((v.loadings - in).cwiseAbs().maxCoeff() == 0.0);
  const RotationResult p = promax(in);
  CHECK((p.loadings - in).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(p.phi(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("oblique rotation preserves the reproduced covariance exactly") {
  const ObliqueCase oc = make_oblique(12, 0.5, 11);
  const RotationResult res = promax(oc.mixed);
  CHECK((res.loadings - oc.mixed * res.transform).cwiseAbs().maxCoeff() <
        1e-10);
  const Eigen::MatrixXd reproduced =
      res.loadings * res.phi * res.loadings.transpose();
  const Eigen::MatrixXd target = oc.mixed * oc.mixed.transpose();
  CHECK((reproduced - target).cwiseAbs().maxCoeff() < 1e-8);
  for (int d = 0; d < 2; ++d)
    CHECK(res.phi(d, d) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.phi(0, 1) == doctest::Approx(res.phi(1, 0)).epsilon(1e-12));
}

TEST_CASE("oblique rotation recovers block structure and factor correlation") {
  for (std::uint64_t seed : {21ull, 22ull, 23ull, 24ull, 25ull}) {
    const ObliqueCase oc = make_oblique(30, 0.6, seed);
    const RotationResult res = promax(oc.mixed);
    const AlignedSolution al = align_to_truth(res.loadings, res.phi, oc.truth);
    CHECK((al.loadings - oc.truth).cwiseAbs().maxCoeff() < 0.2);
    CHECK(al.phi(0, 1) == doctest::Approx(0.6).epsilon(0.25));
  }
}

TEST_CASE("alignment undoes a known permutation and sign flip") {
  const ObliqueCase oc = make_oblique(9, 0.4, 31);
  // Swap the columns and flip the first one.
  Eigen::MatrixXd shuffled(9, 2);
  shuffled.col(0) = -oc.truth.col(1);
  shuffled.col(1) = oc.truth.col(0);
  Eigen::MatrixXd phi_s = oc.phi;
  phi_s(0, 1) = phi_s(1, 0) = -0.4;  // sign flip carries into the correlation
  const AlignedSolution al = align_to_truth(shuffled, phi_s, oc.truth);
  CHECK((al.loadings - oc.truth).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(al.phi(0, 1) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(al.perm[0] == 1);
  CHECK(al.perm[1] == 0);
  // truth.col(0) = +shuffled.col(1), truth.col(1) = -shuffled.col(0).
  CHECK(al.signs[0] == doctest::Approx(1.0));
  CHECK(al.signs[1] == doctest::Approx(-1.0));
}

TEST_CASE("rank-deficient loadings are rejected") {
  Eigen::MatrixXd in(6, 2);
  for (int r = 0; r < 6; ++r) {
    in(r, 0) = 0.5 + r;
    in(r, 1) = 2.0 * (0.5 + r);  // second column is a multiple of the first
  }
  CHECK_THROWS_AS(promax(in), RotationError);
}
