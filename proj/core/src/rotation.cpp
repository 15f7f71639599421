#include "iwgvem/rotation.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "iwgvem/errors.hpp"

namespace iwgvem {

namespace {

// Sum over columns of the variance of squared loadings (common varimax
// criterion up to a constant factor).
double varimax_criterion(const Eigen::MatrixXd& w) {
  const double j = static_cast<double>(w.rows());
  const Eigen::ArrayXXd sq = w.array().square();
  return (sq.square().colwise().sum() - sq.colwise().sum().square() / j)
      .sum();
}

Eigen::VectorXd row_norms_or_one(const Eigen::MatrixXd& m) {
  Eigen::VectorXd h = m.rowwise().norm();
  for (int r = 0; r < h.size(); ++r)
    if (h[r] == 0.0) h[r] = 1.0;
  return h;
}

}  // namespace

RotationResult varimax(const Eigen::MatrixXd& loadings, double tol,
                       int max_sweeps) {
  if (loadings.rows() < 2 || loadings.cols() < 1)
    throw DomainError("loading matrix is too small to rotate");
  const int j = static_cast<int>(loadings.rows());
  const int k = static_cast<int>(loadings.cols());

  RotationResult out;
  out.transform = Eigen::MatrixXd::Identity(k, k);
  out.phi = Eigen::MatrixXd::Identity(k, k);
  if (k == 1) {
    out.loadings = loadings;
    return out;
  }

  const Eigen::VectorXd h = row_norms_or_one(loadings);
  Eigen::MatrixXd w = h.cwiseInverse().asDiagonal() * loadings;

  double crit = varimax_criterion(w);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int p = 0; p < k - 1; ++p) {
      for (int q = p + 1; q < k; ++q) {
        const Eigen::ArrayXd u =
            w.col(p).array().square() - w.col(q).array().square();
        const Eigen::ArrayXd v = 2.0 * w.col(p).array() * w.col(q).array();
        const double a = u.sum();
        const double b = v.sum();
        const double c = (u.square() - v.square()).sum();
        const double d = (2.0 * u * v).sum();
        const double num = d - 2.0 * a * b / j;
        const double den = c - (a * a - b * b) / j;
        const double angle = 0.25 * std::atan2(num, den);
        if (std::abs(angle) < 1e-14) continue;
        const double cs = std::cos(angle);
        const double sn = std::sin(angle);
        const Eigen::VectorXd wp = w.col(p) * cs + w.col(q) * sn;
        const Eigen::VectorXd wq = -w.col(p) * sn + w.col(q) * cs;
        w.col(p) = wp;
        w.col(q) = wq;
        const Eigen::VectorXd tp =
            out.transform.col(p) * cs + out.transform.col(q) * sn;
        const Eigen::VectorXd tq =
            -out.transform.col(p) * sn + out.transform.col(q) * cs;
        out.transform.col(p) = tp;
        out.transform.col(q) = tq;
      }
    }
    const double next = varimax_criterion(w);
    if (next - crit < tol) {
      crit = next;
      break;
    }
    crit = next;
  }

  // Row scaling cancels: unnormalized rotated loadings equal input *
  // transform exactly.
  out.loadings = loadings * out.transform;
  return out;
}

RotationResult promax(const Eigen::MatrixXd& loadings, int power) {
  if (power < 2) throw DomainError("promax power must be at least 2");
  const int k = static_cast<int>(loadings.cols());
  RotationResult vm = varimax(loadings);
  if (k == 1) return vm;

  const Eigen::VectorXd h = row_norms_or_one(vm.loadings);
  const Eigen::MatrixXd w = h.cwiseInverse().asDiagonal() * vm.loadings;

  // Signed power target sharpens the normalized pattern.
  Eigen::MatrixXd target(w.rows(), k);
  for (int r = 0; r < w.rows(); ++r)
    for (int c = 0; c < k; ++c)
      target(r, c) = std::copysign(
          std::pow(std::abs(w(r, c)), static_cast<double>(power)), w(r, c));

  const Eigen::MatrixXd gram = w.transpose() * w;
  Eigen::LLT<Eigen::MatrixXd> gram_llt(gram);
  if (gram_llt.info() != Eigen::Success)
    throw RotationError("rotated loadings are rank deficient");
  Eigen::MatrixXd u = gram_llt.solve(w.transpose() * target);

  const Eigen::MatrixXd utu = u.transpose() * u;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(utu);
  if (!lu.isInvertible())
    throw RotationError("promax transform is singular");
  const Eigen::VectorXd d = lu.inverse().diagonal();
  if (!(d.array() > 0.0).all())
    throw RotationError("promax transform is singular");
  u *= d.cwiseSqrt().asDiagonal();

  RotationResult out;
  out.loadings = vm.loadings * u;
  out.transform = vm.transform * u;
  const Eigen::MatrixXd vtv = u.transpose() * u;
  Eigen::FullPivLU<Eigen::MatrixXd> vlu(vtv);
  if (!vlu.isInvertible())
    throw RotationError("promax transform is singular");
  Eigen::MatrixXd phi = vlu.inverse();
  phi = 0.5 * (phi + phi.transpose()).eval();
  phi.diagonal().setOnes();
  out.phi = phi;
  if (!out.loadings.allFinite() || !out.phi.allFinite())
    throw RotationError("promax rotation produced non-finite values");
  return out;
}

AlignedSolution align_to_truth(const Eigen::MatrixXd& loadings,
                               const Eigen::MatrixXd& phi,
                               const Eigen::MatrixXd& truth) {
  if (loadings.rows() != truth.rows() || loadings.cols() != truth.cols())
    throw DomainError("loadings and target shapes differ");
  const int k = static_cast<int>(loadings.cols());
  if (phi.rows() != k || phi.cols() != k)
    throw DomainError("factor correlation shape does not match loadings");

  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);

  AlignedSolution best;
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<int> p = perm;
  do {
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
      double dist = 0.0;
      for (int c = 0; c < k; ++c) {
        const double s = (mask >> c) & 1u ? -1.0 : 1.0;
        dist += (s * loadings.col(p[static_cast<std::size_t>(c)]) -
                 truth.col(c))
                    .squaredNorm();
      }
      if (dist < best_dist) {
        best_dist = dist;
        best.perm = p;
        best.signs.resize(k);
        for (int c = 0; c < k; ++c)
          best.signs[c] = (mask >> c) & 1u ? -1.0 : 1.0;
      }
    }
  } while (std::next_permutation(p.begin(), p.end()));

  best.loadings.resize(loadings.rows(), k);
  best.phi.resize(k, k);
  for (int c = 0; c < k; ++c)
    best.loadings.col(c) =
        best.signs[c] * loadings.col(best.perm[static_cast<std::size_t>(c)]);
  for (int c = 0; c < k; ++c)
    for (int d = 0; d < k; ++d)
      best.phi(c, d) = best.signs[c] * best.signs[d] *
                       phi(best.perm[static_cast<std::size_t>(c)],
                           best.perm[static_cast<std::size_t>(d)]);
  return best;
}

}  // namespace iwgvem
