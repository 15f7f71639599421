#pragma once

// Independent numerical oracles used by the tests: quadrature expectations,
// brute-force maximizers, and finite differences. Nothing here reuses the
// library's closed-form update formulas.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

// Gauss-Hermite rule for integrals against exp(-x^2), from the eigenvalue
// decomposition of the Jacobi matrix; weights sum to sqrt(pi).
inline void gauss_hermite(int n, Eigen::VectorXd& nodes,
                          Eigen::VectorXd& weights) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(i / 2.0);
    jac(i, i - 1) = off;
    jac(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  nodes = es.eigenvalues();
  weights.resize(n);
  const double sqrt_pi = std::sqrt(std::acos(-1.0));
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = sqrt_pi * v0 * v0;
  }
}

// E[f(Z)] for Z ~ N(mu, sigma) by tensor-product Gauss-Hermite; exact for
// polynomial integrands of degree < 2 * points_per_dim.
inline double mvn_expectation(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
    int points_per_dim) {
  const int k = static_cast<int>(mu.size());
  Eigen::VectorXd nodes, weights;
  gauss_hermite(points_per_dim, nodes, weights);
  weights /= weights.sum();
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("oracle: covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const double sqrt2 = std::sqrt(2.0);

  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    Eigen::VectorXd x(k);
    for (int d = 0; d < k; ++d) {
      w *= weights[idx[static_cast<std::size_t>(d)]];
      x[d] = nodes[idx[static_cast<std::size_t>(d)]];
    }
    total += w * f(mu + sqrt2 * (l * x));
    int d = 0;
    while (d < k &&
           ++idx[static_cast<std::size_t>(d)] == points_per_dim) {
      idx[static_cast<std::size_t>(d)] = 0;
      ++d;
    }
    if (d == k) break;
  }
  return total;
}

// log E[exp(g(Z))] for Z ~ N(mu, sigma), evaluated in log space so that
// very negative g never underflows.
inline double log_mvn_expectation_exp(
    const std::function<double(const Eigen::VectorXd&)>& g,
    const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
    int points_per_dim) {
  const int k = static_cast<int>(mu.size());
  Eigen::VectorXd nodes, weights;
  gauss_hermite(points_per_dim, nodes, weights);
  weights /= weights.sum();
  const Eigen::MatrixXd l =
      Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
  const double sqrt2 = std::sqrt(2.0);

  std::vector<double> terms;
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  while (true) {
    double logw = 0.0;
    Eigen::VectorXd x(k);
    for (int d = 0; d < k; ++d) {
      logw += std::log(weights[idx[static_cast<std::size_t>(d)]]);
      x[d] = nodes[idx[static_cast<std::size_t>(d)]];
    }
    terms.push_back(logw + g(mu + sqrt2 * (l * x)));
    int d = 0;
    while (d < k &&
           ++idx[static_cast<std::size_t>(d)] == points_per_dim) {
      idx[static_cast<std::size_t>(d)] = 0;
      ++d;
    }
    if (d == k) break;
  }
  double mx = terms.front();
  for (double t : terms) mx = std::max(mx, t);
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - mx);
  return mx + std::log(acc);
}

// Entropy of N(mu, sigma).
inline double mvn_entropy(const Eigen::MatrixXd& sigma) {
  const int k = static_cast<int>(sigma.rows());
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
  double logdet = 0.0;
  for (int d = 0; d < k; ++d) logdet += std::log(l(d, d));
  return 0.5 * k * (1.0 + std::log(2.0 * std::acos(-1.0))) + logdet;
}

// Golden-section maximizer of a unimodal function on [lo, hi].
inline double golden_section_max(const std::function<double(double)>& f,
                                 double lo, double hi, int iters = 200) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iters; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Central difference d f / d x at x.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
