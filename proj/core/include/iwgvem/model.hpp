#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "iwgvem/errors.hpp"

namespace iwgvem {

// Binary responses, one row per person, one column per item; entries are
// exactly 0.0 or 1.0.
struct ResponseMatrix {
  Eigen::MatrixXd data;

  int n_persons() const { return static_cast<int>(data.rows()); }
  int n_items() const { return static_cast<int>(data.cols()); }
};

// Confirmatory zero pattern for the discrimination matrix; mask(j, k) == 1
// marks a free entry. Every item loads on at least one factor.
struct LoadingStructure {
  Eigen::MatrixXd mask;

  int n_items() const { return static_cast<int>(mask.rows()); }
  int n_factors() const { return static_cast<int>(mask.cols()); }
};

// Item discriminations a (J x K), intercepts b (J), factor covariance
// sigma_theta (K x K).
struct ModelParams {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd sigma_theta;
};

// Per-person Gaussian posterior approximations q_i = N(mu_i, sigma_i) and
// the bound tightness parameters xi (N x J).
struct VariationalState {
  Eigen::MatrixXd mu;
  std::vector<Eigen::MatrixXd> sigma;
  Eigen::MatrixXd xi;
};

void validate(const ResponseMatrix& responses);
void validate(const LoadingStructure& structure);
void validate(const ModelParams& params, const LoadingStructure& structure);

// Stable logistic; no overflow for |x| up to ~700.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Stable log(1 + exp(x)).
inline double log1pexp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Curvature eta(xi) = (sigmoid(xi) - 1/2) / (2 xi) of the quadratic bound
// on the log-logistic term; even in xi, limit 1/8 at xi = 0.
inline double eta(double xi) {
  const double ax = std::abs(xi);
  if (ax < 1e-4) {
    const double x2 = ax * ax;
    return 0.125 - x2 / 96.0 + x2 * x2 / 960.0;
  }
  return (sigmoid(ax) - 0.5) / (2.0 * ax);
}

// P(Y_j = 1 | theta) = sigmoid(a_j' theta - b_j).
double irf_prob(const Eigen::VectorXd& a_j, const Eigen::VectorXd& theta,
                double b_j);

// log N(theta; 0, sigma); throws LinAlgError if sigma is not SPD.
double log_mvn_zero(const Eigen::VectorXd& theta, const Eigen::MatrixXd& sigma);

// log p(y_row, theta) = sum_j [y_j x_j - log(1 + exp(x_j))] + log N(theta; 0,
// sigma_theta) with x_j = a_j' theta - b_j.
double log_joint(const Eigen::VectorXd& y_row, const ModelParams& params,
                 const Eigen::VectorXd& theta);

// Quadratic lower bound on log_joint at tightness xi_row; equals log_joint
// when xi_j = |b_j - a_j' theta| for every j.
double variational_bound_pointwise(const Eigen::VectorXd& y_row,
                                   const ModelParams& params,
                                   const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& xi_row);

}  // namespace iwgvem
