#include "iwgvem/model.hpp"

#include <Eigen/Cholesky>
#include <numbers>
#include <string>

namespace iwgvem {

void validate(const ResponseMatrix& responses) {
  if (responses.data.rows() < 1 || responses.data.cols() < 1)
    throw DomainError("response matrix must be non-empty");
  for (int i = 0; i < responses.data.rows(); ++i)
    for (int j = 0; j < responses.data.cols(); ++j) {
      const double v = responses.data(i, j);
      if (v != 0.0 && v != 1.0)
        throw DomainError("response entry at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ") is not 0 or 1");
    }
}

void validate(const LoadingStructure& structure) {
  if (structure.mask.rows() < 1 || structure.mask.cols() < 1)
    throw DomainError("loading structure must be non-empty");
  for (int j = 0; j < structure.mask.rows(); ++j) {
    double row_sum = 0.0;
    for (int k = 0; k < structure.mask.cols(); ++k) {
      const double v = structure.mask(j, k);
      if (v != 0.0 && v != 1.0)
        throw DomainError("structure entry at (" + std::to_string(j) + ", " +
                          std::to_string(k) + ") is not 0 or 1");
      row_sum += v;
    }
    if (row_sum < 1.0)
      throw DomainError("item " + std::to_string(j) +
                        " loads on no factor");
  }
}

void validate(const ModelParams& params, const LoadingStructure& structure) {
  const int j = structure.n_items();
  const int k = structure.n_factors();
  if (params.a.rows() != j || params.a.cols() != k)
    throw DomainError("discrimination matrix shape does not match structure");
  if (params.b.size() != j)
    throw DomainError("intercept vector length does not match structure");
  if (params.sigma_theta.rows() != k || params.sigma_theta.cols() != k)
    throw DomainError("factor covariance shape does not match structure");
  if (!params.a.allFinite() || !params.b.allFinite() ||
      !params.sigma_theta.allFinite())
    throw DomainError("model parameters contain non-finite values");
  for (int r = 0; r < j; ++r)
    for (int c = 0; c < k; ++c)
      if (structure.mask(r, c) == 0.0 && params.a(r, c) != 0.0)
        throw DomainError("masked discrimination entry at (" +
                          std::to_string(r) + ", " + std::to_string(c) +
                          ") is nonzero");
}

double irf_prob(const Eigen::VectorXd& a_j, const Eigen::VectorXd& theta,
                double b_j) {
  if (a_j.size() != theta.size())
    throw DomainError("discrimination and ability dimensions differ");
  if (!a_j.allFinite() || !theta.allFinite() || !std::isfinite(b_j))
    throw DomainError("irf_prob inputs must be finite");
  return sigmoid(a_j.dot(theta) - b_j);
}

double log_mvn_zero(const Eigen::VectorXd& theta,
                    const Eigen::MatrixXd& sigma) {
  const int k = static_cast<int>(theta.size());
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw LinAlgError("covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::VectorXd half = l.triangularView<Eigen::Lower>().solve(theta);
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  return -0.5 * (k * std::log(2.0 * std::numbers::pi) + log_det +
                 half.squaredNorm());
}

double log_joint(const Eigen::VectorXd& y_row, const ModelParams& params,
                 const Eigen::VectorXd& theta) {
  const Eigen::VectorXd x = params.a * theta - params.b;
  double acc = 0.0;
  for (int j = 0; j < x.size(); ++j)
    acc += y_row[j] * x[j] - log1pexp(x[j]);
  return acc + log_mvn_zero(theta, params.sigma_theta);
}

double variational_bound_pointwise(const Eigen::VectorXd& y_row,
                                   const ModelParams& params,
                                   const Eigen::VectorXd& theta,
                                   const Eigen::VectorXd& xi_row) {
  const Eigen::VectorXd s = params.a * theta;
  double acc = 0.0;
  for (int j = 0; j < s.size(); ++j) {
    const double xi = xi_row[j];
    const double x = params.b[j] - s[j];
    acc += -log1pexp(-xi) + y_row[j] * (s[j] - params.b[j]) +
           0.5 * (x - xi) - eta(xi) * (x * x - xi * xi);
  }
  return acc + log_mvn_zero(theta, params.sigma_theta);
}

}  // namespace iwgvem
