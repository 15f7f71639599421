#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "iwgvem/model.hpp"

namespace iwgvem {

struct GvemConfig {
  double tol = 1e-4;      // on |dA|_F + |dB|_2 + |dSigma|_F per iteration
  int max_iter = 500;
  bool exploratory = false;  // freeze sigma_theta at identity
};

struct GvemFit {
  ModelParams params;
  VariationalState vstate;  // rescaled consistently with params
  std::vector<double> elbo_trace;  // expected_elbo after each full iteration
  int n_iter = 0;
  bool converged = false;
};

// Optimal Gaussian posterior for one person at fixed (params, xi):
// sigma_i^{-1} = sigma_theta^{-1} + 2 sum_j eta(xi_ij) a_j a_j',
// mu_i = sigma_i sum_j [2 eta(xi_ij) b_j + y_ij - 1/2] a_j.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> estep_person(
    const Eigen::VectorXd& y_row, const ModelParams& params,
    const Eigen::VectorXd& xi_row);

// Tightness maximizing the expected bound at fixed q:
// xi_ij^2 = b_j^2 - 2 b_j a_j' mu_i + a_j' (sigma_i + mu_i mu_i') a_j.
Eigen::MatrixXd update_xi(const ModelParams& params,
                          const VariationalState& vstate);

// Joint maximizer of the expected bound over (a_j, b_j) per item, with
// masked discrimination entries held at zero.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> mstep_item(
    const ResponseMatrix& responses, const VariationalState& vstate,
    const LoadingStructure& structure);

// sigma_theta maximizing the expected bound: (1/N) sum_i (sigma_i + mu_i
// mu_i').
Eigen::MatrixXd update_sigma_theta(const VariationalState& vstate);

// Rescales to unit variances: sigma_theta* = D^{-1/2} sigma_theta D^{-1/2},
// a_j* = a_j elementwise sqrt(diag sigma_theta). Quadratic forms a_j'
// sigma_theta a_k are preserved.
ModelParams rescale_identification(const ModelParams& params);

// Same rescaling with the posterior state transformed to match (mu_i and
// sigma_i live on the rescaled ability scale; xi is invariant).
void rescale_identification(ModelParams& params, VariationalState& vstate);

// Expected evidence lower bound E_q[log p(Y, theta) bound] + entropy,
// evaluated in closed form.
double expected_elbo(const ResponseMatrix& responses,
                     const VariationalState& vstate,
                     const ModelParams& params);

// Recomputes (mu, sigma) for all persons at fixed (params, xi).
void estep_sweep(const ResponseMatrix& responses, const ModelParams& params,
                 VariationalState& vstate);

// Coordinate ascent on (q, xi) at fixed params until the xi change drops
// below tol; used for scoring and for proposals on held-aside data.
VariationalState fit_variational_state(const ResponseMatrix& responses,
                                       const ModelParams& params,
                                       double tol = 1e-8, int max_sweeps = 200);

// Coordinate ascent over (q, xi, items, sigma_theta) from the fixed
// starting point (free a = 1, b = 0, sigma_theta = I, xi = 1) until the
// summed parameter change drops below tol. Confirmatory fits end with the
// identification rescaling applied to params and state.
GvemFit fit_gvem(const ResponseMatrix& responses,
                 const LoadingStructure& structure,
                 const GvemConfig& config = {});

}  // namespace iwgvem
