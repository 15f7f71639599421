#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "iwgvem/model.hpp"

namespace iwgvem {

struct IwConfig {
  int s = 10;             // outer samples per person
  int m = 10;             // inner samples per outer replicate
  std::uint64_t seed = 0;
};

// Proposal draws; row (i * S + s) * M + m holds one K-vector.
struct ThetaSamples {
  Eigen::MatrixXd draws;
  int n = 0, s = 0, m = 0, k = 0;

  Eigen::VectorXd at(int i, int outer, int inner) const {
    return draws.row((static_cast<Eigen::Index>(i) * s + outer) * m + inner)
        .transpose();
  }
};

// Importance weights in log space; row i * S + s covers the M inner
// samples of one outer replicate. normalized rows sum to one.
struct WeightBlock {
  Eigen::MatrixXd log_raw;
  Eigen::MatrixXd normalized;
  Eigen::VectorXd log_scale;  // rowwise max of log_raw
  int n = 0, s = 0, m = 0;
};

// Ascent directions for the importance-weighted bound. The covariance
// direction matches the numerical derivative of iw_elbo with respect to
// the entries of sigma_theta^{-1}, so updates are applied to the precision
// matrix and the covariance is recovered by inversion.
struct IwGradients {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd prior_precision;
};

// Proposal with per-person Cholesky factors cached; the proposal stays
// fixed through the whole importance-weighted phase.
struct FrozenProposal {
  Eigen::MatrixXd mu;
  std::vector<Eigen::MatrixXd> chol_l;
  Eigen::VectorXd logdet;

  static FrozenProposal from(const VariationalState& vstate);
  int n_persons() const { return static_cast<int>(mu.rows()); }
  int n_factors() const { return static_cast<int>(mu.cols()); }
};

// S * M draws per person from q_i; person i's stream derives from
// (cfg.seed, i, iteration), so results do not depend on scheduling.
ThetaSamples draw_samples(const FrozenProposal& proposal, const IwConfig& cfg,
                          std::uint64_t iteration = 0);
ThetaSamples draw_samples(const VariationalState& vstate, const IwConfig& cfg,
                          std::uint64_t iteration = 0);

// log w = log p(y_i, theta) - log q_i(theta), normalized within each
// (person, outer) row by rowwise max subtraction.
WeightBlock compute_weights(const ResponseMatrix& responses,
                            const ThetaSamples& samples,
                            const ModelParams& params,
                            const FrozenProposal& proposal);
WeightBlock compute_weights(const ResponseMatrix& responses,
                            const ThetaSamples& samples,
                            const ModelParams& params,
                            const VariationalState& vstate);

// sum_i (1/S) sum_s [log (1/M) sum_m w_i^(s,m)] from an existing block.
double iw_elbo(const WeightBlock& weights);

// Same estimate with fresh draws.
double iw_elbo(const ResponseMatrix& responses, const FrozenProposal& proposal,
               const ModelParams& params, const IwConfig& cfg,
               std::uint64_t iteration = 0);
double iw_elbo(const ResponseMatrix& responses, const VariationalState& vstate,
               const ModelParams& params, const IwConfig& cfg,
               std::uint64_t iteration = 0);

// Self-normalized gradient estimates; masked discrimination entries are
// forced to zero.
IwGradients gradients(const ResponseMatrix& responses,
                      const ThetaSamples& samples, const WeightBlock& weights,
                      const ModelParams& params,
                      const LoadingStructure& structure);

// Weights, bound value, and gradients from one set of draws in a single
// pass over the linear predictors; used by the optimization loop.
struct IwIterationEval {
  double elbo = 0.0;
  IwGradients grads;
};
IwIterationEval iw_iteration_eval(const ResponseMatrix& responses,
                                  const ThetaSamples& samples,
                                  const ModelParams& params,
                                  const FrozenProposal& proposal,
                                  const LoadingStructure& structure);

// Bound estimates over a grid of inner sample counts with shared draws:
// for each M in m_grid the first M inner samples of the same stream are
// used, so the estimates are comparable replicate by replicate.
std::vector<double> check_monotone_in_m(const ResponseMatrix& responses,
                                        const VariationalState& vstate,
                                        const ModelParams& params,
                                        const std::vector<int>& m_grid,
                                        int n_outer, std::uint64_t seed);

}  // namespace iwgvem
