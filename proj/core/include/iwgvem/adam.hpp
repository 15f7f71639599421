#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "iwgvem/gvem.hpp"
#include "iwgvem/iw.hpp"
#include "iwgvem/model.hpp"

namespace iwgvem {

struct AdamConfig {
  double base_lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-3;
  double sigma_lr_factor = 0.1;  // lr multiplier for the precision group
  std::vector<double> lr_grid = {0.01, 0.05, 0.1, 0.5};
  int selection_steps = 30;
};

// First and second moment accumulators per parameter group plus the shared
// step counter.
struct AdamState {
  Eigen::MatrixXd v_a, r_a;
  Eigen::VectorXd v_b, r_b;
  Eigen::MatrixXd v_prec, r_prec;
  long t = 0;

  static AdamState init(int n_items, int n_factors);
};

// One bias-corrected ascent step: v <- b1 v + (1-b1) g, r <- b2 r + (1-b2)
// g^2, delta = lr vhat / (sqrt(rhat) + eps). Moments and t advance in
// place; the returned deltas are added to the parameters.
IwGradients adam_step(AdamState& state, const IwGradients& grads,
                      const AdamConfig& cfg);

// One full ascent iteration: fresh draws from the frozen proposal, weight
// and gradient evaluation, Adam step on (a, b) and, when update_sigma is
// set, on the prior precision; sigma_theta is recovered by inversion with
// eigenvalues of the covariance floored at 1e-6 if the step leaves the
// positive definite cone. Returns the parameter change norms and the
// bound value seen by this iteration's draws.
struct IwStepResult {
  double delta_a = 0.0;
  double delta_b = 0.0;
  double delta_sigma = 0.0;
  double elbo = 0.0;
};
IwStepResult iw_ascent_step(const ResponseMatrix& responses,
                            const LoadingStructure& structure,
                            const FrozenProposal& proposal,
                            ModelParams& params,
                            Eigen::MatrixXd& prior_prec, AdamState& state,
                            const IwConfig& iw_cfg, const AdamConfig& adam_cfg,
                            bool update_sigma, std::uint64_t iteration);

// Short-budget learning rate search: every candidate runs
// cfg.selection_steps ascent iterations from the same start, and the
// final parameters are scored by the importance-weighted bound on a
// held-aside response set simulated from the starting parameters. The
// score uses a variational state fitted to the held-aside data at the
// candidate's final parameters and common draw seeds across candidates.
// Non-finite scores drop a candidate; ties prefer the smaller rate.
struct LrSelection {
  double rate = 0.0;
  std::vector<double> scores;  // per candidate, NaN where excluded
};
LrSelection select_learning_rate(const ResponseMatrix& responses,
                                 const LoadingStructure& structure,
                                 const GvemFit& start, const IwConfig& iw_cfg,
                                 const AdamConfig& adam_cfg, bool update_sigma,
                                 std::uint64_t seed);

}  // namespace iwgvem
