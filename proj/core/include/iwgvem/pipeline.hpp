#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "iwgvem/adam.hpp"
#include "iwgvem/gvem.hpp"
#include "iwgvem/iw.hpp"
#include "iwgvem/model.hpp"
#include "iwgvem/rotation.hpp"

namespace iwgvem {

struct FitConfig {
  GvemConfig gvem;
  IwConfig iw;
  AdamConfig adam;
  double iw_tol = 1e-4;  // on max of the per-group step norms
  int iw_max_iter = 200;
  bool exploratory = false;
  int promax_power = 4;
  std::uint64_t seed = 0;
};

struct FitResult {
  // First phase: coordinate ascent solution and its bound.
  ModelParams gvem_params;
  double gvem_elbo = 0.0;
  std::vector<double> gvem_elbo_trace;
  int gvem_iters = 0;
  bool gvem_converged = false;

  // Second phase: importance-weighted ascent from the first-phase start.
  ModelParams params;
  VariationalState vstate;  // frozen proposal, on the final parameter scale
  double chosen_lr = 0.0;   // 0 when the second phase is disabled
  std::vector<double> lr_scores;
  int iw_iters = 0;
  bool iw_converged = false;

  std::optional<RotationResult> rotation;  // exploratory fits only

  double seconds_gvem = 0.0;
  double seconds_iw = 0.0;
};

// Two-phase estimation: fit_gvem, learning rate selection, then
// importance-weighted ascent with the proposal frozen at the first-phase
// posterior. Confirmatory fits end with the eigenvalue floor and the
// identification rescaling applied to parameters and stored proposal
// together; exploratory fits keep sigma_theta at identity and attach a
// promax rotation of the final loadings.
FitResult fit(const ResponseMatrix& responses,
              const LoadingStructure& structure, const FitConfig& config = {});

// Posterior ability means under a variational state refitted at fixed
// parameters.
Eigen::MatrixXd score_persons(const ResponseMatrix& responses,
                              const ModelParams& params);

}  // namespace iwgvem
