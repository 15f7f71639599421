#include "iwgvem/pipeline.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>

#include "iwgvem/rng.hpp"

namespace iwgvem {

namespace {

// Stream tags for seed derivation within a fit.
constexpr std::uint64_t kStreamLrSelect = 201;
constexpr std::uint64_t kStreamMainLoop = 202;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Symmetrize and floor covariance eigenvalues at 1e-6.
void project_covariance(Eigen::MatrixXd& sigma) {
  sigma = (0.5 * (sigma + sigma.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.eigenvalues().minCoeff() >= 1e-6) return;
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(1e-6);
  sigma = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

FitResult fit(const ResponseMatrix& responses,
              const LoadingStructure& structure, const FitConfig& config) {
  validate(responses);
  validate(structure);
  if (responses.n_items() != structure.n_items())
    throw DomainError("responses and structure disagree on item count");
  if (config.iw_tol <= 0.0 || config.iw_max_iter < 0)
    throw DomainError("invalid convergence settings");
  if (config.exploratory && structure.mask.minCoeff() != 1.0)
    throw DomainError("exploratory fits require an all-free structure");

  FitResult out;
  const auto t0 = std::chrono::steady_clock::now();

  GvemConfig gvem_cfg = config.gvem;
  gvem_cfg.exploratory = config.exploratory;
  GvemFit gvem = fit_gvem(responses, structure, gvem_cfg);
  out.gvem_params = gvem.params;
  out.gvem_elbo_trace = gvem.elbo_trace;
  out.gvem_elbo = expected_elbo(responses, gvem.vstate, gvem.params);
  out.gvem_iters = gvem.n_iter;
  out.gvem_converged = gvem.converged;
  out.seconds_gvem = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  out.params = gvem.params;
  out.vstate = gvem.vstate;
  const bool update_sigma = !config.exploratory;

  if (config.iw_max_iter > 0) {
    AdamConfig adam_cfg = config.adam;
    const LrSelection sel = select_learning_rate(
        responses, structure, gvem, config.iw, adam_cfg, update_sigma,
        derive_seed(config.seed, {kStreamLrSelect}));
    out.chosen_lr = sel.rate;
    out.lr_scores = sel.scores;
    adam_cfg.base_lr = sel.rate;

    const FrozenProposal proposal = FrozenProposal::from(gvem.vstate);
    Eigen::LLT<Eigen::MatrixXd> llt(out.params.sigma_theta);
    if (llt.info() != Eigen::Success)
      throw LinAlgError("factor covariance is not positive definite");
    const int k = structure.n_factors();
    Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(k, k));
    AdamState state = AdamState::init(structure.n_items(), k);
    IwConfig iw_cfg = config.iw;
    iw_cfg.seed = derive_seed(config.seed, {kStreamMainLoop});

    for (int iter = 1; iter <= config.iw_max_iter; ++iter) {
      const IwStepResult step = iw_ascent_step(
          responses, structure, proposal, out.params, prec, state, iw_cfg,
          adam_cfg, update_sigma, static_cast<std::uint64_t>(iter));
      out.iw_iters = iter;
      const double delta =
          std::max({step.delta_a, step.delta_b, step.delta_sigma});
      if (delta <= config.iw_tol) {
        out.iw_converged = true;
        break;
      }
    }
  } else {
    out.iw_converged = true;
  }

  if (update_sigma) {
    project_covariance(out.params.sigma_theta);
    rescale_identification(out.params, out.vstate);
  }
  if (config.exploratory)
    out.rotation = promax(out.params.a, config.promax_power);

  out.seconds_iw = seconds_since(t1);
  return out;
}

Eigen::MatrixXd score_persons(const ResponseMatrix& responses,
                              const ModelParams& params) {
  validate(responses);
  if (params.a.rows() != responses.n_items())
    throw DomainError("responses and parameters disagree on item count");
  return fit_variational_state(responses, params).mu;
}

}  // namespace iwgvem
