#include "iwgvem/adam.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>

#include "iwgvem/rng.hpp"

namespace iwgvem {

namespace {

// Stream tags for seed derivation within the selection procedure.
constexpr std::uint64_t kStreamEvalData = 101;
constexpr std::uint64_t kStreamCandidate = 102;
constexpr std::uint64_t kStreamEvalElbo = 103;

void check_adam_config(const AdamConfig& cfg) {
  if (cfg.base_lr <= 0.0 || cfg.epsilon <= 0.0 ||
      cfg.sigma_lr_factor <= 0.0 || cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 ||
      cfg.beta2 < 0.0 || cfg.beta2 >= 1.0)
    throw DomainError("invalid optimizer configuration");
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw LinAlgError(std::string(what) + " is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

}  // namespace

AdamState AdamState::init(int n_items, int n_factors) {
  AdamState s;
  s.v_a = Eigen::MatrixXd::Zero(n_items, n_factors);
  s.r_a = Eigen::MatrixXd::Zero(n_items, n_factors);
  s.v_b = Eigen::VectorXd::Zero(n_items);
  s.r_b = Eigen::VectorXd::Zero(n_items);
  s.v_prec = Eigen::MatrixXd::Zero(n_factors, n_factors);
  s.r_prec = Eigen::MatrixXd::Zero(n_factors, n_factors);
  return s;
}

IwGradients adam_step(AdamState& state, const IwGradients& grads,
                      const AdamConfig& cfg) {
  check_adam_config(cfg);
  if (grads.a.rows() != state.v_a.rows() || grads.a.cols() != state.v_a.cols())
    throw DomainError("gradient shapes do not match optimizer state");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  auto step = [&](auto& v, auto& r, const auto& g, double lr) {
    v = cfg.beta1 * v + (1.0 - cfg.beta1) * g;
    r = cfg.beta2 * r + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    return (lr * (v.array() / bc1) / ((r.array() / bc2).sqrt() + cfg.epsilon))
        .matrix()
        .eval();
  };
  IwGradients delta;
  delta.a = step(state.v_a, state.r_a, grads.a, cfg.base_lr);
  delta.b = step(state.v_b, state.r_b, grads.b, cfg.base_lr);
  delta.prior_precision = step(state.v_prec, state.r_prec,
                               grads.prior_precision,
                               cfg.sigma_lr_factor * cfg.base_lr);
  return delta;
}

IwStepResult iw_ascent_step(const ResponseMatrix& responses,
                            const LoadingStructure& structure,
                            const FrozenProposal& proposal,
                            ModelParams& params, Eigen::MatrixXd& prior_prec,
                            AdamState& state, const IwConfig& iw_cfg,
                            const AdamConfig& adam_cfg, bool update_sigma,
                            std::uint64_t iteration) {
  const ThetaSamples samples = draw_samples(proposal, iw_cfg, iteration);
  const IwIterationEval eval =
      iw_iteration_eval(responses, samples, params, proposal, structure);
  const IwGradients delta = adam_step(state, eval.grads, adam_cfg);

  params.a += delta.a;
  params.b += delta.b;

  IwStepResult res;
  res.delta_a = delta.a.norm();
  res.delta_b = delta.b.norm();
  res.elbo = eval.elbo;

  if (update_sigma) {
    const Eigen::MatrixXd sigma_old = params.sigma_theta;
    prior_prec += delta.prior_precision;
    prior_prec = (0.5 * (prior_prec + prior_prec.transpose())).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(prior_prec);
    if (llt.info() == Eigen::Success) {
      const int k = static_cast<int>(prior_prec.rows());
      Eigen::MatrixXd sigma = llt.solve(Eigen::MatrixXd::Identity(k, k));
      params.sigma_theta = 0.5 * (sigma + sigma.transpose());
    } else {
      // Step left the cone; floor the covariance eigenvalues at 1e-6.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prior_prec);
      Eigen::VectorXd lam = es.eigenvalues();
      for (int d = 0; d < lam.size(); ++d)
        lam[d] = std::max(1e-6, lam[d] > 0.0 ? 1.0 / lam[d] : 0.0);
      params.sigma_theta = es.eigenvectors() * lam.asDiagonal() *
                           es.eigenvectors().transpose();
      prior_prec = es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
                   es.eigenvectors().transpose();
    }
    res.delta_sigma = (params.sigma_theta - sigma_old).norm();
  }
  return res;
}

LrSelection select_learning_rate(const ResponseMatrix& responses,
                                 const LoadingStructure& structure,
                                 const GvemFit& start, const IwConfig& iw_cfg,
                                 const AdamConfig& adam_cfg, bool update_sigma,
                                 std::uint64_t seed) {
  check_adam_config(adam_cfg);
  if (adam_cfg.lr_grid.empty())
    throw DomainError("learning rate grid is empty");
  if (adam_cfg.selection_steps < 1)
    throw DomainError("selection budget must be positive");

  const int n = responses.n_persons();
  const int j = responses.n_items();
  const int k = structure.n_factors();

  // Held-aside responses simulated from the starting parameters.
  ResponseMatrix eval_set;
  eval_set.data.resize(n, j);
  {
    Eigen::LLT<Eigen::MatrixXd> llt(start.params.sigma_theta);
    if (llt.info() != Eigen::Success)
      throw LinAlgError("starting factor covariance is not positive definite");
    const Eigen::MatrixXd chol_l = llt.matrixL();
    auto eng = make_engine(seed, {kStreamEvalData});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd theta =
          chol_l * standard_normal_vector(k, eng);
      const Eigen::VectorXd p =
          (start.params.a * theta - start.params.b)
              .unaryExpr([](double v) { return sigmoid(v); });
      for (int r = 0; r < j; ++r)
        eval_set.data(i, r) = unif(eng) < p[r] ? 1.0 : 0.0;
    }
  }

  const FrozenProposal proposal = FrozenProposal::from(start.vstate);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  LrSelection sel;
  sel.scores.assign(adam_cfg.lr_grid.size(), nan);
  bool have_best = false;
  double best_score = 0.0;

  for (std::size_t ci = 0; ci < adam_cfg.lr_grid.size(); ++ci) {
    const double rate = adam_cfg.lr_grid[ci];
    if (rate <= 0.0) throw DomainError("learning rate candidates must be positive");
    ModelParams params = start.params;
    Eigen::MatrixXd prec =
        spd_inverse(start.params.sigma_theta, "starting factor covariance");
    AdamState st = AdamState::init(j, k);
    AdamConfig acfg = adam_cfg;
    acfg.base_lr = rate;
    IwConfig icfg = iw_cfg;
    icfg.seed = derive_seed(seed, {kStreamCandidate, ci});
    try {
      for (int step = 1; step <= adam_cfg.selection_steps; ++step)
        iw_ascent_step(responses, structure, proposal, params, prec, st, icfg,
                       acfg, update_sigma, static_cast<std::uint64_t>(step));
      if (!params.a.allFinite() || !params.b.allFinite() ||
          !params.sigma_theta.allFinite())
        continue;
      const VariationalState ev =
          fit_variational_state(eval_set, params, 1e-6, 100);
      IwConfig ecfg = iw_cfg;
      ecfg.seed = derive_seed(seed, {kStreamEvalElbo});
      const double score = iw_elbo(eval_set, ev, params, ecfg, 0);
      if (!std::isfinite(score)) continue;
      sel.scores[ci] = score;
      const bool better =
          !have_best || score > best_score ||
          (score == best_score && rate < sel.rate);
      if (better) {
        have_best = true;
        best_score = score;
        sel.rate = rate;
      }
    } catch (const LinAlgError&) {
    } catch (const DegenerateWeightsError&) {
    }
  }
  if (!have_best)
    throw SelectionError("every learning rate candidate diverged");
  return sel;
}

}  // namespace iwgvem
