#include "iwgvem/iw.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "iwgvem/rng.hpp"

namespace iwgvem {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// x(row, j) = a_j' theta_row - b_j.
Eigen::MatrixXd linear_predictors(const ThetaSamples& samples,
                                  const ModelParams& params) {
  Eigen::MatrixXd x = samples.draws * params.a.transpose();
  x.rowwise() -= params.b.transpose();
  return x;
}

// log p(y_i, theta) per row given precomputed linear predictors.
Eigen::VectorXd joint_log_density_rows(const Eigen::MatrixXd& x,
                                       const ResponseMatrix& responses,
                                       const ThetaSamples& samples,
                                       const ModelParams& params) {
  const int n = samples.n;
  const int block = samples.s * samples.m;
  const int k = samples.k;

  Eigen::VectorXd lp =
      -(x.array().max(0.0) + (-x.array().abs()).exp().log1p())
           .rowwise()
           .sum()
           .matrix();
  for (int i = 0; i < n; ++i)
    lp.segment(static_cast<Eigen::Index>(i) * block, block).noalias() +=
        x.middleRows(static_cast<Eigen::Index>(i) * block, block) *
        responses.data.row(i).transpose();

  Eigen::LLT<Eigen::MatrixXd> llt(params.sigma_theta);
  if (llt.info() != Eigen::Success)
    throw LinAlgError("factor covariance is not positive definite");
  const Eigen::MatrixXd prior_l = llt.matrixL();
  const double prior_logdet = 2.0 * prior_l.diagonal().array().log().sum();
  const Eigen::MatrixXd prior_prec = llt.solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::VectorXd quad =
      ((samples.draws * prior_prec).cwiseProduct(samples.draws))
          .rowwise()
          .sum();
  lp.array() += -0.5 * quad.array() - 0.5 * (prior_logdet + k * kLog2Pi);
  return lp;
}

// log q_i(theta) per row from the frozen proposal factors.
Eigen::VectorXd proposal_log_density_rows(const FrozenProposal& proposal,
                                          const ThetaSamples& samples) {
  const int n = samples.n;
  const int block = samples.s * samples.m;
  const int k = samples.k;
  Eigen::VectorXd lq(samples.draws.rows());
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd centered =
        samples.draws.middleRows(static_cast<Eigen::Index>(i) * block, block);
    centered.rowwise() -= proposal.mu.row(i);
    const Eigen::MatrixXd half =
        proposal.chol_l[static_cast<std::size_t>(i)]
            .triangularView<Eigen::Lower>()
            .solve(centered.transpose());
    lq.segment(static_cast<Eigen::Index>(i) * block, block) =
        (-0.5 * half.colwise().squaredNorm().array() -
         0.5 * (proposal.logdet[i] + k * kLog2Pi))
            .matrix()
            .transpose();
  }
  return lq;
}

WeightBlock weights_from_log(const Eigen::VectorXd& lw, int n, int s, int m) {
  WeightBlock out;
  out.n = n;
  out.s = s;
  out.m = m;
  const Eigen::Index rows = static_cast<Eigen::Index>(n) * s;
  out.log_raw = Eigen::Map<const Eigen::Matrix<
      double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(lw.data(),
                                                                 rows, m);
  out.log_scale = out.log_raw.rowwise().maxCoeff();
  if (!out.log_scale.allFinite())
    throw DegenerateWeightsError(
        "importance weights are all zero or non-finite for some person");
  out.normalized =
      (out.log_raw.colwise() - out.log_scale).array().exp().matrix();
  const Eigen::VectorXd row_sums = out.normalized.rowwise().sum();
  out.normalized.array().colwise() /= row_sums.array();
  return out;
}

// Self-normalized gradients given precomputed linear predictors.
IwGradients gradients_from(const Eigen::MatrixXd& x,
                           const ResponseMatrix& responses,
                           const ThetaSamples& samples,
                           const WeightBlock& weights,
                           const ModelParams& params,
                           const LoadingStructure& structure) {
  const int n = samples.n;
  const int block = samples.s * samples.m;

  // resid(row, j) = y_ij - sigmoid(x), then scaled by the flat weight w / S.
  Eigen::ArrayXXd t = (-x.array().abs()).exp();
  Eigen::MatrixXd resid =
      -((x.array() >= 0.0).select(1.0 / (1.0 + t), t / (1.0 + t))).matrix();
  for (int i = 0; i < n; ++i)
    resid.middleRows(static_cast<Eigen::Index>(i) * block, block).rowwise() +=
        responses.data.row(i);

  // Row-major flattening puts entry (i * S + s, m) at flat row
  // (i * S + s) * M + m, matching the draw order.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      scaled = weights.normalized / static_cast<double>(samples.s);
  const Eigen::Map<const Eigen::VectorXd> flat_w(scaled.data(), scaled.size());

  resid.array().colwise() *= flat_w.array();

  IwGradients out;
  out.a = (resid.transpose() * samples.draws).cwiseProduct(structure.mask);
  out.b = -resid.colwise().sum().transpose();

  const Eigen::MatrixXd weighted_draws =
      (samples.draws.array().colwise() * flat_w.array()).matrix();
  const Eigen::MatrixXd second = samples.draws.transpose() * weighted_draws;
  Eigen::MatrixXd g = 0.5 * (flat_w.sum() * params.sigma_theta - second);
  out.prior_precision = 0.5 * (g + g.transpose());
  return out;
}

void check_sample_shapes(const ResponseMatrix& responses,
                         const ThetaSamples& samples,
                         const ModelParams& params, int proposal_n) {
  if (samples.n != responses.n_persons() || samples.n != proposal_n)
    throw DomainError("sample block does not match person count");
  if (params.a.rows() != responses.n_items() || params.a.cols() != samples.k)
    throw DomainError("parameter shapes do not match samples");
}

}  // namespace

FrozenProposal FrozenProposal::from(const VariationalState& vstate) {
  FrozenProposal p;
  const int n = static_cast<int>(vstate.mu.rows());
  p.mu = vstate.mu;
  p.chol_l.resize(static_cast<std::size_t>(n));
  p.logdet.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::LLT<Eigen::MatrixXd> llt(vstate.sigma[static_cast<std::size_t>(i)]);
    if (llt.info() != Eigen::Success)
      throw LinAlgError("proposal covariance is not positive definite");
    p.chol_l[static_cast<std::size_t>(i)] = llt.matrixL();
    p.logdet[i] =
        2.0 *
        p.chol_l[static_cast<std::size_t>(i)].diagonal().array().log().sum();
  }
  return p;
}

ThetaSamples draw_samples(const FrozenProposal& proposal, const IwConfig& cfg,
                          std::uint64_t iteration) {
  if (cfg.s < 1 || cfg.m < 1)
    throw DomainError("sample counts must be positive");
  const int n = proposal.n_persons();
  const int k = proposal.n_factors();
  const int block = cfg.s * cfg.m;
  ThetaSamples out;
  out.n = n;
  out.s = cfg.s;
  out.m = cfg.m;
  out.k = k;
  out.draws.resize(static_cast<Eigen::Index>(n) * block, k);
  for (int i = 0; i < n; ++i) {
    auto eng =
        make_engine(cfg.seed, {static_cast<std::uint64_t>(i), iteration});
    out.draws.middleRows(static_cast<Eigen::Index>(i) * block, block) =
        sample_mvn_rows(proposal.mu.row(i).transpose(),
                        proposal.chol_l[static_cast<std::size_t>(i)], block,
                        eng);
  }
  return out;
}

ThetaSamples draw_samples(const VariationalState& vstate, const IwConfig& cfg,
                          std::uint64_t iteration) {
  return draw_samples(FrozenProposal::from(vstate), cfg, iteration);
}

WeightBlock compute_weights(const ResponseMatrix& responses,
                            const ThetaSamples& samples,
                            const ModelParams& params,
                            const FrozenProposal& proposal) {
  check_sample_shapes(responses, samples, params, proposal.n_persons());
  const Eigen::MatrixXd x = linear_predictors(samples, params);
  const Eigen::VectorXd lw =
      joint_log_density_rows(x, responses, samples, params) -
      proposal_log_density_rows(proposal, samples);
  return weights_from_log(lw, samples.n, samples.s, samples.m);
}

WeightBlock compute_weights(const ResponseMatrix& responses,
                            const ThetaSamples& samples,
                            const ModelParams& params,
                            const VariationalState& vstate) {
  return compute_weights(responses, samples, params,
                         FrozenProposal::from(vstate));
}

double iw_elbo(const WeightBlock& weights) {
  const Eigen::VectorXd row_lse =
      weights.log_scale.array() +
      (weights.log_raw.colwise() - weights.log_scale)
          .array()
          .exp()
          .rowwise()
          .sum()
          .log();
  return (row_lse.array() - std::log(static_cast<double>(weights.m))).sum() /
         static_cast<double>(weights.s);
}

double iw_elbo(const ResponseMatrix& responses, const FrozenProposal& proposal,
               const ModelParams& params, const IwConfig& cfg,
               std::uint64_t iteration) {
  const ThetaSamples samples = draw_samples(proposal, cfg, iteration);
  return iw_elbo(compute_weights(responses, samples, params, proposal));
}

double iw_elbo(const ResponseMatrix& responses, const VariationalState& vstate,
               const ModelParams& params, const IwConfig& cfg,
               std::uint64_t iteration) {
  return iw_elbo(responses, FrozenProposal::from(vstate), params, cfg,
                 iteration);
}

IwGradients gradients(const ResponseMatrix& responses,
                      const ThetaSamples& samples, const WeightBlock& weights,
                      const ModelParams& params,
                      const LoadingStructure& structure) {
  check_sample_shapes(responses, samples, params, samples.n);
  if (weights.n != samples.n || weights.s != samples.s ||
      weights.m != samples.m)
    throw DomainError("weight block does not match samples");
  const Eigen::MatrixXd x = linear_predictors(samples, params);
  return gradients_from(x, responses, samples, weights, params, structure);
}

IwIterationEval iw_iteration_eval(const ResponseMatrix& responses,
                                  const ThetaSamples& samples,
                                  const ModelParams& params,
                                  const FrozenProposal& proposal,
                                  const LoadingStructure& structure) {
  check_sample_shapes(responses, samples, params, proposal.n_persons());
  const Eigen::MatrixXd x = linear_predictors(samples, params);
  const Eigen::VectorXd lw =
      joint_log_density_rows(x, responses, samples, params) -
      proposal_log_density_rows(proposal, samples);
  IwIterationEval out;
  WeightBlock weights = weights_from_log(lw, samples.n, samples.s, samples.m);
  out.elbo = iw_elbo(weights);
  out.grads =
      gradients_from(x, responses, samples, weights, params, structure);
  return out;
}

std::vector<double> check_monotone_in_m(const ResponseMatrix& responses,
                                        const VariationalState& vstate,
                                        const ModelParams& params,
                                        const std::vector<int>& m_grid,
                                        int n_outer, std::uint64_t seed) {
  if (m_grid.empty()) throw DomainError("inner sample grid is empty");
  if (n_outer < 1) throw DomainError("outer sample count must be positive");
  int m_max = 0;
  for (int m : m_grid) {
    if (m < 1) throw DomainError("inner sample counts must be positive");
    m_max = std::max(m_max, m);
  }
  const FrozenProposal proposal = FrozenProposal::from(vstate);
  const int n = responses.n_persons();

  std::vector<double> acc(m_grid.size(), 0.0);
  // One person at a time keeps the draw block small at large m_max.
  for (int i = 0; i < n; ++i) {
    ResponseMatrix person;
    person.data = responses.data.row(i);
    FrozenProposal sub;
    sub.mu = proposal.mu.row(i);
    sub.chol_l = {proposal.chol_l[static_cast<std::size_t>(i)]};
    sub.logdet = proposal.logdet.segment(i, 1);

    ThetaSamples samples;
    samples.n = 1;
    samples.s = n_outer;
    samples.m = m_max;
    samples.k = proposal.n_factors();
    // One stream per (person, outer replicate): the first m draws of a
    // replicate never depend on the grid, so estimates share draws across
    // grids as well as within one.
    samples.draws.resize(static_cast<Eigen::Index>(n_outer) * m_max,
                         samples.k);
    for (int outer = 0; outer < n_outer; ++outer) {
      auto eng = make_engine(seed, {static_cast<std::uint64_t>(i),
                                    static_cast<std::uint64_t>(outer)});
      samples.draws.middleRows(static_cast<Eigen::Index>(outer) * m_max,
                               m_max) =
          sample_mvn_rows(proposal.mu.row(i).transpose(),
                          proposal.chol_l[static_cast<std::size_t>(i)], m_max,
                          eng);
    }

    const Eigen::MatrixXd x = linear_predictors(samples, params);
    const Eigen::VectorXd lw =
        joint_log_density_rows(x, person, samples, params) -
        proposal_log_density_rows(sub, samples);
    for (int outer = 0; outer < n_outer; ++outer) {
      const auto seg =
          lw.segment(static_cast<Eigen::Index>(outer) * m_max, m_max);
      for (std::size_t gi = 0; gi < m_grid.size(); ++gi) {
        const int m = m_grid[gi];
        const double mx = seg.head(m).maxCoeff();
        if (!std::isfinite(mx))
          throw DegenerateWeightsError(
              "importance weights are all zero or non-finite");
        const double lse =
            mx + std::log((seg.head(m).array() - mx).exp().sum());
        acc[gi] +=
            (lse - std::log(static_cast<double>(m))) / static_cast<double>(n_outer);
      }
    }
  }
  return acc;
}

}  // namespace iwgvem
