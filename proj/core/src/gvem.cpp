#include "iwgvem/gvem.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numbers>
#include <string>

namespace iwgvem {

namespace {

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw LinAlgError(std::string(what) + " is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

// E-step for one person with the prior precision already inverted.
void estep_person_prec(const Eigen::VectorXd& y_row,
                       const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                       const Eigen::MatrixXd& prior_prec,
                       const Eigen::VectorXd& xi_row, Eigen::VectorXd& mu_out,
                       Eigen::MatrixXd& sigma_out) {
  const int k = static_cast<int>(a.cols());
  const int j = static_cast<int>(a.rows());
  Eigen::VectorXd eta2(j);
  for (int r = 0; r < j; ++r) eta2[r] = 2.0 * eta(xi_row[r]);
  const Eigen::MatrixXd prec =
      prior_prec + a.transpose() * eta2.asDiagonal() * a;
  const Eigen::VectorXd coef =
      eta2.cwiseProduct(b) + y_row - Eigen::VectorXd::Constant(j, 0.5);
  Eigen::LLT<Eigen::MatrixXd> llt(prec);
  if (llt.info() != Eigen::Success)
    throw LinAlgError("posterior precision is not positive definite");
  sigma_out = llt.solve(Eigen::MatrixXd::Identity(k, k));
  mu_out = llt.solve(a.transpose() * coef);
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::MatrixXd> estep_person(
    const Eigen::VectorXd& y_row, const ModelParams& params,
    const Eigen::VectorXd& xi_row) {
  const Eigen::MatrixXd prior_prec =
      spd_inverse(params.sigma_theta, "factor covariance");
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  estep_person_prec(y_row, params.a, params.b, prior_prec, xi_row, mu, sigma);
  return {std::move(mu), std::move(sigma)};
}

Eigen::MatrixXd update_xi(const ModelParams& params,
                          const VariationalState& vstate) {
  const int n = static_cast<int>(vstate.mu.rows());
  const int j = static_cast<int>(params.a.rows());
  Eigen::MatrixXd xi(n, j);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd mu = vstate.mu.row(i).transpose();
    const Eigen::MatrixXd s = vstate.sigma[i] + mu * mu.transpose();
    const Eigen::VectorXd t = params.a * mu;
    const Eigen::VectorXd quad =
        ((params.a * s).cwiseProduct(params.a)).rowwise().sum();
    for (int r = 0; r < j; ++r) {
      const double v =
          params.b[r] * params.b[r] - 2.0 * params.b[r] * t[r] + quad[r];
      xi(i, r) = std::sqrt(std::max(v, 0.0));
    }
  }
  return xi;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> mstep_item(
    const ResponseMatrix& responses, const VariationalState& vstate,
    const LoadingStructure& structure) {
  const int n = responses.n_persons();
  const int j = responses.n_items();
  const int k = structure.n_factors();

  // Per-person second moments are shared across items.
  std::vector<Eigen::MatrixXd> smat(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd mu = vstate.mu.row(i).transpose();
    smat[static_cast<std::size_t>(i)] = vstate.sigma[i] + mu * mu.transpose();
  }

  Eigen::MatrixXd a_new = Eigen::MatrixXd::Zero(j, k);
  Eigen::VectorXd b_new(j);

  for (int item = 0; item < j; ++item) {
    double cap_h = 0.0;                                   // sum_i eta_ij
    Eigen::VectorXd h = Eigen::VectorXd::Zero(k);         // sum_i eta_ij mu_i
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, k);      // sum_i eta_ij S_i
    Eigen::VectorXd r = Eigen::VectorXd::Zero(k);         // sum_i (y-1/2) mu_i
    double c0 = 0.0;                                      // sum_i (1/2 - y)
    for (int i = 0; i < n; ++i) {
      const double e = eta(vstate.xi(i, item));
      const double y = responses.data(i, item);
      cap_h += e;
      h += e * vstate.mu.row(i).transpose();
      g += e * smat[static_cast<std::size_t>(i)];
      r += (y - 0.5) * vstate.mu.row(i).transpose();
      c0 += 0.5 - y;
    }

    std::vector<int> free;
    for (int c = 0; c < k; ++c)
      if (structure.mask(item, c) != 0.0) free.push_back(c);
    const int f = static_cast<int>(free.size());

    // Substituting the stationary b_j into the stationarity conditions
    // for a_j leaves [2 G - 2 h h' / H] a = r + (c0 / H) h on the free
    // entries.
    Eigen::MatrixXd lhs(f, f);
    Eigen::VectorXd rhs(f);
    for (int p = 0; p < f; ++p) {
      rhs[p] = r[free[static_cast<std::size_t>(p)]] +
               (c0 / cap_h) * h[free[static_cast<std::size_t>(p)]];
      for (int q = 0; q < f; ++q)
        lhs(p, q) = 2.0 * g(free[static_cast<std::size_t>(p)],
                            free[static_cast<std::size_t>(q)]) -
                    2.0 * h[free[static_cast<std::size_t>(p)]] *
                        h[free[static_cast<std::size_t>(q)]] / cap_h;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(lhs);
    if (llt.info() != Eigen::Success)
      throw LinAlgError("item update system is rank deficient for item " +
                        std::to_string(item));
    const Eigen::VectorXd a_free = llt.solve(rhs);
    for (int p = 0; p < f; ++p)
      a_new(item, free[static_cast<std::size_t>(p)]) = a_free[p];
    b_new[item] =
        (c0 + 2.0 * h.dot(a_new.row(item).transpose())) / (2.0 * cap_h);
  }
  return {std::move(a_new), std::move(b_new)};
}

Eigen::MatrixXd update_sigma_theta(const VariationalState& vstate) {
  const int n = static_cast<int>(vstate.mu.rows());
  const int k = static_cast<int>(vstate.mu.cols());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd mu = vstate.mu.row(i).transpose();
    acc += vstate.sigma[i] + mu * mu.transpose();
  }
  return acc / static_cast<double>(n);
}

ModelParams rescale_identification(const ModelParams& params) {
  ModelParams out = params;
  VariationalState dummy;
  dummy.mu.resize(0, params.a.cols());
  rescale_identification(out, dummy);
  return out;
}

void rescale_identification(ModelParams& params, VariationalState& vstate) {
  const int k = static_cast<int>(params.a.cols());
  Eigen::VectorXd d = params.sigma_theta.diagonal().cwiseSqrt();
  if (!(d.array() > 0.0).all())
    throw LinAlgError("factor covariance has a non-positive variance");
  for (int c = 0; c < k; ++c) params.a.col(c) *= d[c];
  const Eigen::VectorXd inv_d = d.cwiseInverse();
  params.sigma_theta =
      inv_d.asDiagonal() * params.sigma_theta * inv_d.asDiagonal();
  params.sigma_theta.diagonal().setOnes();
  for (int c = 0; c < k; ++c) vstate.mu.col(c) *= inv_d[c];
  for (auto& s : vstate.sigma)
    s = inv_d.asDiagonal() * s * inv_d.asDiagonal();
}

double expected_elbo(const ResponseMatrix& responses,
                     const VariationalState& vstate,
                     const ModelParams& params) {
  const int n = responses.n_persons();
  const int j = responses.n_items();
  const int k = static_cast<int>(params.a.cols());

  Eigen::LLT<Eigen::MatrixXd> prior_llt(params.sigma_theta);
  if (prior_llt.info() != Eigen::Success)
    throw LinAlgError("factor covariance is not positive definite");
  const Eigen::MatrixXd prior_l = prior_llt.matrixL();
  const double prior_logdet = 2.0 * prior_l.diagonal().array().log().sum();
  const Eigen::MatrixXd prior_prec =
      prior_llt.solve(Eigen::MatrixXd::Identity(k, k));

  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd mu = vstate.mu.row(i).transpose();
    const Eigen::MatrixXd s = vstate.sigma[i] + mu * mu.transpose();
    const Eigen::VectorXd t = params.a * mu;
    const Eigen::VectorXd quad =
        ((params.a * s).cwiseProduct(params.a)).rowwise().sum();
    for (int r = 0; r < j; ++r) {
      const double xi = vstate.xi(i, r);
      const double b = params.b[r];
      const double sq = b * b - 2.0 * b * t[r] + quad[r];
      acc += -log1pexp(-xi) + responses.data(i, r) * (t[r] - b) +
             0.5 * (b - t[r] - xi) - eta(xi) * (sq - xi * xi);
    }
    Eigen::LLT<Eigen::MatrixXd> post_llt(vstate.sigma[i]);
    if (post_llt.info() != Eigen::Success)
      throw LinAlgError("posterior covariance is not positive definite");
    const Eigen::MatrixXd post_l = post_llt.matrixL();
    acc += -0.5 * prior_logdet - 0.5 * (prior_prec * s).trace() +
           post_l.diagonal().array().log().sum() + 0.5 * k;
  }
  return acc;
}

void estep_sweep(const ResponseMatrix& responses, const ModelParams& params,
                 VariationalState& vstate) {
  const int n = responses.n_persons();
  const Eigen::MatrixXd prior_prec =
      spd_inverse(params.sigma_theta, "factor covariance");
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  for (int i = 0; i < n; ++i) {
    estep_person_prec(responses.data.row(i).transpose(), params.a, params.b,
                      prior_prec, vstate.xi.row(i).transpose(), mu, sigma);
    vstate.mu.row(i) = mu.transpose();
    vstate.sigma[static_cast<std::size_t>(i)] = sigma;
  }
}

VariationalState fit_variational_state(const ResponseMatrix& responses,
                                       const ModelParams& params, double tol,
                                       int max_sweeps) {
  const int n = responses.n_persons();
  const int j = responses.n_items();
  const int k = static_cast<int>(params.a.cols());
  VariationalState vstate;
  vstate.mu = Eigen::MatrixXd::Zero(n, k);
  vstate.sigma.assign(static_cast<std::size_t>(n),
                      Eigen::MatrixXd::Identity(k, k));
  vstate.xi = Eigen::MatrixXd::Ones(n, j);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    estep_sweep(responses, params, vstate);
    Eigen::MatrixXd xi_new = update_xi(params, vstate);
    const double delta = (xi_new - vstate.xi).norm();
    vstate.xi = std::move(xi_new);
    if (delta <= tol) break;
  }
  return vstate;
}

GvemFit fit_gvem(const ResponseMatrix& responses,
                 const LoadingStructure& structure, const GvemConfig& config) {
  validate(responses);
  validate(structure);
  if (responses.n_items() != structure.n_items())
    throw DomainError("responses and structure disagree on item count");
  if (config.tol <= 0.0 || config.max_iter < 1)
    throw DomainError("invalid convergence settings");

  const int n = responses.n_persons();
  const int j = responses.n_items();
  const int k = structure.n_factors();

  GvemFit fit;
  fit.params.a = structure.mask;  // free entries start at 1
  fit.params.b = Eigen::VectorXd::Zero(j);
  fit.params.sigma_theta = Eigen::MatrixXd::Identity(k, k);
  fit.vstate.mu = Eigen::MatrixXd::Zero(n, k);
  fit.vstate.sigma.assign(static_cast<std::size_t>(n),
                          Eigen::MatrixXd::Identity(k, k));
  fit.vstate.xi = Eigen::MatrixXd::Ones(n, j);

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    const Eigen::MatrixXd a_prev = fit.params.a;
    const Eigen::VectorXd b_prev = fit.params.b;
    const Eigen::MatrixXd sigma_prev = fit.params.sigma_theta;

    estep_sweep(responses, fit.params, fit.vstate);
    fit.vstate.xi = update_xi(fit.params, fit.vstate);
    auto [a_new, b_new] = mstep_item(responses, fit.vstate, structure);
    fit.params.a = std::move(a_new);
    fit.params.b = std::move(b_new);
    if (!config.exploratory)
      fit.params.sigma_theta = update_sigma_theta(fit.vstate);

    fit.elbo_trace.push_back(expected_elbo(responses, fit.vstate, fit.params));
    fit.n_iter = iter;

    const double delta = (fit.params.a - a_prev).norm() +
                         (fit.params.b - b_prev).norm() +
                         (fit.params.sigma_theta - sigma_prev).norm();
    if (delta <= config.tol) {
      fit.converged = true;
      break;
    }
  }

  if (!config.exploratory) rescale_identification(fit.params, fit.vstate);
  return fit;
}

}  // namespace iwgvem
