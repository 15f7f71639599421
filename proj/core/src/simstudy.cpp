#include "iwgvem/simstudy.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <utility>

#include "iwgvem/gvem.hpp"
#include "iwgvem/iw.hpp"
#include "iwgvem/parallel.hpp"
#include "iwgvem/rng.hpp"
#include "iwgvem/rotation.hpp"

namespace iwgvem {

namespace {

// Stream tags for seed derivation.
constexpr std::uint64_t kStreamDataset = 301;
constexpr std::uint64_t kStreamElboExp = 302;

void check_design(const StudyDesign& d) {
  if (d.n_persons < 1 || d.n_factors < 1 || d.n_items < 1)
    throw DomainError("design dimensions must be positive");
  if (d.n_replications < 1)
    throw DomainError("replication count must be positive");
  if (d.corr_lo > d.corr_hi || d.corr_lo <= -1.0 || d.corr_hi >= 1.0)
    throw DomainError("correlation band must lie inside (-1, 1)");
}

std::vector<std::vector<int>> combinations(int k, int size) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(size));
  // Lexicographic enumeration of size-element subsets of {0, ..., k-1}.
  auto rec = [&](auto&& self, int start, int depth) -> void {
    if (depth == size) {
      out.push_back(cur);
      return;
    }
    for (int v = start; v < k; ++v) {
      cur[static_cast<std::size_t>(depth)] = v;
      self(self, v + 1, depth + 1);
    }
  };
  rec(rec, 0, 0);
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt_seconds(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string design_prefix(const StudyDesign& d) {
  return std::to_string(d.n_persons) + "," + std::to_string(d.n_factors) +
         "," + std::to_string(d.n_items) + "," +
         (d.structure == StructureKind::between ? "between" : "within") +
         "," + d.corr_label + "," +
         (d.exploratory ? "exploratory" : "confirmatory");
}

}  // namespace

LoadingStructure generate_structure(int n_items, int n_factors,
                                    StructureKind kind) {
  if (n_items < 1 || n_factors < 1)
    throw DomainError("structure dimensions must be positive");
  LoadingStructure out;
  out.mask = Eigen::MatrixXd::Zero(n_items, n_factors);
  if (n_factors == 1) {
    out.mask.setOnes();
    return out;
  }

  if (kind == StructureKind::between) {
    if (n_items < n_factors)
      throw DesignError("between structure needs at least one item per factor");
    const int base = n_items / n_factors;
    const int rem = n_items % n_factors;
    int row = 0;
    for (int g = 0; g < n_factors; ++g) {
      const int size = base + (g < rem ? 1 : 0);
      for (int t = 0; t < size; ++t) out.mask(row++, g) = 1.0;
    }
    return out;
  }

  if (n_items < 3)
    throw DesignError("within structure needs at least three items");
  const int third = n_items / 3;
  const int n1 = n_items - 2 * third;

  if (n_factors == 2) {
    for (int t = 0; t < n1; ++t) out.mask(t, 0) = 1.0;
    for (int t = 0; t < third; ++t) out.mask(n1 + t, 1) = 1.0;
    for (int t = 0; t < third; ++t) {
      out.mask(n1 + third + t, 0) = 1.0;
      out.mask(n1 + third + t, 1) = 1.0;
    }
  } else {
    const auto pairs = combinations(n_factors, 2);
    const auto triples = combinations(n_factors, 3);
    int row = 0;
    for (int t = 0; t < n1; ++t, ++row)
      out.mask(row, t % n_factors) = 1.0;
    for (int t = 0; t < third; ++t, ++row)
      for (int f : pairs[static_cast<std::size_t>(t) % pairs.size()])
        out.mask(row, f) = 1.0;
    for (int t = 0; t < third; ++t, ++row)
      for (int f : triples[static_cast<std::size_t>(t) % triples.size()])
        out.mask(row, f) = 1.0;
  }

  if ((out.mask.colwise().sum().array() < 1.0).any())
    throw DesignError("within structure leaves a factor with no items");
  return out;
}

Dataset generate_dataset(const StudyDesign& design, std::uint64_t seed) {
  check_design(design);
  Dataset out;
  out.truth.structure =
      generate_structure(design.n_items, design.n_factors, design.structure);

  const int n = design.n_persons;
  const int j = design.n_items;
  const int k = design.n_factors;
  auto eng = make_engine(seed, {kStreamDataset});

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(k, k);
  if (k > 1) {
    std::uniform_real_distribution<double> corr(design.corr_lo,
                                                design.corr_hi);
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      for (int r = 0; r < k; ++r)
        for (int c = r + 1; c < k; ++c) {
          const double v = corr(eng);
          sigma(r, c) = v;
          sigma(c, r) = v;
        }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
      ok = es.eigenvalues().minCoeff() > 1e-6;
    }
    if (!ok)
      throw DesignError("no positive definite factor covariance in 100 draws");
  }

  std::uniform_real_distribution<double> disc(1.0, 2.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(j, k);
  for (int r = 0; r < j; ++r)
    for (int c = 0; c < k; ++c)
      if (out.truth.structure.mask(r, c) != 0.0) a(r, c) = disc(eng);

  std::normal_distribution<double> z;
  Eigen::VectorXd b(j);
  for (int r = 0; r < j; ++r) b[r] = z(eng);

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw DesignError("factor covariance draw is not positive definite");
  const Eigen::MatrixXd chol_l = llt.matrixL();
  out.truth.theta = sample_mvn_rows(Eigen::VectorXd::Zero(k), chol_l, n, eng);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  out.responses.data.resize(n, j);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x =
        a * out.truth.theta.row(i).transpose() - b;
    for (int r = 0; r < j; ++r)
      out.responses.data(i, r) = unif(eng) < sigmoid(x[r]) ? 1.0 : 0.0;
  }

  out.truth.params.a = std::move(a);
  out.truth.params.b = std::move(b);
  out.truth.params.sigma_theta = std::move(sigma);
  return out;
}

EvalResult evaluate(const ModelParams& estimate, const TrueModel& truth,
                    bool exploratory, int promax_power) {
  const int j = truth.structure.n_items();
  const int k = truth.structure.n_factors();
  if (estimate.a.rows() != j || estimate.a.cols() != k)
    throw DomainError("estimate shape does not match the generating model");

  auto block_metrics = [](double sum, double sum_sq, int n) {
    BlockMetrics m;
    m.bias = sum / n;
    m.rmse = std::sqrt(sum_sq / n);
    return m;
  };

  EvalResult out;
  Eigen::MatrixXd a_est = estimate.a;
  Eigen::MatrixXd sigma_est = estimate.sigma_theta;
  bool a_all_entries = exploratory;

  if (exploratory && k > 1) {
    const RotationResult rot = promax(estimate.a, promax_power);
    const AlignedSolution aligned =
        align_to_truth(rot.loadings, rot.phi, truth.params.a);
    a_est = aligned.loadings;
    sigma_est = aligned.phi;
  }

  {
    double sum = 0.0, sum_sq = 0.0;
    int n = 0;
    for (int r = 0; r < j; ++r)
      for (int c = 0; c < k; ++c) {
        if (!a_all_entries && truth.structure.mask(r, c) == 0.0) continue;
        const double d = a_est(r, c) - truth.params.a(r, c);
        sum += d;
        sum_sq += d * d;
        ++n;
      }
    out.a = block_metrics(sum, sum_sq, n);
  }
  {
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < j; ++r) {
      const double d = estimate.b[r] - truth.params.b[r];
      sum += d;
      sum_sq += d * d;
    }
    out.b = block_metrics(sum, sum_sq, j);
  }
  if (k > 1) {
    double sum = 0.0, sum_sq = 0.0;
    int n = 0;
    for (int r = 0; r < k; ++r)
      for (int c = r + 1; c < k; ++c) {
        const double d = sigma_est(r, c) - truth.params.sigma_theta(r, c);
        sum += d;
        sum_sq += d * d;
        ++n;
      }
    out.sigma = block_metrics(sum, sum_sq, n);
  }
  return out;
}

StudyResult run_study(const std::vector<StudyDesign>& designs,
                      const FitConfig& config, std::uint64_t base_seed,
                      int n_threads) {
  if (designs.empty()) throw DomainError("study has no design cells");
  for (const auto& d : designs) check_design(d);

  StudyResult out;
  out.cells.resize(designs.size());
  std::vector<std::pair<std::size_t, int>> units;
  for (std::size_t ci = 0; ci < designs.size(); ++ci) {
    out.cells[ci].design = designs[ci];
    out.cells[ci].records.resize(
        static_cast<std::size_t>(designs[ci].n_replications) * 2);
    for (int rep = 0; rep < designs[ci].n_replications; ++rep)
      units.emplace_back(ci, rep);
  }

  parallel_for_index(units.size(), n_threads, [&](std::size_t u) {
    const auto [ci, rep] = units[u];
    const StudyDesign& d = designs[ci];
    const std::uint64_t rep_seed = base_seed + static_cast<std::uint64_t>(rep);

    const Dataset data = generate_dataset(d, rep_seed);
    LoadingStructure fit_structure = data.truth.structure;
    if (d.exploratory) fit_structure.mask.setOnes();

    FitConfig fc = config;
    fc.exploratory = d.exploratory;
    fc.seed = rep_seed;
    const FitResult res = fit(data.responses, fit_structure, fc);

    ReplicationRecord gvem_rec;
    gvem_rec.rep = rep;
    gvem_rec.seed = rep_seed;
    gvem_rec.method = "gvem";
    gvem_rec.metrics =
        evaluate(res.gvem_params, data.truth, d.exploratory, fc.promax_power);
    gvem_rec.seconds = res.seconds_gvem;
    gvem_rec.converged = res.gvem_converged;

    ReplicationRecord iw_rec;
    iw_rec.rep = rep;
    iw_rec.seed = rep_seed;
    iw_rec.method = "iwgvem";
    iw_rec.metrics =
        evaluate(res.params, data.truth, d.exploratory, fc.promax_power);
    iw_rec.seconds = res.seconds_gvem + res.seconds_iw;
    iw_rec.converged = res.iw_converged;

    out.cells[ci].records[static_cast<std::size_t>(rep) * 2] =
        std::move(gvem_rec);
    out.cells[ci].records[static_cast<std::size_t>(rep) * 2 + 1] =
        std::move(iw_rec);
  });
  return out;
}

ElboExperimentResult elbo_experiment(const StudyDesign& design,
                                     const std::vector<int>& m_grid,
                                     int n_outer, std::uint64_t base_seed,
                                     int n_threads) {
  check_design(design);
  if (m_grid.empty()) throw DomainError("inner sample grid is empty");
  if (n_outer < 1) throw DomainError("outer sample count must be positive");

  ElboExperimentResult out;
  out.design = design;
  out.m_grid = m_grid;
  out.rows.resize(static_cast<std::size_t>(design.n_replications));

  parallel_for_index(
      static_cast<std::size_t>(design.n_replications), n_threads,
      [&](std::size_t u) {
        const int rep = static_cast<int>(u);
        const std::uint64_t rep_seed =
            base_seed + static_cast<std::uint64_t>(rep);
        const Dataset data = generate_dataset(design, rep_seed);
        const GvemFit gvem = fit_gvem(data.responses, data.truth.structure);

        ElboExperimentResult::Row row;
        row.rep = rep;
        row.seed = rep_seed;
        row.gvem_elbo =
            expected_elbo(data.responses, gvem.vstate, gvem.params);
        row.iw_elbo = check_monotone_in_m(
            data.responses, gvem.vstate, gvem.params, m_grid, n_outer,
            derive_seed(rep_seed, {kStreamElboExp}));
        out.rows[u] = std::move(row);
      });
  return out;
}

std::string results_csv(const StudyResult& result) {
  std::string csv =
      "n,k,j,structure,correlation,mode,rep,seed,method,block,bias,rmse,"
      "converged\n";
  for (const auto& cell : result.cells) {
    const std::string prefix = design_prefix(cell.design);
    for (const auto& rec : cell.records) {
      const std::string row_head = prefix + "," + std::to_string(rec.rep) +
                                   "," + std::to_string(rec.seed) + "," +
                                   rec.method + ",";
      const std::string tail =
          std::string(",") + (rec.converged ? "1" : "0") + "\n";
      csv += row_head + "a," + fmt_double(rec.metrics.a.bias) + "," +
             fmt_double(rec.metrics.a.rmse) + tail;
      csv += row_head + "b," + fmt_double(rec.metrics.b.bias) + "," +
             fmt_double(rec.metrics.b.rmse) + tail;
      if (rec.metrics.sigma)
        csv += row_head + "sigma," + fmt_double(rec.metrics.sigma->bias) +
               "," + fmt_double(rec.metrics.sigma->rmse) + tail;
    }
  }
  return csv;
}

std::string timings_csv(const StudyResult& result) {
  std::string csv = "n,k,j,structure,correlation,mode,rep,seed,method,seconds\n";
  for (const auto& cell : result.cells) {
    const std::string prefix = design_prefix(cell.design);
    for (const auto& rec : cell.records)
      csv += prefix + "," + std::to_string(rec.rep) + "," +
             std::to_string(rec.seed) + "," + rec.method + "," +
             fmt_seconds(rec.seconds) + "\n";
  }
  return csv;
}

std::string elbo_csv(const ElboExperimentResult& result) {
  std::string csv = "n,k,j,structure,correlation,rep,seed,elbo_gvem";
  for (int m : result.m_grid) csv += ",elbo_iw_m" + std::to_string(m);
  csv += "\n";
  const StudyDesign& d = result.design;
  const std::string prefix =
      std::to_string(d.n_persons) + "," + std::to_string(d.n_factors) + "," +
      std::to_string(d.n_items) + "," +
      (d.structure == StructureKind::between ? "between" : "within") + "," +
      d.corr_label;
  for (const auto& row : result.rows) {
    csv += prefix + "," + std::to_string(row.rep) + "," +
           std::to_string(row.seed) + "," + fmt_double(row.gvem_elbo);
    for (double v : row.iw_elbo) csv += "," + fmt_double(v);
    csv += "\n";
  }
  return csv;
}

std::vector<CellAggregate> aggregate(const StudyResult& result) {
  std::vector<CellAggregate> out;
  out.reserve(result.cells.size());
  for (const auto& cell : result.cells) {
    CellAggregate agg;
    agg.design = cell.design;
    agg.n_reps = cell.design.n_replications;

    for (const std::string& method : {std::string("gvem"),
                                      std::string("iwgvem")}) {
      double sec_sum = 0.0;
      int n_conv = 0, n_rec = 0;
      struct Acc {
        double bias = 0.0, rmse = 0.0;
        int n = 0;
      } acc_a, acc_b, acc_sigma;
      for (const auto& rec : cell.records) {
        if (rec.method != method) continue;
        ++n_rec;
        sec_sum += rec.seconds;
        if (rec.converged) ++n_conv;
        acc_a.bias += rec.metrics.a.bias;
        acc_a.rmse += rec.metrics.a.rmse;
        ++acc_a.n;
        acc_b.bias += rec.metrics.b.bias;
        acc_b.rmse += rec.metrics.b.rmse;
        ++acc_b.n;
        if (rec.metrics.sigma) {
          acc_sigma.bias += rec.metrics.sigma->bias;
          acc_sigma.rmse += rec.metrics.sigma->rmse;
          ++acc_sigma.n;
        }
      }
      auto push = [&](const std::string& block, const Acc& acc) {
        if (acc.n == 0) return;
        AggregateRow row;
        row.method = method;
        row.block = block;
        row.mean_bias = acc.bias / acc.n;
        row.mean_rmse = acc.rmse / acc.n;
        row.n = acc.n;
        agg.rows.push_back(std::move(row));
      };
      push("a", acc_a);
      push("b", acc_b);
      push("sigma", acc_sigma);
      if (method == "gvem") {
        agg.mean_seconds_gvem = n_rec ? sec_sum / n_rec : 0.0;
        agg.converged_gvem = n_conv;
      } else {
        agg.mean_seconds_iwgvem = n_rec ? sec_sum / n_rec : 0.0;
        agg.converged_iwgvem = n_conv;
      }
    }
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace iwgvem
