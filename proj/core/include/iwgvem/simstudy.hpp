#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iwgvem/model.hpp"
#include "iwgvem/pipeline.hpp"

namespace iwgvem {

enum class StructureKind { between, within };

// One simulation cell. The correlation band bounds the uniform draw for
// the off-diagonal entries of the generating factor covariance.
struct StudyDesign {
  int n_persons = 200;
  int n_factors = 2;
  int n_items = 30;
  StructureKind structure = StructureKind::between;
  double corr_lo = 0.1;
  double corr_hi = 0.3;
  std::string corr_label = "low";
  bool exploratory = false;
  int n_replications = 100;
};

inline StudyDesign with_low_correlation(StudyDesign d) {
  d.corr_lo = 0.1;
  d.corr_hi = 0.3;
  d.corr_label = "low";
  return d;
}
inline StudyDesign with_high_correlation(StudyDesign d) {
  d.corr_lo = 0.5;
  d.corr_hi = 0.7;
  d.corr_label = "high";
  return d;
}

// between: consecutive nearly equal blocks, block g loading only factor g.
// within (two factors): thirds loading factor 1 only, factor 2 only, both.
// within (three or more factors): nearly equal thirds with one, two, and
// three active factors, cycling through factors, pairs, and triples in
// lexicographic order.
LoadingStructure generate_structure(int n_items, int n_factors,
                                    StructureKind kind);

struct TrueModel {
  ModelParams params;
  LoadingStructure structure;
  Eigen::MatrixXd theta;  // abilities actually drawn, one row per person
};

struct Dataset {
  ResponseMatrix responses;
  TrueModel truth;
};

// Draws, in order: factor correlations (uniform on the band, resampled
// until positive definite), free discriminations (uniform on [1, 2]),
// intercepts (standard normal), abilities, then Bernoulli responses.
Dataset generate_dataset(const StudyDesign& design, std::uint64_t seed);

struct BlockMetrics {
  double bias = 0.0;
  double rmse = 0.0;
};

// Per-block error metrics against the generating values. Confirmatory
// estimates are compared entrywise (discriminations over free entries
// only; covariance over off-diagonal entries). Exploratory estimates are
// promax-rotated and sign/permutation aligned to the generating loadings
// first, then compared over all entries.
struct EvalResult {
  BlockMetrics a;
  BlockMetrics b;
  std::optional<BlockMetrics> sigma;  // absent for a single factor
};
EvalResult evaluate(const ModelParams& estimate, const TrueModel& truth,
                    bool exploratory, int promax_power = 4);

struct ReplicationRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  std::string method;  // "gvem" or "iwgvem"
  EvalResult metrics;
  double seconds = 0.0;
  bool converged = false;
};

struct StudyCellResult {
  StudyDesign design;
  std::vector<ReplicationRecord> records;
};

struct StudyResult {
  std::vector<StudyCellResult> cells;
};

// Fits every replication of every cell; replication r uses seed
// base_seed + r for data generation and fitting, so any thread count
// produces identical results.
StudyResult run_study(const std::vector<StudyDesign>& designs,
                      const FitConfig& config, std::uint64_t base_seed,
                      int n_threads = 1);

// Per-replication comparison of the first-phase bound against the
// importance-weighted bound over a grid of inner sample counts, computed
// at the first-phase solution with shared draws.
struct ElboExperimentResult {
  StudyDesign design;
  std::vector<int> m_grid;
  struct Row {
    int rep = 0;
    std::uint64_t seed = 0;
    double gvem_elbo = 0.0;
    std::vector<double> iw_elbo;
  };
  std::vector<Row> rows;
};
ElboExperimentResult elbo_experiment(const StudyDesign& design,
                                     const std::vector<int>& m_grid,
                                     int n_outer, std::uint64_t base_seed,
                                     int n_threads = 1);

// Deterministic CSV renderings; wall times live in a separate table so
// that the statistical outputs are bit-reproducible across runs.
std::string results_csv(const StudyResult& result);
std::string timings_csv(const StudyResult& result);
std::string elbo_csv(const ElboExperimentResult& result);

struct AggregateRow {
  std::string method;
  std::string block;
  double mean_bias = 0.0;
  double mean_rmse = 0.0;
  int n = 0;
};
struct CellAggregate {
  StudyDesign design;
  std::vector<AggregateRow> rows;
  double mean_seconds_gvem = 0.0;
  double mean_seconds_iwgvem = 0.0;
  int converged_gvem = 0;
  int converged_iwgvem = 0;
  int n_reps = 0;
};
std::vector<CellAggregate> aggregate(const StudyResult& result);

}  // namespace iwgvem
