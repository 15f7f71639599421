// Microbenchmarks for the hot paths: posterior sweeps, importance-weighted
// iterations, weight computation, and rotation.

#include <benchmark/benchmark.h>

#include "iwgvem/adam.hpp"
#include "iwgvem/gvem.hpp"
#include "iwgvem/iw.hpp"
#include "iwgvem/rotation.hpp"
#include "iwgvem/simstudy.hpp"

using namespace iwgvem;

namespace {

struct Fixture {
  Dataset data;
  GvemFit gvem;
  FrozenProposal proposal;
  IwConfig iw_cfg;

  explicit Fixture(int n, int j, int k) {
    StudyDesign d;
    d.n_persons = n;
    d.n_items = j;
    d.n_factors = k;
    d.structure = StructureKind::between;
    data = generate_dataset(d, 13);
    gvem = fit_gvem(data.responses, data.truth.structure);
    proposal = FrozenProposal::from(gvem.vstate);
    iw_cfg.s = 10;
    iw_cfg.m = 10;
    iw_cfg.seed = 1;
  }

  static const Fixture& get() {
    static Fixture f(500, 30, 2);
    return f;
  }
};

void bm_estep_sweep(benchmark::State& state) {
  const Fixture& f = Fixture::get();
  VariationalState v = f.gvem.vstate;
  for (auto _ : state) {
    estep_sweep(f.data.responses, f.gvem.params, v);
    benchmark::DoNotOptimize(v.mu);
  }
}
BENCHMARK(bm_estep_sweep)->Unit(benchmark::kMillisecond);

void bm_draw_samples(benchmark::State& state) {
  const Fixture& f = Fixture::get();
  std::uint64_t it = 0;
  for (auto _ : state) {
    const ThetaSamples smp = draw_samples(f.proposal, f.iw_cfg, ++it);
    benchmark::DoNotOptimize(smp.draws);
  }
}
BENCHMARK(bm_draw_samples)->Unit(benchmark::kMillisecond);

void bm_compute_weights(benchmark::State& state) {
  const Fixture& f = Fixture::get();
  const ThetaSamples smp = draw_samples(f.proposal, f.iw_cfg, 1);
  for (auto _ : state) {
    const WeightBlock w =
        compute_weights(f.data.responses, smp, f.gvem.params, f.proposal);
    benchmark::DoNotOptimize(w.normalized);
  }
}
BENCHMARK(bm_compute_weights)->Unit(benchmark::kMillisecond);

void bm_iw_iteration(benchmark::State& state) {
  const Fixture& f = Fixture::get();
  const ThetaSamples smp = draw_samples(f.proposal, f.iw_cfg, 1);
  for (auto _ : state) {
    const IwIterationEval ev =
        iw_iteration_eval(f.data.responses, smp, f.gvem.params, f.proposal,
                          f.data.truth.structure);
    benchmark::DoNotOptimize(ev.grads.a);
  }
}
BENCHMARK(bm_iw_iteration)->Unit(benchmark::kMillisecond);

void bm_full_ascent_step(benchmark::State& state) {
  const Fixture& f = Fixture::get();
  for (auto _ : state) {
    ModelParams params = f.gvem.params;
    Eigen::MatrixXd prec = params.sigma_theta.inverse();
    AdamState adam = AdamState::init(30, 2);
    AdamConfig acfg;
    const IwStepResult res =
        iw_ascent_step(f.data.responses, f.data.truth.structure, f.proposal,
                       params, prec, adam, f.iw_cfg, acfg, true, 1);
    benchmark::DoNotOptimize(res.elbo);
  }
}
BENCHMARK(bm_full_ascent_step)->Unit(benchmark::kMillisecond);

void bm_varimax(benchmark::State& state) {
  const Fixture& f = Fixture::get();
  const Eigen::MatrixXd loadings = f.gvem.params.a;
  for (auto _ : state) {
    const RotationResult r = varimax(loadings);
    benchmark::DoNotOptimize(r.loadings);
  }
}
BENCHMARK(bm_varimax)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
