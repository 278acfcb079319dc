#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "predcal/calibration.hpp"
#include "predcal/design.hpp"
#include "predcal/fitting.hpp"
#include "predcal/rng.hpp"
#include "predcal/sampling.hpp"
#include "predcal/types.hpp"

namespace {

using namespace predcal;

// Balanced p x q layout with r replicates per cell; the response is one
// mixed-model draw so the REML benchmarks fit realistic data.
struct CrossedFixture {
  ModelSpec spec;
  DesignMatrices design;
  Eigen::VectorXd response;

  CrossedFixture(std::int64_t p, std::int64_t q, std::int64_t r)
      : spec(parse_formula("y~(1|a)+(1|b)+(1|a:b)")),
        design(build_layout(p, q, r)) {
    RandomStream rs(99u);
    response = sample_lmm(rs, design, 100.0, {4.0, 2.0, 1.0, 1.0});
  }

 private:
  static DesignMatrices build_layout(std::int64_t p, std::int64_t q,
                                     std::int64_t r) {
    std::vector<double> zeros(static_cast<std::size_t>(p * q * r), 0.0);
    std::vector<MixedModelData::Factor> factors(2);
    factors[0].name = "a";
    factors[1].name = "b";
    for (std::int64_t i = 0; i < p; ++i)
      for (std::int64_t j = 0; j < q; ++j)
        for (std::int64_t k = 0; k < r; ++k) {
          factors[0].levels.push_back(std::to_string(i + 1));
          factors[1].levels.push_back(std::to_string(j + 1));
        }
    const MixedModelData data(std::move(zeros), std::move(factors));
    return build_design_matrices(data,
                                 parse_formula("y~(1|a)+(1|b)+(1|a:b)"));
  }
};

BootstrapReplicates synthetic_replicates(std::int64_t n) {
  BootstrapReplicates reps;
  reps.n_replicates = n;
  reps.n_slots = 1;
  reps.center.assign(static_cast<std::size_t>(n), 0.0);
  reps.se.assign(static_cast<std::size_t>(n), 1.0);
  reps.future.resize(static_cast<std::size_t>(n));
  const double inf = std::numeric_limits<double>::infinity();
  reps.domain_lo.assign(1, -inf);
  reps.domain_hi.assign(1, inf);
  for (std::int64_t b = 0; b < n; ++b) {
    const double mag =
        4.0 * (static_cast<double>(b) + 0.5) / static_cast<double>(n);
    reps.future[static_cast<std::size_t>(b)] = (b % 2 == 0) ? mag : -mag;
  }
  return reps;
}

void BM_SampleQuasiPoisson(benchmark::State& state) {
  RandomStream rs(1u);
  for (auto _ : state) {
    auto y = sample_quasi_poisson(rs, 100, 48.9, 4.9);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_SampleQuasiPoisson);

void BM_SampleBetaBinomial(benchmark::State& state) {
  RandomStream rs(2u);
  const std::vector<std::int64_t> sizes(100, 50);
  for (auto _ : state) {
    auto y = sample_beta_binomial(rs, sizes, 0.13, 0.05);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_SampleBetaBinomial);

void BM_SampleLmm(benchmark::State& state) {
  static const CrossedFixture fx(5, 5, 2);
  RandomStream rs(3u);
  const std::vector<double> sigma2 = {4.0, 2.0, 1.0, 1.0};
  for (auto _ : state) {
    Eigen::VectorXd y = sample_lmm(rs, fx.design, 100.0, sigma2);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(state.iterations() * fx.design.row_count());
}
BENCHMARK(BM_SampleLmm);

void BM_RemlFit(benchmark::State& state) {
  static const CrossedFixture fx(3, 3, 3);
  static const RemlModel model(fx.design);
  for (auto _ : state) {
    RemlEstimates est = model.estimate(fx.response);
    benchmark::DoNotOptimize(est);
  }
}
BENCHMARK(BM_RemlFit);

void BM_MakeReplicatesQuasiPoisson(benchmark::State& state) {
  QuasiPoissonFit fit;
  fit.lambda_hat = 48.9;
  fit.phi_hat = 4.9;
  fit.n_clusters = 10;
  const RandomStream root(4u);
  for (auto _ : state) {
    BootstrapReplicates reps = make_replicates(fit, 1, 1000, root);
    benchmark::DoNotOptimize(reps);
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_MakeReplicatesQuasiPoisson);

void BM_CoverageAt(benchmark::State& state) {
  static const BootstrapReplicates reps = synthetic_replicates(20000);
  double delta = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(coverage_at(reps, delta, Alternative::both));
    delta = delta < 8.0 ? delta + 0.25 : 0.5;
  }
  state.SetItemsProcessed(state.iterations() * reps.n_replicates);
}
BENCHMARK(BM_CoverageAt);

void BM_BisectDelta(benchmark::State& state) {
  static const BootstrapReplicates reps = synthetic_replicates(20000);
  const CalibrationSettings settings;
  for (auto _ : state) {
    CalibrationResult res = bisect_delta(reps, settings);
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_BisectDelta);

}  // namespace

BENCHMARK_MAIN();
