#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "predcal/coverage_lab.hpp"

using namespace predcal;

namespace {

ScenarioSpec poisson_scenario(std::int64_t n_sim, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.name = "qp";
  spec.truth = TruthQuasiPoisson{20.0, 2.0, 6};
  spec.future = FutureRepeatCount{1};
  spec.n_sim = n_sim;
  spec.seed = seed;
  spec.settings.n_boot = 300;
  return spec;
}

ScenarioSpec lmm_scenario(std::int64_t n_sim, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.name = "lmm";
  spec.truth =
      TruthLmm{100.0, {4.0, 2.0, 1.0, 1.0}, testutil::c2_dat1(),
               testutil::c2_model()};
  spec.n_sim = n_sim;
  spec.seed = seed;
  spec.settings.n_boot = 300;
  return spec;
}

bool records_equal(const std::vector<SimRecord>& a,
                   const std::vector<SimRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].sim != b[i].sim || a[i].ok != b[i].ok ||
        a[i].covered != b[i].covered || a[i].delta != b[i].delta ||
        a[i].converged != b[i].converged || a[i].error != b[i].error) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("coverage-lab") {

TEST_CASE("simulation counts below the floor are rejected") {
  ScenarioSpec spec = poisson_scenario(99, 1);
  CHECK_THROWS_WITH_AS((void)simulate_coverage(spec),
                       doctest::Contains("n_sim must be >= 100"),
                       ValidationError);
}

TEST_CASE("reports are independent of the thread count") {
  const CoverageReport a = simulate_coverage(poisson_scenario(120, 17), 1);
  const CoverageReport b = simulate_coverage(poisson_scenario(120, 17), 4);
  CHECK(a.coverage == b.coverage);
  CHECK(a.n_failed == b.n_failed);
  CHECK(records_equal(a.records, b.records));
  REQUIRE(a.records.size() == 120);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].sim == static_cast<std::int64_t>(i));
  }
}

TEST_CASE("a zero-width baseline interval never covers a continuous draw") {
  ScenarioSpec spec = lmm_scenario(100, 3);
  spec.bypass.fixed_delta = 0.0;
  const CoverageReport report = simulate_coverage(spec);
  CHECK(report.n_failed == 0);
  CHECK(report.coverage == 0.0);
  CHECK(report.mc_se == 0.0);
  for (const SimRecord& rec : report.records) {
    CHECK(rec.ok);
    CHECK(rec.delta == 0.0);
    CHECK(rec.converged);  // bypass runs report themselves as settled
    CHECK_FALSE(rec.covered);
  }
}

TEST_CASE("an absurdly wide baseline interval covers everything") {
  ScenarioSpec spec = poisson_scenario(100, 4);
  spec.bypass.fixed_delta = 10.0;
  const CoverageReport report = simulate_coverage(spec);
  CHECK(report.n_failed == 0);
  CHECK(report.coverage == 1.0);
  CHECK(report.mc_se == 0.0);
}

TEST_CASE("the naive dispersion baseline loses coverage") {
  ScenarioSpec honest;
  honest.name = "qb";
  honest.truth = TruthQuasiBinomial{0.1, 3.0, std::vector<std::int64_t>(10, 50)};
  honest.future = FutureClusterSizes{{50}};
  honest.n_sim = 150;
  honest.seed = 6;
  honest.bypass.fixed_delta = 1.959964;

  ScenarioSpec naive = honest;
  naive.bypass.naive_dispersion = true;

  const CoverageReport with_phi = simulate_coverage(honest);
  const CoverageReport without_phi = simulate_coverage(naive);
  CHECK(with_phi.n_failed == 0);
  CHECK(without_phi.coverage < with_phi.coverage);
}

TEST_CASE("failed simulations are excluded and reported") {
  ScenarioSpec spec;
  spec.name = "fragile";
  spec.truth = TruthQuasiPoisson{0.5, 1.0, 2};
  spec.future = FutureRepeatCount{1};
  spec.n_sim = 100;
  spec.seed = 12;
  spec.settings.n_boot = 300;
  const CoverageReport report = simulate_coverage(spec);
  CHECK(report.n_failed >= 1);
  CHECK(report.n_failed < 100);
  std::int64_t n_ok = 0, n_cov = 0, n_failed = 0;
  for (const SimRecord& rec : report.records) {
    CHECK(rec.ok == rec.error.empty());
    if (rec.ok) {
      ++n_ok;
      n_cov += rec.covered ? 1 : 0;
    } else {
      ++n_failed;
    }
  }
  CHECK(n_failed == report.n_failed);
  const double p = static_cast<double>(n_cov) / static_cast<double>(n_ok);
  CHECK(report.coverage == doctest::Approx(p).epsilon(1e-12));
  CHECK(report.mc_se ==
        doctest::Approx(std::sqrt(p * (1.0 - p) / n_ok)).epsilon(1e-12));
}

TEST_CASE("binomial scenarios require explicit future sizes") {
  ScenarioSpec spec;
  spec.truth = TruthQuasiBinomial{0.1, 2.0, std::vector<std::int64_t>(5, 50)};
  spec.n_sim = 100;
  CHECK_THROWS_WITH_AS(
      (void)simulate_coverage(spec),
      doctest::Contains("need explicit future cluster sizes"),
      ValidationError);
}

TEST_CASE("the future design must match the truth family") {
  ScenarioSpec spec = poisson_scenario(100, 1);
  spec.future = FutureClusterSizes{{50}};
  CHECK_THROWS_WITH_AS((void)simulate_coverage(spec),
                       doctest::Contains("future repeat count only"),
                       ValidationError);

  ScenarioSpec lmm = lmm_scenario(100, 1);
  lmm.future = FutureRepeatCount{2};
  CHECK_THROWS_AS((void)simulate_coverage(lmm), ValidationError);

  ScenarioSpec qb;
  qb.truth = TruthQuasiBinomial{0.1, 2.0, std::vector<std::int64_t>(5, 50)};
  qb.future = FutureRepeatCount{1};
  qb.n_sim = 100;
  CHECK_THROWS_WITH_AS((void)simulate_coverage(qb),
                       doctest::Contains("future cluster sizes only"),
                       ValidationError);
}

TEST_CASE("impossible truths are rejected before any simulation") {
  ScenarioSpec qb;
  qb.truth = TruthQuasiBinomial{0.1, 50.0, std::vector<std::int64_t>(5, 50)};
  qb.future = FutureClusterSizes{{50}};
  qb.n_sim = 100;
  CHECK_THROWS_WITH_AS(
      (void)simulate_coverage(qb),
      doctest::Contains("below the smallest cluster size"), ValidationError);

  qb.truth = TruthQuasiBinomial{0.1, 0.5, std::vector<std::int64_t>(5, 50)};
  CHECK_THROWS_WITH_AS((void)simulate_coverage(qb),
                       doctest::Contains("phi must be >= 1"), ValidationError);

  ScenarioSpec bb;
  bb.truth = TruthBetaBinomial{0.1, 1.0, std::vector<std::int64_t>(5, 50)};
  bb.future = FutureClusterSizes{{50}};
  bb.n_sim = 100;
  CHECK_THROWS_AS((void)simulate_coverage(bb), ValidationError);

  ScenarioSpec qp = poisson_scenario(100, 1);
  qp.truth = TruthQuasiPoisson{5.0, 2.0, 1};
  CHECK_THROWS_WITH_AS((void)simulate_coverage(qp),
                       doctest::Contains("two historical clusters"),
                       ValidationError);

  ScenarioSpec lmm = lmm_scenario(100, 1);
  lmm.truth = TruthLmm{100.0, {1.0, 1.0}, testutil::c2_dat1(),
                       testutil::c2_model()};
  CHECK_THROWS_WITH_AS((void)simulate_coverage(lmm),
                       doctest::Contains("one entry per term"),
                       ValidationError);

  lmm.truth = TruthLmm{100.0, {0.0, 0.0, 0.0, 0.0}, testutil::c2_dat1(),
                       testutil::c2_model()};
  CHECK_THROWS_WITH_AS((void)simulate_coverage(lmm),
                       doctest::Contains("all zero"), ValidationError);
}

TEST_CASE("mixed-model futures are checked against the layout up front") {
  ScenarioSpec rows = lmm_scenario(100, 1);
  rows.future = FutureRowSubset{{99}};
  CHECK_THROWS_AS((void)simulate_coverage(rows), ValidationError);

  ScenarioSpec many = lmm_scenario(100, 1);
  many.future = FutureUnstructured{28};
  CHECK_THROWS_WITH_AS((void)simulate_coverage(many),
                       doctest::Contains("drawn without replacement"),
                       ValidationError);
}

}  // TEST_SUITE
