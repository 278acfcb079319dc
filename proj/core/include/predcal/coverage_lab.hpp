#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "predcal/design.hpp"
#include "predcal/pipeline.hpp"
#include "predcal/types.hpp"

namespace predcal {

// ---- data-generating truths, one per family ----

struct TruthQuasiBinomial {
  double pi = 0.5;
  double phi = 1.0;  // 1 < phi < min historical/future size to simulate
  std::vector<std::int64_t> hist_sizes;
};

struct TruthBetaBinomial {
  double pi = 0.5;
  double rho = 0.0;
  std::vector<std::int64_t> hist_sizes;
};

struct TruthQuasiPoisson {
  double lambda = 1.0;
  double phi = 1.0;
  std::int64_t hist_clusters = 0;
};

struct TruthLmm {
  double mu = 0.0;
  std::vector<double> sigma2;  // per term, residual last
  MixedModelData layout;       // factor columns give the historical design
  ModelSpec model;
};

using Truth = std::variant<TruthQuasiBinomial, TruthBetaBinomial,
                           TruthQuasiPoisson, TruthLmm>;

// Baseline hooks: skip the bisection and use a fixed delta, optionally
// with the no-overdispersion standard error (phi = 1 / rho ~ 0; the
// Gaussian family has no such notion and keeps its model se).
struct CalibrationBypass {
  std::optional<double> fixed_delta;
  bool naive_dispersion = false;
};

struct ScenarioSpec {
  std::string name;
  Truth truth;
  // Future design; must match the truth's family (ClusterSizes for the
  // binomial truths, CountRepeats for Poisson, the three lmm variants
  // for the Gaussian truth).  Unset means one future observation.
  std::optional<FutureDesign> future;
  std::int64_t n_sim = 500;
  CalibrationSettings settings;  // per-sim settings; seed is overridden
  std::uint64_t seed = 1;
  CalibrationBypass bypass;
};

struct SimRecord {
  std::int64_t sim = 0;  // 0-based index
  bool ok = false;
  bool covered = false;
  double delta = 0.0;
  bool converged = false;
  std::string error;  // empty when ok
};

struct CoverageReport {
  std::string name;
  std::int64_t n_sim = 0;
  std::int64_t n_failed = 0;
  double coverage = 0.0;  // share of covered among the non-failed sims
  double mc_se = 0.0;     // sqrt(p(1-p)/n_ok)
  std::vector<SimRecord> records;
};

// Each simulation draws fresh historical + future data from the truth,
// runs the full task (fit, bootstrap, bisection, intervals) with a
// sim-derived seed, and scores simultaneous coverage of the true future
// draws.  Task failures are excluded from the coverage estimate and
// listed.  Deterministic in spec.seed; parallel over simulations.
CoverageReport simulate_coverage(const ScenarioSpec& spec, int threads = 1);

}  // namespace predcal
