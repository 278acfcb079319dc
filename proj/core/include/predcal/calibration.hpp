#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "predcal/design.hpp"
#include "predcal/fitting.hpp"
#include "predcal/rng.hpp"
#include "predcal/types.hpp"

namespace predcal {

// Bootstrap replicates in slot-major layout: index b * n_slots + m holds
// replicate b's center/se/future draw for slot m.  Domains are per slot
// and shared by all replicates ([0, n*] binomial, [0, inf) counts,
// (-inf, inf) Gaussian).
struct BootstrapReplicates {
  std::int64_t n_replicates = 0;
  std::int64_t n_slots = 0;
  std::vector<double> center;
  std::vector<double> se;
  std::vector<double> future;
  std::vector<double> domain_lo;  // size n_slots
  std::vector<double> domain_hi;  // size n_slots
  std::int64_t total_retries = 0;

  std::int64_t index(std::int64_t b, std::int64_t m) const {
    return b * n_slots + m;
  }
};

struct TracePoint {
  int step = 0;  // -1: delta_min, 0: delta_max, 1..G: midpoints
  double delta = 0.0;
  double coverage = 0.0;
};

struct CalibrationResult {
  double delta = 0.0;
  double coverage = 0.0;  // bootstrap coverage at the returned delta
  bool converged = false;
  int steps_used = 0;     // midpoint evaluations
  std::string warning;    // empty when clean
  std::vector<TracePoint> trace;
};

// Fraction of replicates whose slots are ALL covered by
// center ± delta*se (one-sided per alt, clamped to the slot domain).
// Pure; nondecreasing in delta.
double coverage_at(const BootstrapReplicates& reps, double delta,
                   Alternative alt);

// Bisection for the delta whose bootstrap coverage hits 1 - alpha.
// Endpoints are evaluated first (trace steps -1 and 0); if the target lies
// outside [coverage(delta_min), coverage(delta_max)] the offending
// endpoint is returned unconverged with a warning suggesting a bracket
// change.  Otherwise midpoints are accepted as soon as they land within
// `tolerance` of the target; after max_bisection_steps the last midpoint
// is returned with converged = false.  Consumes no randomness.
CalibrationResult bisect_delta(const BootstrapReplicates& reps,
                               const CalibrationSettings& settings);

// ---- replicate generation ----
//
// Replicate b always consumes substream root.derive(b); retry k of a
// failed refit uses root.derive(b).derive(k).  Results are therefore
// independent of the thread count.  Each replicate draws the
// historical-shaped sample, then the future-shaped sample, then refits.

BootstrapReplicates make_replicates(const QuasiBinomialFit& fit,
                                    const std::vector<std::int64_t>& future_sizes,
                                    std::int64_t n_boot,
                                    const RandomStream& root, int threads = 1);

BootstrapReplicates make_replicates(const BetaBinomialFit& fit,
                                    const std::vector<std::int64_t>& future_sizes,
                                    std::int64_t n_boot,
                                    const RandomStream& root, int threads = 1);

BootstrapReplicates make_replicates(const QuasiPoissonFit& fit,
                                    std::int64_t m, std::int64_t n_boot,
                                    const RandomStream& root, int threads = 1);

// future must be FutureUnstructured, FutureRowSubset, or FutureMatrices.
// Unstructured simulates the full historical design and draws M rows
// uniformly without replacement; RowSubset takes the futvec rows;
// ExplicitMatrices simulates the future design directly.
BootstrapReplicates make_replicates_lmm(const RemlModel& model,
                                        const LmmFit& fit,
                                        const DesignMatrices& hist_design,
                                        const FutureDesign& future,
                                        std::int64_t n_boot,
                                        const RandomStream& root,
                                        int threads = 1);

}  // namespace predcal
