#pragma once

#include <cstdint>
#include <vector>

#include "predcal/fitting.hpp"
#include "predcal/types.hpp"

namespace predcal {

// One prediction interval/bound: [lower, upper] = center ± delta * pred_se
// before clamping.  One-sided alternatives replace the omitted side with
// the family's domain boundary (0 / n* for counts) or an infinite
// sentinel (Gaussian).
struct IntervalRow {
  std::int64_t m_index = 1;   // 1-based future slot
  double center = 0.0;        // expected future observation
  double pred_se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool lower_clamped = false;
  bool upper_clamped = false;
};

// Prediction standard errors per family (future cluster size n* where the
// family has one).
double quasi_binomial_pred_se(const QuasiBinomialFit& fit,
                              std::int64_t future_size);
double beta_binomial_pred_se(const BetaBinomialFit& fit,
                             std::int64_t future_size);
double quasi_poisson_pred_se(const QuasiPoissonFit& fit);

// Per-cluster intervals; bounds clamped to [0, n*_m].
std::vector<IntervalRow> quasi_binomial_intervals(
    const QuasiBinomialFit& fit, const std::vector<std::int64_t>& sizes,
    double delta, Alternative alt);
std::vector<IntervalRow> beta_binomial_intervals(
    const BetaBinomialFit& fit, const std::vector<std::int64_t>& sizes,
    double delta, Alternative alt);

// M identical rows (the family has no per-slot structure); lower clamped
// at 0.
std::vector<IntervalRow> quasi_poisson_interval(const QuasiPoissonFit& fit,
                                                std::int64_t m, double delta,
                                                Alternative alt);

// M identical rows; Gaussian support, no clamping.
std::vector<IntervalRow> lmm_interval(const LmmFit& fit, std::int64_t m,
                                      double delta, Alternative alt);

}  // namespace predcal
