#include "predcal/intervals.hpp"

#include <cmath>
#include <limits>

namespace predcal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_delta(double delta) {
  if (!(delta >= 0.0)) throw ValidationError("delta must be >= 0");
}

// Applies the alternative and the family domain [dom_lo, dom_hi] to the
// raw two-sided bounds.
IntervalRow make_row(std::int64_t m_index, double center, double se,
                     double delta, Alternative alt, double dom_lo,
                     double dom_hi) {
  IntervalRow row;
  row.m_index = m_index;
  row.center = center;
  row.pred_se = se;
  const double half = delta * se;
  double lower = alt == Alternative::upper ? dom_lo : center - half;
  double upper = alt == Alternative::lower ? dom_hi : center + half;
  if (alt != Alternative::upper && lower < dom_lo) {
    lower = dom_lo;
    row.lower_clamped = true;
  }
  if (alt != Alternative::lower && upper > dom_hi) {
    upper = dom_hi;
    row.upper_clamped = true;
  }
  row.lower = lower;
  row.upper = upper;
  return row;
}

}  // namespace

double quasi_binomial_pred_se(const QuasiBinomialFit& fit,
                              std::int64_t future_size) {
  if (future_size < 1) throw ValidationError("future cluster size must be >= 1");
  const double n = static_cast<double>(future_size);
  const double N = static_cast<double>(fit.n_total);
  const double pq = fit.pi_hat * (1.0 - fit.pi_hat);
  return std::sqrt(fit.phi_hat * n * pq * (1.0 + n / N));
}

double beta_binomial_pred_se(const BetaBinomialFit& fit,
                             std::int64_t future_size) {
  if (future_size < 1) throw ValidationError("future cluster size must be >= 1");
  const double n = static_cast<double>(future_size);
  const double N = static_cast<double>(fit.n_total);
  const double pq = fit.pi_hat * (1.0 - fit.pi_hat);
  const double rho = fit.rho_hat;
  const double future_var = n * pq * (1.0 + (n - 1.0) * rho);
  const double estimation_var =
      n * n * pq / N + (N - 1.0) / N * n * n * pq * rho;
  return std::sqrt(future_var + estimation_var);
}

double quasi_poisson_pred_se(const QuasiPoissonFit& fit) {
  const double H = static_cast<double>(fit.n_clusters);
  return std::sqrt(fit.phi_hat * fit.lambda_hat * (1.0 + 1.0 / H));
}

std::vector<IntervalRow> quasi_binomial_intervals(
    const QuasiBinomialFit& fit, const std::vector<std::int64_t>& sizes,
    double delta, Alternative alt) {
  check_delta(delta);
  if (sizes.empty()) throw ValidationError("need at least one future size");
  std::vector<IntervalRow> rows;
  rows.reserve(sizes.size());
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    const double n = static_cast<double>(sizes[m]);
    rows.push_back(make_row(static_cast<std::int64_t>(m + 1),
                            n * fit.pi_hat,
                            quasi_binomial_pred_se(fit, sizes[m]), delta, alt,
                            0.0, n));
  }
  return rows;
}

std::vector<IntervalRow> beta_binomial_intervals(
    const BetaBinomialFit& fit, const std::vector<std::int64_t>& sizes,
    double delta, Alternative alt) {
  check_delta(delta);
  if (sizes.empty()) throw ValidationError("need at least one future size");
  std::vector<IntervalRow> rows;
  rows.reserve(sizes.size());
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    const double n = static_cast<double>(sizes[m]);
    rows.push_back(make_row(static_cast<std::int64_t>(m + 1),
                            n * fit.pi_hat,
                            beta_binomial_pred_se(fit, sizes[m]), delta, alt,
                            0.0, n));
  }
  return rows;
}

std::vector<IntervalRow> quasi_poisson_interval(const QuasiPoissonFit& fit,
                                                std::int64_t m, double delta,
                                                Alternative alt) {
  check_delta(delta);
  if (m < 1) throw ValidationError("m must be >= 1");
  std::vector<IntervalRow> rows;
  rows.reserve(m);
  for (std::int64_t i = 1; i <= m; ++i) {
    rows.push_back(make_row(i, fit.lambda_hat, quasi_poisson_pred_se(fit),
                            delta, alt, 0.0, kInf));
  }
  return rows;
}

std::vector<IntervalRow> lmm_interval(const LmmFit& fit, std::int64_t m,
                                      double delta, Alternative alt) {
  check_delta(delta);
  if (m < 1) throw ValidationError("m must be >= 1");
  std::vector<IntervalRow> rows;
  rows.reserve(m);
  for (std::int64_t i = 1; i <= m; ++i) {
    rows.push_back(
        make_row(i, fit.mu_hat, fit.pred_se(), delta, alt, -kInf, kInf));
  }
  return rows;
}

}  // namespace predcal
