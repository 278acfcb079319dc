#include "predcal/calibration.hpp"

#include <atomic>
#include <cmath>
#include <limits>

#include "parallel.hpp"
#include "predcal/intervals.hpp"
#include "predcal/sampling.hpp"

namespace predcal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxRetries = 100;

BootstrapReplicates allocate_replicates(std::int64_t n_boot,
                                        std::int64_t n_slots, double dom_lo,
                                        double dom_hi) {
  BootstrapReplicates reps;
  reps.n_replicates = n_boot;
  reps.n_slots = n_slots;
  reps.center.resize(n_boot * n_slots);
  reps.se.resize(n_boot * n_slots);
  reps.future.resize(n_boot * n_slots);
  reps.domain_lo.assign(n_slots, dom_lo);
  reps.domain_hi.assign(n_slots, dom_hi);
  return reps;
}

void check_n_boot(std::int64_t n_boot) {
  if (n_boot < 100) {
    throw ValidationError("nboot is too small: need at least 100 replicates");
  }
}

// Runs one replicate attempt loop: `attempt` is retried with a fresh
// derived substream on ComputeError/ValidationError (boundary resamples),
// up to the retry budget.
template <typename Attempt>
void replicate_with_retries(const RandomStream& root, std::int64_t b,
                            std::atomic<std::int64_t>& retries,
                            Attempt&& attempt) {
  RandomStream rep = root.derive(static_cast<std::uint64_t>(b));
  for (int k = 0; k < kMaxRetries; ++k) {
    RandomStream rs = rep.derive(static_cast<std::uint64_t>(k));
    try {
      attempt(rs);
      if (k > 0) retries.fetch_add(k, std::memory_order_relaxed);
      return;
    } catch (const ValidationError&) {
    } catch (const ComputeError&) {
    }
  }
  throw ComputeError("bootstrap replicate " + std::to_string(b + 1) +
                     " failed to refit after " + std::to_string(kMaxRetries) +
                     " resampling attempts");
}

}  // namespace

// ---- coverage and bisection ----

double coverage_at(const BootstrapReplicates& reps, double delta,
                   Alternative alt) {
  if (!(delta >= 0.0)) throw ValidationError("delta must be >= 0");
  if (reps.n_replicates <= 0 || reps.n_slots <= 0) {
    throw ValidationError("empty replicate set");
  }
  std::int64_t covered = 0;
  for (std::int64_t b = 0; b < reps.n_replicates; ++b) {
    bool all = true;
    const std::int64_t base = b * reps.n_slots;
    for (std::int64_t m = 0; m < reps.n_slots; ++m) {
      const double c = reps.center[base + m];
      const double s = reps.se[base + m];
      const double y = reps.future[base + m];
      double lo = alt == Alternative::upper ? reps.domain_lo[m]
                                            : c - delta * s;
      double hi = alt == Alternative::lower ? reps.domain_hi[m]
                                            : c + delta * s;
      lo = std::max(lo, reps.domain_lo[m]);
      hi = std::min(hi, reps.domain_hi[m]);
      if (!(y >= lo && y <= hi)) {
        all = false;
        break;
      }
    }
    covered += all ? 1 : 0;
  }
  return static_cast<double>(covered) / static_cast<double>(reps.n_replicates);
}

CalibrationResult bisect_delta(const BootstrapReplicates& reps,
                               const CalibrationSettings& settings) {
  settings.validate();
  const double target = 1.0 - settings.alpha;
  CalibrationResult res;

  const double psi_lo = coverage_at(reps, settings.delta_min, settings.alternative);
  res.trace.push_back(TracePoint{-1, settings.delta_min, psi_lo});
  const double psi_hi = coverage_at(reps, settings.delta_max, settings.alternative);
  res.trace.push_back(TracePoint{0, settings.delta_max, psi_hi});

  if (psi_lo > target) {
    res.delta = settings.delta_min;
    res.coverage = psi_lo;
    res.converged = false;
    res.warning =
        "coverage at delta_min already exceeds the target; decrease delta_min";
    return res;
  }
  if (psi_hi < target) {
    res.delta = settings.delta_max;
    res.coverage = psi_hi;
    res.converged = false;
    res.warning =
        "coverage at delta_max falls short of the target; increase delta_max";
    return res;
  }

  double lo = settings.delta_min;
  double hi = settings.delta_max;
  double delta = lo;
  double psi = psi_lo;
  for (int g = 1; g <= settings.max_bisection_steps; ++g) {
    delta = 0.5 * (lo + hi);
    psi = coverage_at(reps, delta, settings.alternative);
    res.trace.push_back(TracePoint{g, delta, psi});
    res.steps_used = g;
    if (std::abs(target - psi) <= settings.tolerance) {
      res.delta = delta;
      res.coverage = psi;
      res.converged = true;
      return res;
    }
    if (psi < target) {
      lo = delta;
    } else {
      hi = delta;
    }
  }
  res.delta = delta;
  res.coverage = psi;
  res.converged = false;
  res.warning = "bisection did not reach the tolerance within " +
                std::to_string(settings.max_bisection_steps) +
                " steps (discrete coverage plateau); returning the last midpoint";
  return res;
}

// ---- replicate generation ----

BootstrapReplicates make_replicates(const QuasiBinomialFit& fit,
                                    const std::vector<std::int64_t>& future_sizes,
                                    std::int64_t n_boot,
                                    const RandomStream& root, int threads) {
  check_n_boot(n_boot);
  if (future_sizes.empty()) {
    throw ValidationError("need at least one future cluster size");
  }
  const std::int64_t M = static_cast<std::int64_t>(future_sizes.size());
  BootstrapReplicates reps = allocate_replicates(n_boot, M, 0.0, kInf);
  for (std::int64_t m = 0; m < M; ++m) {
    reps.domain_hi[m] = static_cast<double>(future_sizes[m]);
  }
  const double phi = clamp_phi_for_sampling(fit.phi_hat);
  std::atomic<std::int64_t> retries{0};
  detail::parallel_chunks(n_boot, threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t b = lo; b < hi; ++b) {
      replicate_with_retries(root, b, retries, [&](RandomStream& rs) {
        std::vector<std::int64_t> y_hist =
            sample_quasi_binomial(rs, fit.sizes, fit.pi_hat, phi);
        std::vector<std::int64_t> y_fut =
            sample_quasi_binomial(rs, future_sizes, fit.pi_hat, phi);
        std::vector<std::int64_t> fails(y_hist.size());
        for (std::size_t h = 0; h < y_hist.size(); ++h) {
          fails[h] = fit.sizes[h] - y_hist[h];
        }
        QuasiBinomialFit refit =
            fit_quasi_binomial(ClusteredBinomial(y_hist, fails));
        const std::int64_t base = b * M;
        for (std::int64_t m = 0; m < M; ++m) {
          reps.center[base + m] =
              static_cast<double>(future_sizes[m]) * refit.pi_hat;
          reps.se[base + m] = quasi_binomial_pred_se(refit, future_sizes[m]);
          reps.future[base + m] = static_cast<double>(y_fut[m]);
        }
      });
    }
  });
  reps.total_retries = retries.load();
  return reps;
}

BootstrapReplicates make_replicates(const BetaBinomialFit& fit,
                                    const std::vector<std::int64_t>& future_sizes,
                                    std::int64_t n_boot,
                                    const RandomStream& root, int threads) {
  check_n_boot(n_boot);
  if (future_sizes.empty()) {
    throw ValidationError("need at least one future cluster size");
  }
  const std::int64_t M = static_cast<std::int64_t>(future_sizes.size());
  BootstrapReplicates reps = allocate_replicates(n_boot, M, 0.0, kInf);
  for (std::int64_t m = 0; m < M; ++m) {
    reps.domain_hi[m] = static_cast<double>(future_sizes[m]);
  }
  const double rho = clamp_rho_for_sampling(fit.rho_hat);
  std::atomic<std::int64_t> retries{0};
  detail::parallel_chunks(n_boot, threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t b = lo; b < hi; ++b) {
      replicate_with_retries(root, b, retries, [&](RandomStream& rs) {
        std::vector<std::int64_t> y_hist =
            sample_beta_binomial(rs, fit.sizes, fit.pi_hat, rho);
        std::vector<std::int64_t> y_fut =
            sample_beta_binomial(rs, future_sizes, fit.pi_hat, rho);
        std::vector<std::int64_t> fails(y_hist.size());
        for (std::size_t h = 0; h < y_hist.size(); ++h) {
          fails[h] = fit.sizes[h] - y_hist[h];
        }
        BetaBinomialFit refit =
            fit_beta_binomial(ClusteredBinomial(y_hist, fails));
        const std::int64_t base = b * M;
        for (std::int64_t m = 0; m < M; ++m) {
          reps.center[base + m] =
              static_cast<double>(future_sizes[m]) * refit.pi_hat;
          reps.se[base + m] = beta_binomial_pred_se(refit, future_sizes[m]);
          reps.future[base + m] = static_cast<double>(y_fut[m]);
        }
      });
    }
  });
  reps.total_retries = retries.load();
  return reps;
}

BootstrapReplicates make_replicates(const QuasiPoissonFit& fit, std::int64_t m,
                                    std::int64_t n_boot,
                                    const RandomStream& root, int threads) {
  check_n_boot(n_boot);
  if (m < 1) throw ValidationError("m must be >= 1");
  BootstrapReplicates reps = allocate_replicates(n_boot, m, 0.0, kInf);
  const double phi = clamp_phi_for_sampling(fit.phi_hat);
  std::atomic<std::int64_t> retries{0};
  detail::parallel_chunks(n_boot, threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t b = lo; b < hi; ++b) {
      replicate_with_retries(root, b, retries, [&](RandomStream& rs) {
        std::vector<std::int64_t> y_hist = sample_quasi_poisson(
            rs, fit.n_clusters, fit.lambda_hat, phi);
        std::vector<std::int64_t> y_fut =
            sample_quasi_poisson(rs, m, fit.lambda_hat, phi);
        QuasiPoissonFit refit = fit_quasi_poisson(ClusteredCounts(y_hist));
        const double se = quasi_poisson_pred_se(refit);
        const std::int64_t base = b * m;
        for (std::int64_t s = 0; s < m; ++s) {
          reps.center[base + s] = refit.lambda_hat;
          reps.se[base + s] = se;
          reps.future[base + s] = static_cast<double>(y_fut[s]);
        }
      });
    }
  });
  reps.total_retries = retries.load();
  return reps;
}

BootstrapReplicates make_replicates_lmm(const RemlModel& model,
                                        const LmmFit& fit,
                                        const DesignMatrices& hist_design,
                                        const FutureDesign& future,
                                        std::int64_t n_boot,
                                        const RandomStream& root, int threads) {
  check_n_boot(n_boot);
  const std::int64_t N = hist_design.row_count();
  const std::int64_t M = future_slot_count(future);
  if (M < 1) throw ValidationError("future design needs at least one slot");

  const FutureUnstructured* unstruc = std::get_if<FutureUnstructured>(&future);
  const FutureRowSubset* subset = std::get_if<FutureRowSubset>(&future);
  const FutureMatrices* matrices = std::get_if<FutureMatrices>(&future);
  if (!unstruc && !subset && !matrices) {
    throw ValidationError(
        "mixed-model replicates need an unstructured count, a futvec, or "
        "explicit future matrices");
  }
  if (unstruc && unstruc->m > N) {
    throw ValidationError(
        "cannot draw more unstructured future rows than the historical design "
        "has");
  }
  if (subset) {
    for (std::int64_t r : subset->rows) {
      if (r < 1 || r > N) {
        throw ValidationError("futvec entry " + std::to_string(r) +
                              " is outside the historical design");
      }
    }
  }
  if (matrices &&
      matrices->design.term_count() != hist_design.term_count()) {
    throw ValidationError(
        "future matrices must provide one matrix per model term");
  }

  BootstrapReplicates reps = allocate_replicates(n_boot, M, -kInf, kInf);
  std::atomic<std::int64_t> retries{0};
  detail::parallel_chunks(n_boot, threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t b = lo; b < hi; ++b) {
      replicate_with_retries(root, b, retries, [&](RandomStream& rs) {
        Eigen::VectorXd y_hist =
            sample_lmm(rs, hist_design, fit.mu_hat, fit.sigma2);
        Eigen::VectorXd y_fut(M);
        if (matrices) {
          Eigen::VectorXd y_full =
              sample_lmm(rs, matrices->design, fit.mu_hat, fit.sigma2);
          y_fut = y_full;
        } else {
          Eigen::VectorXd y_full =
              sample_lmm(rs, hist_design, fit.mu_hat, fit.sigma2);
          if (subset) {
            for (std::int64_t s = 0; s < M; ++s) {
              y_fut[s] = y_full[subset->rows[s] - 1];
            }
          } else {
            // Partial Fisher-Yates: M distinct rows, uniform.
            std::vector<std::int64_t> idx(N);
            for (std::int64_t i = 0; i < N; ++i) idx[i] = i;
            for (std::int64_t s = 0; s < M; ++s) {
              const std::int64_t j =
                  s + static_cast<std::int64_t>(rs.next_below(N - s));
              std::swap(idx[s], idx[j]);
              y_fut[s] = y_full[idx[s]];
            }
          }
        }
        RemlEstimates refit = model.estimate(y_hist);
        const double center = refit.mu_hat;
        const double se = refit.pred_se();
        const std::int64_t base = b * M;
        for (std::int64_t s = 0; s < M; ++s) {
          reps.center[base + s] = center;
          reps.se[base + s] = se;
          reps.future[base + s] = y_fut[s];
        }
      });
    }
  });
  reps.total_retries = retries.load();
  return reps;
}

}  // namespace predcal
