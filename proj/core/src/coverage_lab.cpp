#include "predcal/coverage_lab.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "predcal/fitting.hpp"
#include "predcal/intervals.hpp"
#include "predcal/rng.hpp"
#include "predcal/sampling.hpp"
#include "parallel.hpp"

namespace predcal {
namespace {

struct Bounds {
  std::vector<double> lower, upper;
  double delta = 0.0;
  bool converged = false;
};

bool all_covered(const Bounds& b, const std::vector<double>& obs) {
  for (std::size_t j = 0; j < obs.size(); ++j)
    if (obs[j] < b.lower[j] || obs[j] > b.upper[j]) return false;
  return true;
}

Bounds bounds_from_rows(const std::vector<IntervalRow>& rows, double delta,
                        bool converged) {
  Bounds b;
  b.delta = delta;
  b.converged = converged;
  b.lower.reserve(rows.size());
  b.upper.reserve(rows.size());
  for (const IntervalRow& r : rows) {
    b.lower.push_back(r.lower);
    b.upper.push_back(r.upper);
  }
  return b;
}

Bounds bounds_from_table(const ResultTable& table) {
  Bounds b;
  b.delta = table.quant_calib;
  b.converged = table.calibration.converged;
  b.lower.reserve(table.rows.size());
  b.upper.reserve(table.rows.size());
  for (const ResultRow& r : table.rows) {
    b.lower.push_back(r.lower);
    b.upper.push_back(r.upper);
  }
  return b;
}

std::int64_t min_size(const std::vector<std::int64_t>& sizes) {
  return *std::min_element(sizes.begin(), sizes.end());
}

// Resolves the scenario's future design, defaulting to one observation
// where the family allows it, and checks family/variant agreement.
FutureDesign resolve_future(const ScenarioSpec& spec) {
  const bool binom = std::holds_alternative<TruthQuasiBinomial>(spec.truth) ||
                     std::holds_alternative<TruthBetaBinomial>(spec.truth);
  if (!spec.future) {
    if (binom)
      throw ValidationError(
          "binomial scenarios need explicit future cluster sizes");
    if (std::holds_alternative<TruthQuasiPoisson>(spec.truth))
      return FutureRepeatCount{1};
    return FutureUnstructured{1};
  }
  const FutureDesign& fd = *spec.future;
  if (binom && !std::holds_alternative<FutureClusterSizes>(fd))
    throw ValidationError(
        "binomial scenarios take future cluster sizes only");
  if (std::holds_alternative<TruthQuasiPoisson>(spec.truth) &&
      !std::holds_alternative<FutureRepeatCount>(fd))
    throw ValidationError(
        "quasi-Poisson scenarios take a future repeat count only");
  if (std::holds_alternative<TruthLmm>(spec.truth) &&
      (std::holds_alternative<FutureClusterSizes>(fd) ||
       std::holds_alternative<FutureRepeatCount>(fd)))
    throw ValidationError(
        "mixed-model scenarios take unstructured / row-subset / "
        "matrix future designs only");
  return fd;
}

void validate_truth(const Truth& truth, const FutureDesign& fd) {
  if (const auto* qb = std::get_if<TruthQuasiBinomial>(&truth)) {
    if (qb->hist_sizes.empty())
      throw ValidationError("truth needs historical cluster sizes");
    for (std::int64_t s : qb->hist_sizes)
      if (s < 1) throw ValidationError("historical sizes must be positive");
    if (!(qb->pi > 0.0 && qb->pi < 1.0))
      throw ValidationError("truth pi must lie in (0, 1)");
    if (qb->phi < 1.0) throw ValidationError("truth phi must be >= 1");
    const auto& fs = std::get<FutureClusterSizes>(fd).sizes;
    if (fs.empty()) throw ValidationError("future size list is empty");
    for (std::int64_t s : fs)
      if (s < 1) throw ValidationError("future sizes must be positive");
    const std::int64_t lo = std::min(min_size(qb->hist_sizes), min_size(fs));
    if (qb->phi >= static_cast<double>(lo))
      throw ValidationError(
          "truth phi must be below the smallest cluster size (" +
          std::to_string(lo) + ") to simulate a quasi-binomial");
  } else if (const auto* bb = std::get_if<TruthBetaBinomial>(&truth)) {
    if (bb->hist_sizes.empty())
      throw ValidationError("truth needs historical cluster sizes");
    for (std::int64_t s : bb->hist_sizes)
      if (s < 1) throw ValidationError("historical sizes must be positive");
    if (!(bb->pi > 0.0 && bb->pi < 1.0))
      throw ValidationError("truth pi must lie in (0, 1)");
    if (!(bb->rho >= 0.0 && bb->rho < 1.0))
      throw ValidationError("truth rho must lie in [0, 1)");
    const auto& fs = std::get<FutureClusterSizes>(fd).sizes;
    for (std::int64_t s : fs)
      if (s < 1) throw ValidationError("future sizes must be positive");
  } else if (const auto* qp = std::get_if<TruthQuasiPoisson>(&truth)) {
    if (qp->hist_clusters < 2)
      throw ValidationError("truth needs at least two historical clusters");
    if (!(qp->lambda > 0.0))
      throw ValidationError("truth lambda must be positive");
    if (qp->phi < 1.0) throw ValidationError("truth phi must be >= 1");
    if (std::get<FutureRepeatCount>(fd).m < 1)
      throw ValidationError("the future repeat count must be >= 1");
  } else {
    const auto& lm = std::get<TruthLmm>(truth);
    if (lm.model.terms.empty())
      throw ValidationError("truth model has no random terms");
    if (lm.sigma2.size() != lm.model.terms.size() + 1)
      throw ValidationError(
          "truth sigma2 needs one entry per term plus the residual");
    double total = 0.0;
    for (double s : lm.sigma2) {
      if (!(s >= 0.0) || !std::isfinite(s))
        throw ValidationError("truth variance components must be >= 0");
      total += s;
    }
    if (!(total > 0.0))
      throw ValidationError("truth variance components are all zero");
  }
}

std::vector<double> draw_lmm_future(RandomStream& rs,
                                    const DesignMatrices& hist_dm,
                                    const FutureDesign& fd, double mu,
                                    const std::vector<double>& sigma2) {
  if (const auto* fm = std::get_if<FutureMatrices>(&fd)) {
    Eigen::VectorXd y = sample_lmm(rs, fm->design, mu, sigma2);
    return std::vector<double>(y.data(), y.data() + y.size());
  }
  Eigen::VectorXd y = sample_lmm(rs, hist_dm, mu, sigma2);
  if (const auto* fv = std::get_if<FutureRowSubset>(&fd)) {
    std::vector<double> out;
    out.reserve(fv->rows.size());
    for (std::int64_t r : fv->rows)
      out.push_back(y[static_cast<Eigen::Index>(r - 1)]);
    return out;
  }
  const std::int64_t m = std::get<FutureUnstructured>(fd).m;
  const std::int64_t n = hist_dm.row_count();
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m));
  for (std::int64_t j = 0; j < m; ++j) {
    const std::uint64_t pick =
        rs.next_below(static_cast<std::uint64_t>(n - j));
    std::swap(idx[static_cast<std::size_t>(j) + pick],
              idx[static_cast<std::size_t>(j)]);
    out.push_back(y[static_cast<Eigen::Index>(idx[j])]);
  }
  return out;
}

TaskKind lmm_kind(const FutureDesign& fd) {
  if (std::holds_alternative<FutureRowSubset>(fd)) return TaskKind::lmm_futvec;
  if (std::holds_alternative<FutureMatrices>(fd)) return TaskKind::lmm_futmat;
  return TaskKind::lmm_unstruc;
}

struct ScenarioContext {
  const ScenarioSpec& spec;
  FutureDesign future;
  // Only set for the mixed-model truth:
  std::optional<DesignMatrices> hist_dm;
};

SimRecord run_one(const ScenarioContext& ctx, const RandomStream& scen,
                  std::int64_t i) {
  const ScenarioSpec& spec = ctx.spec;
  SimRecord rec;
  rec.sim = i;
  RandomStream si = scen.derive(i);
  RandomStream hist_rs = si.derive(1);
  RandomStream fut_rs = si.derive(2);
  RandomStream seed_rs = si.derive(3);
  CalibrationSettings settings = spec.settings;
  settings.seed = seed_rs.next_u64();

  try {
    std::vector<double> obs;
    Bounds bounds;

    auto finish_task = [&](TaskSpec&& task) {
      task.settings = settings;
      bounds = bounds_from_table(run_task(task, 1));
    };

    if (const auto* qb = std::get_if<TruthQuasiBinomial>(&spec.truth)) {
      const double phi = clamp_phi_for_sampling(qb->phi);
      const auto& fut_sizes = std::get<FutureClusterSizes>(ctx.future).sizes;
      std::vector<std::int64_t> succ =
          sample_quasi_binomial(hist_rs, qb->hist_sizes, qb->pi, phi);
      std::vector<std::int64_t> fails(succ.size());
      for (std::size_t h = 0; h < succ.size(); ++h)
        fails[h] = qb->hist_sizes[h] - succ[h];
      ClusteredBinomial hist(succ, fails);
      std::vector<std::int64_t> fut =
          sample_quasi_binomial(fut_rs, fut_sizes, qb->pi, phi);
      obs.assign(fut.begin(), fut.end());
      if (spec.bypass.fixed_delta) {
        QuasiBinomialFit fit = fit_quasi_binomial(hist);
        if (spec.bypass.naive_dispersion) fit.phi_hat = 1.0;
        bounds = bounds_from_rows(
            quasi_binomial_intervals(fit, fut_sizes, *spec.bypass.fixed_delta,
                                     settings.alternative),
            *spec.bypass.fixed_delta, true);
      } else {
        TaskSpec task;
        task.kind = TaskKind::quasi_bin;
        task.historical = hist;
        task.future = FutureClusterSizes{fut_sizes};
        finish_task(std::move(task));
      }
    } else if (const auto* bb = std::get_if<TruthBetaBinomial>(&spec.truth)) {
      const double rho = clamp_rho_for_sampling(bb->rho);
      const auto& fut_sizes = std::get<FutureClusterSizes>(ctx.future).sizes;
      std::vector<std::int64_t> succ =
          sample_beta_binomial(hist_rs, bb->hist_sizes, bb->pi, rho);
      std::vector<std::int64_t> fails(succ.size());
      for (std::size_t h = 0; h < succ.size(); ++h)
        fails[h] = bb->hist_sizes[h] - succ[h];
      ClusteredBinomial hist(succ, fails);
      std::vector<std::int64_t> fut =
          sample_beta_binomial(fut_rs, fut_sizes, bb->pi, rho);
      obs.assign(fut.begin(), fut.end());
      if (spec.bypass.fixed_delta) {
        BetaBinomialFit fit = fit_beta_binomial(hist);
        if (spec.bypass.naive_dispersion) fit.rho_hat = 1e-6;
        bounds = bounds_from_rows(
            beta_binomial_intervals(fit, fut_sizes, *spec.bypass.fixed_delta,
                                    settings.alternative),
            *spec.bypass.fixed_delta, true);
      } else {
        TaskSpec task;
        task.kind = TaskKind::beta_bin;
        task.historical = hist;
        task.future = FutureClusterSizes{fut_sizes};
        finish_task(std::move(task));
      }
    } else if (const auto* qp = std::get_if<TruthQuasiPoisson>(&spec.truth)) {
      const double phi = clamp_phi_for_sampling(qp->phi);
      const std::int64_t m = std::get<FutureRepeatCount>(ctx.future).m;
      ClusteredCounts hist(
          sample_quasi_poisson(hist_rs, qp->hist_clusters, qp->lambda, phi));
      std::vector<std::int64_t> fut =
          sample_quasi_poisson(fut_rs, m, qp->lambda, phi);
      obs.assign(fut.begin(), fut.end());
      if (spec.bypass.fixed_delta) {
        QuasiPoissonFit fit = fit_quasi_poisson(hist);
        if (spec.bypass.naive_dispersion) fit.phi_hat = 1.0;
        bounds = bounds_from_rows(
            quasi_poisson_interval(fit, m, *spec.bypass.fixed_delta,
                                   settings.alternative),
            *spec.bypass.fixed_delta, true);
      } else {
        TaskSpec task;
        task.kind = TaskKind::quasi_pois;
        task.historical = hist;
        task.future = FutureRepeatCount{m};
        finish_task(std::move(task));
      }
    } else {
      const auto& lm = std::get<TruthLmm>(spec.truth);
      const DesignMatrices& dm = *ctx.hist_dm;
      Eigen::VectorXd y = sample_lmm(hist_rs, dm, lm.mu, lm.sigma2);
      MixedModelData hist(std::vector<double>(y.data(), y.data() + y.size()),
                          lm.layout.factors());
      obs = draw_lmm_future(fut_rs, dm, ctx.future, lm.mu, lm.sigma2);
      if (spec.bypass.fixed_delta) {
        LmmFit fit = fit_random_intercepts(hist, lm.model);
        bounds = bounds_from_rows(
            lmm_interval(fit, static_cast<std::int64_t>(obs.size()),
                         *spec.bypass.fixed_delta, settings.alternative),
            *spec.bypass.fixed_delta, true);
      } else {
        TaskSpec task;
        task.kind = lmm_kind(ctx.future);
        task.historical = LmmHistorical{hist, lm.model};
        task.future = ctx.future;
        finish_task(std::move(task));
      }
    }

    rec.covered = all_covered(bounds, obs);
    rec.delta = bounds.delta;
    rec.converged = bounds.converged;
    rec.ok = true;
  } catch (const ValidationError& e) {
    rec.error = e.what();
  } catch (const ComputeError& e) {
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

CoverageReport simulate_coverage(const ScenarioSpec& spec, int threads) {
  if (spec.n_sim < 100) throw ValidationError("n_sim must be >= 100");
  spec.settings.validate();
  if (threads < 1) throw ValidationError("threads must be >= 1");

  ScenarioContext ctx{spec, resolve_future(spec), std::nullopt};
  validate_truth(spec.truth, ctx.future);
  if (const auto* lm = std::get_if<TruthLmm>(&spec.truth)) {
    ctx.hist_dm = build_design_matrices(lm->layout, lm->model);
    // Row-subset and unstructured futures index into the historical
    // layout; verify against it before burning simulations.
    if (const auto* fv = std::get_if<FutureRowSubset>(&ctx.future))
      (void)subset_rows(*ctx.hist_dm, fv->rows);
    if (const auto* fu = std::get_if<FutureUnstructured>(&ctx.future)) {
      if (fu->m < 1)
        throw ValidationError("the future observation count must be >= 1");
      if (fu->m > ctx.hist_dm->row_count())
        throw ValidationError(
            "the future observation count exceeds the historical row "
            "count; rows are drawn without replacement");
    }
    if (const auto* fm = std::get_if<FutureMatrices>(&ctx.future)) {
      if (fm->design.term_count() !=
          static_cast<std::int64_t>(lm->model.terms.size()))
        throw ValidationError(
            "future matrices must have one entry per model term");
    }
  }

  CoverageReport report;
  report.name = spec.name;
  report.n_sim = spec.n_sim;
  report.records.resize(static_cast<std::size_t>(spec.n_sim));

  RandomStream scen(spec.seed);
  detail::parallel_chunks(spec.n_sim, threads,
                          [&](std::int64_t b, std::int64_t e) {
                            for (std::int64_t i = b; i < e; ++i)
                              report.records[static_cast<std::size_t>(i)] =
                                  run_one(ctx, scen, i);
                          });

  std::int64_t n_ok = 0, n_cov = 0;
  for (const SimRecord& r : report.records) {
    if (!r.ok) {
      ++report.n_failed;
      continue;
    }
    ++n_ok;
    if (r.covered) ++n_cov;
  }
  if (n_ok > 0) {
    const double p = static_cast<double>(n_cov) / static_cast<double>(n_ok);
    report.coverage = p;
    report.mc_se = std::sqrt(p * (1.0 - p) / static_cast<double>(n_ok));
  } else {
    report.coverage = std::numeric_limits<double>::quiet_NaN();
    report.mc_se = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace predcal
