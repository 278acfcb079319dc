#include "predcal/pipeline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>

#include "predcal/intervals.hpp"
#include "predcal/rng.hpp"

namespace predcal {

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::quasi_bin:
      return "quasi-bin";
    case TaskKind::beta_bin:
      return "beta-bin";
    case TaskKind::quasi_pois:
      return "quasi-pois";
    case TaskKind::lmm_unstruc:
      return "lmm-unstruc";
    case TaskKind::lmm_futvec:
      return "lmm-futvec";
    case TaskKind::lmm_futmat:
      return "lmm-futmat";
  }
  throw ComputeError("unhandled task kind");
}

TaskKind task_kind_from_string(const std::string& text) {
  if (text == "quasi-bin") return TaskKind::quasi_bin;
  if (text == "beta-bin") return TaskKind::beta_bin;
  if (text == "quasi-pois") return TaskKind::quasi_pois;
  if (text == "lmm-unstruc") return TaskKind::lmm_unstruc;
  if (text == "lmm-futvec") return TaskKind::lmm_futvec;
  if (text == "lmm-futmat") return TaskKind::lmm_futmat;
  throw ValidationError("unknown task kind: '" + text + "'");
}

bool ResultTable::has_observed() const {
  return !rows.empty() && rows.front().observed.has_value();
}

namespace {

bool covers(double lo, double hi, double obs) {
  return lo <= obs && obs <= hi;
}

void fill_common(ResultTable& table, const TaskSpec& task,
                 CalibrationResult cal) {
  table.kind = task.kind;
  table.alpha = task.settings.alpha;
  table.alternative = task.settings.alternative;
  table.n_boot = task.settings.n_boot;
  table.seed = task.settings.seed;
  table.quant_calib = cal.delta;
  table.calibration = std::move(cal);
}

ResultTable run_binomial(const TaskSpec& task, int threads) {
  const auto* hist = std::get_if<ClusteredBinomial>(&task.historical);
  if (hist == nullptr)
    throw ValidationError(to_string(task.kind) +
                          " needs clustered binomial historical data");
  const NewdatBinomial* nd = std::get_if<NewdatBinomial>(&task.newdat);
  if (!std::holds_alternative<std::monostate>(task.newdat) && nd == nullptr)
    throw ValidationError(to_string(task.kind) +
                          " newdat must hold (successes, failures) rows");
  const FutureClusterSizes* fut = nullptr;
  if (task.future) {
    fut = std::get_if<FutureClusterSizes>(&*task.future);
    if (fut == nullptr)
      throw ValidationError(to_string(task.kind) +
                            " takes future cluster sizes, not another "
                            "future-design kind");
  }
  if (fut != nullptr && nd != nullptr)
    throw ValidationError(
        "give the future cluster sizes either directly or via newdat, "
        "not both");
  if (fut == nullptr && nd == nullptr)
    throw ValidationError(to_string(task.kind) +
                          " needs future cluster sizes or observed newdat");

  std::vector<std::int64_t> sizes;
  if (nd != nullptr) {
    if (nd->rows.empty()) throw ValidationError("newdat has no rows");
    sizes.reserve(nd->rows.size());
    for (std::size_t i = 0; i < nd->rows.size(); ++i) {
      const auto& c = nd->rows[i];
      if (c.successes < 0 || c.failures < 0 || c.size() < 1)
        throw ValidationError("newdat row " + std::to_string(i + 1) +
                              " is not a valid (successes, failures) pair");
      sizes.push_back(c.size());
    }
  } else {
    if (fut->sizes.empty())
      throw ValidationError("the future cluster size list is empty");
    for (std::int64_t s : fut->sizes)
      if (s < 1)
        throw ValidationError("future cluster sizes must be positive");
    sizes = fut->sizes;
  }

  RandomStream root(task.settings.seed);
  ResultTable out;
  std::vector<IntervalRow> ivs;
  double pi_hat = 0.0;
  if (task.kind == TaskKind::quasi_bin) {
    QuasiBinomialFit fit = fit_quasi_binomial(*hist);
    BootstrapReplicates reps =
        make_replicates(fit, sizes, task.settings.n_boot, root, threads);
    fill_common(out, task, bisect_delta(reps, task.settings));
    ivs = quasi_binomial_intervals(fit, sizes, out.quant_calib,
                                   task.settings.alternative);
    pi_hat = fit.pi_hat;
    out.fit_summary = {{"pi_hat", fit.pi_hat},
                       {"phi_hat", fit.phi_hat},
                       {"n_clusters", static_cast<double>(fit.n_clusters)},
                       {"n_total", static_cast<double>(fit.n_total)}};
  } else {
    BetaBinomialFit fit = fit_beta_binomial(*hist);
    BootstrapReplicates reps =
        make_replicates(fit, sizes, task.settings.n_boot, root, threads);
    fill_common(out, task, bisect_delta(reps, task.settings));
    ivs = beta_binomial_intervals(fit, sizes, out.quant_calib,
                                  task.settings.alternative);
    pi_hat = fit.pi_hat;
    out.fit_summary = {{"pi_hat", fit.pi_hat},
                       {"rho_hat", fit.rho_hat},
                       {"n_clusters", static_cast<double>(fit.n_clusters)},
                       {"n_total", static_cast<double>(fit.n_total)}};
  }

  out.rows.reserve(ivs.size());
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    ResultRow row;
    row.slot = ivs[i].m_index;
    row.total = sizes[i];
    row.hist_estimate = pi_hat;
    row.pred_se = ivs[i].pred_se;
    row.lower = ivs[i].lower;
    row.upper = ivs[i].upper;
    if (nd != nullptr) {
      row.observed = static_cast<double>(nd->rows[i].successes);
      row.observed_failures = nd->rows[i].failures;
      row.covered = covers(row.lower, row.upper, *row.observed);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

ResultTable run_poisson(const TaskSpec& task, int threads) {
  const auto* hist = std::get_if<ClusteredCounts>(&task.historical);
  if (hist == nullptr)
    throw ValidationError("quasi-pois needs count historical data");
  const NewdatCounts* nd = std::get_if<NewdatCounts>(&task.newdat);
  if (!std::holds_alternative<std::monostate>(task.newdat) && nd == nullptr)
    throw ValidationError("quasi-pois newdat must hold observed counts");
  const FutureRepeatCount* fut = nullptr;
  if (task.future) {
    fut = std::get_if<FutureRepeatCount>(&*task.future);
    if (fut == nullptr)
      throw ValidationError(
          "quasi-pois takes a future repeat count, not another "
          "future-design kind");
  }
  if (fut != nullptr && nd != nullptr)
    throw ValidationError(
        "give the number of future observations either directly or via "
        "newdat, not both");

  std::int64_t m = 1;
  if (fut != nullptr) {
    m = fut->m;
  } else if (nd != nullptr) {
    if (nd->counts.empty()) throw ValidationError("newdat has no rows");
    for (std::int64_t c : nd->counts)
      if (c < 0) throw ValidationError("newdat counts must be >= 0");
    m = static_cast<std::int64_t>(nd->counts.size());
  }
  if (m < 1)
    throw ValidationError("the number of future observations must be >= 1");

  QuasiPoissonFit fit = fit_quasi_poisson(*hist);
  RandomStream root(task.settings.seed);
  BootstrapReplicates reps =
      make_replicates(fit, m, task.settings.n_boot, root, threads);

  ResultTable out;
  fill_common(out, task, bisect_delta(reps, task.settings));
  std::vector<IntervalRow> ivs = quasi_poisson_interval(
      fit, m, out.quant_calib, task.settings.alternative);
  out.fit_summary = {{"lambda_hat", fit.lambda_hat},
                     {"phi_hat", fit.phi_hat},
                     {"n_clusters", static_cast<double>(fit.n_clusters)}};

  out.rows.reserve(ivs.size());
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    ResultRow row;
    row.slot = ivs[i].m_index;
    row.hist_estimate = fit.lambda_hat;
    row.pred_se = ivs[i].pred_se;
    row.lower = ivs[i].lower;
    row.upper = ivs[i].upper;
    if (nd != nullptr) {
      row.observed = static_cast<double>(nd->counts[i]);
      row.covered = covers(row.lower, row.upper, *row.observed);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

// Reorders externally supplied term matrices into the model's term order,
// matching by name; every model term must be present exactly once.
DesignMatrices align_future_terms(const DesignMatrices& given,
                                  const ModelSpec& model) {
  if (given.term_count() != static_cast<std::int64_t>(model.terms.size()))
    throw ValidationError(
        "future design has " + std::to_string(given.term_count()) +
        " term(s) but the model has " + std::to_string(model.terms.size()));
  std::vector<TermMatrix> ordered;
  ordered.reserve(model.terms.size());
  for (const Term& term : model.terms) {
    const std::string want = term.name();
    bool found = false;
    for (const TermMatrix& tm : given.terms()) {
      if (tm.name == want) {
        ordered.push_back(tm);
        found = true;
        break;
      }
    }
    if (!found)
      throw ValidationError("future design is missing the model term '" +
                            want + "'");
  }
  return DesignMatrices(std::move(ordered));
}

ResultTable run_lmm(const TaskSpec& task, int threads) {
  const auto* hist = std::get_if<LmmHistorical>(&task.historical);
  if (hist == nullptr)
    throw ValidationError(to_string(task.kind) +
                          " needs mixed-model historical data");
  const NewdatMixed* nd = std::get_if<NewdatMixed>(&task.newdat);
  if (!std::holds_alternative<std::monostate>(task.newdat) && nd == nullptr)
    throw ValidationError(to_string(task.kind) +
                          " newdat must hold mixed-model rows");

  DesignMatrices dm = build_design_matrices(hist->data, hist->model);
  RemlModel model(dm);
  const auto& resp = hist->data.response();
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      resp.data(), static_cast<Eigen::Index>(resp.size()));
  LmmFit fit = model.fit(y);
  fit.model = hist->model;

  FutureDesign future = FutureUnstructured{1};
  switch (task.kind) {
    case TaskKind::lmm_unstruc: {
      const FutureUnstructured* fu = nullptr;
      if (task.future) {
        fu = std::get_if<FutureUnstructured>(&*task.future);
        if (fu == nullptr)
          throw ValidationError(
              "lmm-unstruc takes an unstructured future count, not "
              "another future-design kind");
      }
      if (fu != nullptr && nd != nullptr)
        throw ValidationError(
            "give the number of future observations either directly or "
            "via newdat, not both");
      std::int64_t m = 1;
      if (fu != nullptr)
        m = fu->m;
      else if (nd != nullptr)
        m = nd->data.row_count();
      if (m < 1)
        throw ValidationError(
            "the number of future observations must be >= 1");
      if (m > dm.row_count())
        throw ValidationError(
            "the number of future observations exceeds the historical "
            "row count (" + std::to_string(dm.row_count()) +
            "); rows are drawn without replacement");
      future = FutureUnstructured{m};
      break;
    }
    case TaskKind::lmm_futvec: {
      if (!task.future)
        throw ValidationError("lmm-futvec needs a future row vector");
      const auto* fv = std::get_if<FutureRowSubset>(&*task.future);
      if (fv == nullptr)
        throw ValidationError(
            "lmm-futvec takes a future row vector, not another "
            "future-design kind");
      (void)subset_rows(dm, fv->rows);  // validates indices early
      if (nd != nullptr &&
          nd->data.row_count() != static_cast<std::int64_t>(fv->rows.size()))
        throw ValidationError(
            "newdat has " + std::to_string(nd->data.row_count()) +
            " row(s) but the future row vector selects " +
            std::to_string(fv->rows.size()));
      future = *fv;
      break;
    }
    case TaskKind::lmm_futmat: {
      const FutureMatrices* fm = nullptr;
      if (task.future) {
        fm = std::get_if<FutureMatrices>(&*task.future);
        if (fm == nullptr)
          throw ValidationError(
              "lmm-futmat takes explicit future matrices, not another "
              "future-design kind");
      }
      if (fm != nullptr && nd != nullptr)
        throw ValidationError(
            "give the future design either as matrices or via newdat, "
            "not both");
      if (fm == nullptr && nd == nullptr)
        throw ValidationError(
            "lmm-futmat needs explicit future matrices or newdat");
      if (fm != nullptr)
        future = FutureMatrices{align_future_terms(fm->design, hist->model)};
      else
        future =
            FutureMatrices{build_design_matrices(nd->data, hist->model)};
      break;
    }
    default:
      throw ComputeError("non-lmm kind reached the lmm runner");
  }

  // All single-slot futures share one replicate stream (simulate the
  // historical design, draw one row), so the three lmm kinds agree at
  // M = 1.
  if (future_slot_count(future) == 1) future = FutureUnstructured{1};

  RandomStream root(task.settings.seed);
  BootstrapReplicates reps = make_replicates_lmm(
      model, fit, dm, future, task.settings.n_boot, root, threads);

  ResultTable out;
  fill_common(out, task, bisect_delta(reps, task.settings));
  const std::int64_t m_slots = future_slot_count(future);
  std::vector<IntervalRow> ivs =
      lmm_interval(fit, m_slots, out.quant_calib, task.settings.alternative);

  out.fit_summary.emplace_back("mu_hat", fit.mu_hat);
  out.fit_summary.emplace_back("var_mu_hat", fit.var_mu_hat);
  for (std::size_t c = 0; c < fit.sigma2.size(); ++c)
    out.fit_summary.emplace_back("var_" + fit.component_names[c],
                                 fit.sigma2[c]);
  out.fit_summary.emplace_back("reml", fit.reml_value);

  if (nd != nullptr) {
    out.response_name = hist->model.response;
    out.factor_names.reserve(nd->data.factors().size());
    for (const auto& f : nd->data.factors()) out.factor_names.push_back(f.name);
    out.factor_values.resize(static_cast<std::size_t>(nd->data.row_count()));
    for (std::size_t r = 0; r < out.factor_values.size(); ++r) {
      out.factor_values[r].reserve(out.factor_names.size());
      for (const auto& f : nd->data.factors())
        out.factor_values[r].push_back(f.levels[r]);
    }
    if (nd->data.row_count() != m_slots)
      throw ValidationError(
          "newdat has " + std::to_string(nd->data.row_count()) +
          " row(s) but the future design describes " +
          std::to_string(m_slots));
  }

  out.rows.reserve(ivs.size());
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    ResultRow row;
    row.slot = ivs[i].m_index;
    row.hist_estimate = fit.mu_hat;
    row.pred_se = ivs[i].pred_se;
    row.lower = ivs[i].lower;
    row.upper = ivs[i].upper;
    if (nd != nullptr) {
      row.observed = nd->data.response()[i];
      row.covered = covers(row.lower, row.upper, *row.observed);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace

ResultTable run_task(const TaskSpec& task, int threads) {
  task.settings.validate();
  if (threads < 1) throw ValidationError("threads must be >= 1");
  switch (task.kind) {
    case TaskKind::quasi_bin:
    case TaskKind::beta_bin:
      return run_binomial(task, threads);
    case TaskKind::quasi_pois:
      return run_poisson(task, threads);
    case TaskKind::lmm_unstruc:
    case TaskKind::lmm_futvec:
    case TaskKind::lmm_futmat:
      return run_lmm(task, threads);
  }
  throw ComputeError("unhandled task kind");
}

}  // namespace predcal
