#include "predcal/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace predcal {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_non_degenerate(const ClusteredBinomial& data) {
  if (data.cluster_count() < 2) {
    throw ValidationError("need at least two clusters to estimate dispersion");
  }
  const std::int64_t y = data.total_successes();
  if (y == 0 || y == data.total_size()) {
    throw ValidationError(
        "dispersion undefined at boundary: data are all successes or all "
        "failures");
  }
}

}  // namespace

// ---- quasi-binomial ----

QuasiBinomialFit fit_quasi_binomial(const ClusteredBinomial& data) {
  check_non_degenerate(data);
  QuasiBinomialFit fit;
  fit.n_clusters = data.cluster_count();
  fit.n_total = data.total_size();
  fit.sizes = data.sizes();
  fit.pi_hat = static_cast<double>(data.total_successes()) /
               static_cast<double>(fit.n_total);
  const double pq = fit.pi_hat * (1.0 - fit.pi_hat);
  double pearson = 0.0;
  for (const auto& c : data.clusters()) {
    const double n = static_cast<double>(c.size());
    const double r = static_cast<double>(c.successes) - n * fit.pi_hat;
    pearson += r * r / (n * pq);
  }
  fit.pearson = pearson;
  fit.phi_hat =
      std::max(1.0, pearson / static_cast<double>(fit.n_clusters - 1));
  return fit;
}

// ---- beta-binomial ----

BetaBinomialFit fit_beta_binomial(const ClusteredBinomial& data) {
  check_non_degenerate(data);
  BetaBinomialFit fit;
  fit.n_clusters = data.cluster_count();
  fit.n_total = data.total_size();
  fit.sizes = data.sizes();
  const double N = static_cast<double>(fit.n_total);
  const double H = static_cast<double>(fit.n_clusters);
  fit.pi_hat = static_cast<double>(data.total_successes()) / N;
  if (fit.n_total <= fit.n_clusters) {
    throw ValidationError(
        "intraclass correlation needs at least one cluster of size >= 2");
  }
  double ssb = 0.0, ssw = 0.0, sum_sq_sizes = 0.0;
  for (const auto& c : data.clusters()) {
    const double n = static_cast<double>(c.size());
    const double p = static_cast<double>(c.successes) / n;
    ssb += n * (p - fit.pi_hat) * (p - fit.pi_hat);
    ssw += n * p * (1.0 - p);
    sum_sq_sizes += n * n;
  }
  fit.msb = ssb / (H - 1.0);
  fit.msw = ssw / (N - H);
  fit.n_star = (N - sum_sq_sizes / N) / (H - 1.0);
  const double denom = fit.msb + (fit.n_star - 1.0) * fit.msw;
  double rho = denom > 0.0 ? (fit.msb - fit.msw) / denom : 0.0;
  fit.rho_hat = std::clamp(rho, 1e-6, 1.0 - 1e-6);
  return fit;
}

// ---- quasi-Poisson ----

QuasiPoissonFit fit_quasi_poisson(const ClusteredCounts& data) {
  if (data.cluster_count() < 2) {
    throw ValidationError("need at least two clusters to estimate dispersion");
  }
  QuasiPoissonFit fit;
  fit.n_clusters = data.cluster_count();
  const double H = static_cast<double>(fit.n_clusters);
  double sum = 0.0;
  for (std::int64_t y : data.counts()) sum += static_cast<double>(y);
  if (sum <= 0.0) {
    throw ValidationError("dispersion undefined: all counts are zero");
  }
  fit.lambda_hat = sum / H;
  double ss = 0.0;
  for (std::int64_t y : data.counts()) {
    const double r = static_cast<double>(y) - fit.lambda_hat;
    ss += r * r;
  }
  fit.phi_hat = std::max(1.0, ss / fit.lambda_hat / (H - 1.0));
  return fit;
}

// ---- LmmFit helpers ----

double RemlEstimates::total_variance() const {
  return std::accumulate(sigma2.begin(), sigma2.end(), 0.0);
}

double RemlEstimates::pred_se() const {
  return std::sqrt(var_mu_hat + total_variance());
}

double LmmFit::total_variance() const {
  return std::accumulate(sigma2.begin(), sigma2.end(), 0.0);
}

double LmmFit::pred_se() const {
  return std::sqrt(var_mu_hat + total_variance());
}

// ---- Nelder-Mead ----

namespace {

struct NmResult {
  Eigen::VectorXd x;
  double f = kInf;
  bool converged = false;
};

// Standard simplex search (reflection 1, expansion 2, contraction 1/2,
// shrink 1/2).  Stops when both the objective spread and the simplex
// diameter fall below their tolerances, or the evaluation budget runs out.
NmResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                     const Eigen::VectorXd& x0, double step, double ftol,
                     double xtol, int max_evals) {
  const int dim = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(dim + 1, x0);
  std::vector<double> fs(dim + 1);
  int evals = 0;
  for (int j = 0; j < dim; ++j) xs[j + 1][j] += step;
  for (int j = 0; j <= dim; ++j) {
    fs[j] = f(xs[j]);
    ++evals;
  }
  std::vector<int> order(dim + 1);

  NmResult res;
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return fs[i] < fs[j]; });
    const int best = order.front(), worst = order.back();
    const int second_worst = order[dim - 1];

    double diameter = 0.0;
    for (int j = 0; j <= dim; ++j) {
      diameter = std::max(diameter,
                          (xs[j] - xs[best]).cwiseAbs().maxCoeff());
    }
    if (std::isfinite(fs[best]) && fs[worst] - fs[best] <= ftol &&
        diameter <= xtol) {
      res.x = xs[best];
      res.f = fs[best];
      res.converged = true;
      return res;
    }
    if (evals >= max_evals) {
      res.x = xs[best];
      res.f = fs[best];
      res.converged = false;
      return res;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int j = 0; j <= dim; ++j) {
      if (j != worst) centroid += xs[j];
    }
    centroid /= dim;

    Eigen::VectorXd xr = centroid + (centroid - xs[worst]);
    double fr = f(xr);
    ++evals;
    if (fr < fs[best]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[worst]);
      double fe = f(xe);
      ++evals;
      if (fe < fr) {
        xs[worst] = std::move(xe);
        fs[worst] = fe;
      } else {
        xs[worst] = std::move(xr);
        fs[worst] = fr;
      }
    } else if (fr < fs[second_worst]) {
      xs[worst] = std::move(xr);
      fs[worst] = fr;
    } else {
      const bool outside = fr < fs[worst];
      Eigen::VectorXd xc =
          outside ? centroid + 0.5 * (xr - centroid)
                  : centroid + 0.5 * (xs[worst] - centroid);
      double fc = f(xc);
      ++evals;
      if (fc < (outside ? fr : fs[worst])) {
        xs[worst] = std::move(xc);
        fs[worst] = fc;
      } else {
        for (int j = 0; j <= dim; ++j) {
          if (j == best) continue;
          xs[j] = xs[best] + 0.5 * (xs[j] - xs[best]);
          fs[j] = f(xs[j]);
          ++evals;
        }
      }
    }
  }
}

}  // namespace

// ---- RemlModel ----

RemlModel::RemlModel(const DesignMatrices& dm) : design_(dm) {
  n_ = dm.row_count();
  const std::int64_t C = dm.term_count();
  if (n_ <= C + 1) {
    throw ValidationError(
        "need more observations than variance components for REML");
  }
  relation_.reserve(C);
  for (const TermMatrix& t : dm.terms()) {
    relation_.push_back(t.Z * t.Z.transpose());
    names_.push_back(t.name);
  }
  names_.push_back("Residual");

  // Try a joint eigenbasis: eigenvectors of a generic positive combination
  // diagonalize every A_c iff the A_c commute.  Verify, never assume.
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n_, n_);
  for (std::int64_t c = 0; c < C; ++c) {
    S += std::sqrt(static_cast<double>(c) + 2.0) * relation_[c];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() == Eigen::Success) {
    const Eigen::MatrixXd& Q = es.eigenvectors();
    Eigen::MatrixXd eig(n_, C);
    bool all_diagonal = true;
    for (std::int64_t c = 0; c < C && all_diagonal; ++c) {
      Eigen::MatrixXd M = Q.transpose() * relation_[c] * Q;
      Eigen::VectorXd diag = M.diagonal();
      M.diagonal().setZero();
      const double off = M.cwiseAbs().maxCoeff();
      if (off > 1e-8 * (1.0 + relation_[c].cwiseAbs().maxCoeff())) {
        all_diagonal = false;
      } else {
        // Indicator relation matrices have level counts and exact zeros
        // for eigenvalues; snap decomposition dirt to zero so a singular
        // V reads as singular instead of log(dirt).
        const double snap = 1e-9 * (1.0 + diag.cwiseAbs().maxCoeff());
        eig.col(c) =
            (diag.array().abs() < snap).select(0.0, diag.cwiseMax(0.0));
      }
    }
    if (all_diagonal) {
      spectral_ = true;
      qt_ = Q.transpose();
      eig_ = std::move(eig);
      ones_t_ = qt_ * Eigen::VectorXd::Ones(n_);
    }
  }
}

RemlModel::Eval RemlModel::evaluate_spectral(const Eigen::VectorXd& yt,
                                             const double* sigma2) const {
  const std::int64_t C = eig_.cols();
  const double resid = sigma2[C];
  Eval ev;
  double logdet = 0.0, s11 = 0.0, s1y = 0.0, syy = 0.0;
  for (std::int64_t i = 0; i < n_; ++i) {
    double d = resid;
    for (std::int64_t c = 0; c < C; ++c) d += sigma2[c] * eig_(i, c);
    if (!(d > 0.0)) return ev;
    logdet += std::log(d);
    const double w = 1.0 / d;
    s11 += ones_t_[i] * ones_t_[i] * w;
    s1y += ones_t_[i] * yt[i] * w;
    syy += yt[i] * yt[i] * w;
  }
  if (!(s11 > 0.0)) return ev;
  const double quad = syy - s1y * s1y / s11;
  ev.loglik = -0.5 * (static_cast<double>(n_ - 1) * kLog2Pi + logdet +
                      std::log(s11) + quad);
  ev.s11 = s11;
  ev.s1y = s1y;
  ev.ok = std::isfinite(ev.loglik);
  return ev;
}

RemlModel::Eval RemlModel::evaluate_direct(const Eigen::VectorXd& y,
                                           const double* sigma2) const {
  const std::int64_t C = static_cast<std::int64_t>(relation_.size());
  Eval ev;
  Eigen::MatrixXd V =
      sigma2[C] * Eigen::MatrixXd::Identity(n_, n_);
  for (std::int64_t c = 0; c < C; ++c) V += sigma2[c] * relation_[c];
  Eigen::LLT<Eigen::MatrixXd> llt(V);
  if (llt.info() != Eigen::Success) return ev;
  double logdet = 0.0;
  for (std::int64_t i = 0; i < n_; ++i) {
    const double l = llt.matrixLLT()(i, i);
    if (!(l > 0.0)) return ev;
    logdet += 2.0 * std::log(l);
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n_);
  const Eigen::VectorXd v1 = llt.solve(ones);
  const Eigen::VectorXd vy = llt.solve(y);
  const double s11 = v1.sum();
  const double s1y = y.dot(v1);
  const double syy = y.dot(vy);
  if (!(s11 > 0.0)) return ev;
  const double quad = syy - s1y * s1y / s11;
  ev.loglik = -0.5 * (static_cast<double>(n_ - 1) * kLog2Pi + logdet +
                      std::log(s11) + quad);
  ev.s11 = s11;
  ev.s1y = s1y;
  ev.ok = std::isfinite(ev.loglik);
  return ev;
}

double RemlModel::restricted_loglik(const Eigen::VectorXd& y,
                                    const std::vector<double>& sigma2) const {
  if (y.size() != n_) throw ValidationError("response length mismatch");
  if (static_cast<std::int64_t>(sigma2.size()) != component_count()) {
    throw ValidationError("expected one variance per term plus the residual");
  }
  for (double v : sigma2) {
    if (!(v >= 0.0)) throw ValidationError("variances must be >= 0");
  }
  Eval ev = spectral_ ? evaluate_spectral(qt_ * y, sigma2.data())
                      : evaluate_direct(y, sigma2.data());
  if (!ev.ok) {
    throw ComputeError("restricted likelihood undefined at these variances");
  }
  return ev.loglik;
}

namespace {

// Moment-style starting point: between-level variance per term, within
// variance for the residual.  Rough is fine; it only seeds the search.
std::vector<double> anova_start(const DesignMatrices& dm,
                                const Eigen::VectorXd& y, double var_y) {
  const std::int64_t n = y.size();
  const double grand = y.mean();
  std::vector<double> start(dm.term_count() + 1, var_y);
  double min_within = var_y;
  for (std::int64_t c = 0; c < dm.term_count(); ++c) {
    const Eigen::MatrixXd& Z = dm.terms()[c].Z;
    const Eigen::VectorXd counts = Z.colwise().sum();
    const Eigen::VectorXd sums = Z.transpose() * y;
    double between = 0.0, within = 0.0;
    std::int64_t occupied = 0;
    for (std::int64_t l = 0; l < Z.cols(); ++l) {
      if (counts[l] <= 0.0) continue;
      ++occupied;
      const double mean_l = sums[l] / counts[l];
      between += (mean_l - grand) * (mean_l - grand);
    }
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t l = 0; l < Z.cols(); ++l) {
        if (Z(i, l) == 1.0) {
          const double mean_l = sums[l] / counts[l];
          within += (y[i] - mean_l) * (y[i] - mean_l);
          break;
        }
      }
    }
    const double b =
        occupied >= 2 ? between / static_cast<double>(occupied - 1) : 0.0;
    const double w = n > occupied
                         ? within / static_cast<double>(n - occupied)
                         : var_y;
    const double nbar = static_cast<double>(n) / std::max<std::int64_t>(
                                                     occupied, 1);
    start[c] = std::clamp(b - w / nbar, 1e-4 * var_y, 4.0 * var_y);
    min_within = std::min(min_within, w);
  }
  start.back() = std::clamp(min_within, 1e-4 * var_y, 4.0 * var_y);
  return start;
}

}  // namespace

RemlEstimates RemlModel::estimate(const Eigen::VectorXd& y) const {
  if (y.size() != n_) throw ValidationError("response length mismatch");
  const std::int64_t k = component_count();
  const double grand = y.mean();
  double var_y = 0.0;
  for (std::int64_t i = 0; i < n_; ++i) {
    var_y += (y[i] - grand) * (y[i] - grand);
  }
  var_y /= static_cast<double>(n_ - 1);
  if (!(var_y > 0.0) || !std::isfinite(var_y)) {
    throw ComputeError(
        "response is constant; variance components are not identifiable");
  }
  const double floor = 1e-10 * var_y;

  // Optimize over theta = log sigma2; the residual gets an additive floor
  // so V stays positive definite along the whole search path.
  Eigen::VectorXd yt;
  if (spectral_) yt = qt_ * y;
  std::vector<double> sig(k);
  auto objective = [&](const Eigen::VectorXd& theta) -> double {
    for (std::int64_t j = 0; j < k; ++j) {
      const double v = std::exp(theta[j]);
      if (!std::isfinite(v)) return kInf;
      sig[j] = v;
    }
    sig[k - 1] += floor;
    Eval ev = spectral_ ? evaluate_spectral(yt, sig.data())
                        : evaluate_direct(y, sig.data());
    return ev.ok ? -ev.loglik : kInf;
  };

  std::vector<std::vector<double>> starts;
  starts.push_back(anova_start(design_, y, var_y));
  starts.push_back(std::vector<double>(k, var_y / static_cast<double>(k)));
  std::vector<double> residual_only(k, 1e-4 * var_y);
  residual_only.back() = var_y;
  starts.push_back(std::move(residual_only));

  const double ftol = 1e-10;
  const double xtol = 1e-8;
  const int max_evals = 5000;
  NmResult best;
  bool best_converged = false;
  for (const std::vector<double>& s : starts) {
    Eigen::VectorXd theta(k);
    for (std::int64_t j = 0; j < k; ++j) theta[j] = std::log(s[j]);
    NmResult r = nelder_mead(objective, theta, 0.7, ftol, xtol, max_evals);
    if (r.f < best.f) {
      best = std::move(r);
      best_converged = best.converged;
    }
  }
  if (!std::isfinite(best.f)) {
    throw ComputeError("REML optimization failed: no valid likelihood found");
  }
  if (!best_converged) {
    // One polish pass from the best point before giving up.
    NmResult r = nelder_mead(objective, best.x, 0.1, ftol, xtol, max_evals);
    if (r.f <= best.f && r.converged) {
      best = std::move(r);
      best_converged = true;
    }
  }
  if (!best_converged) {
    throw ComputeError(
        "REML optimization did not converge (best restricted log-likelihood " +
        std::to_string(-best.f) + ")");
  }

  RemlEstimates est;
  est.sigma2.resize(k);
  for (std::int64_t j = 0; j < k; ++j) est.sigma2[j] = std::exp(best.x[j]);
  est.sigma2[k - 1] += floor;
  Eval ev = spectral_ ? evaluate_spectral(yt, est.sigma2.data())
                      : evaluate_direct(y, est.sigma2.data());
  if (!ev.ok) {
    throw ComputeError("REML solution does not evaluate to a finite likelihood");
  }
  est.mu_hat = ev.s1y / ev.s11;
  est.var_mu_hat = 1.0 / ev.s11;
  est.reml_value = ev.loglik;
  return est;
}

LmmFit RemlModel::fit(const Eigen::VectorXd& y) const {
  RemlEstimates est = estimate(y);
  LmmFit out{est.mu_hat,
             est.var_mu_hat,
             std::move(est.sigma2),
             names_,
             est.reml_value,
             ModelSpec{},
             design_};
  return out;
}

LmmFit fit_random_intercepts(const MixedModelData& data,
                             const ModelSpec& spec) {
  DesignMatrices dm = build_design_matrices(data, spec);
  RemlModel model(dm);
  Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(data.response().data(),
                                        data.response().size());
  LmmFit fit = model.fit(y);
  fit.model = spec;
  return fit;
}

}  // namespace predcal
