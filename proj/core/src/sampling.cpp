#include "predcal/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "predcal/distributions.hpp"

namespace predcal {
namespace {

void check_prob(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw ValidationError("prob must lie strictly between 0 and 1");
  }
}

void check_sizes(const std::vector<std::int64_t>& sizes) {
  if (sizes.empty()) throw ValidationError("need at least one cluster size");
  for (std::int64_t n : sizes) {
    if (n < 1) throw ValidationError("cluster sizes must be >= 1");
  }
}

}  // namespace

std::vector<std::int64_t> sample_beta_binomial(
    RandomStream& rs, const std::vector<std::int64_t>& sizes, double prob,
    double rho) {
  check_sizes(sizes);
  check_prob(prob);
  if (!(rho > 0.0 && rho < 1.0)) {
    throw ValidationError("rho must lie strictly between 0 and 1");
  }
  const double ab = (1.0 - rho) / rho;
  const double a = prob * ab;
  const double b = ab - a;
  std::vector<std::int64_t> out(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    double p = draw_beta(rs, a, b);
    out[i] = draw_binomial(rs, sizes[i], p);
  }
  return out;
}

std::vector<std::int64_t> sample_quasi_binomial(
    RandomStream& rs, const std::vector<std::int64_t>& sizes, double prob,
    double phi) {
  check_sizes(sizes);
  check_prob(prob);
  const std::int64_t min_size = *std::min_element(sizes.begin(), sizes.end());
  if (!(phi > 1.0)) {
    throw ValidationError(
        "quasi-binomial sampling needs phi > 1 (the beta parameters must be "
        "positive)");
  }
  if (!(phi < static_cast<double>(min_size))) {
    throw ValidationError(
        "quasi-binomial sampling needs phi < the smallest cluster size (got "
        "phi >= " +
        std::to_string(min_size) + ")");
  }
  std::vector<std::int64_t> out(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double ab = (static_cast<double>(sizes[i]) - phi) / (phi - 1.0);
    const double a = prob * ab;
    const double b = ab - a;
    double p = draw_beta(rs, a, b);
    out[i] = draw_binomial(rs, sizes[i], p);
  }
  return out;
}

std::vector<std::int64_t> sample_quasi_poisson(RandomStream& rs,
                                               std::int64_t n_clusters,
                                               double lambda, double phi) {
  if (n_clusters < 1) throw ValidationError("need at least one cluster");
  if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
  if (!(phi > 1.0)) {
    throw ValidationError("quasi-Poisson sampling needs phi > 1");
  }
  const double kappa = (phi - 1.0) / lambda;
  const double shape = 1.0 / kappa;
  const double rate = 1.0 / (kappa * lambda);
  std::vector<std::int64_t> out(n_clusters);
  for (std::int64_t i = 0; i < n_clusters; ++i) {
    double mean_i = draw_gamma(rs, shape, rate);
    out[i] = draw_poisson(rs, mean_i);
  }
  return out;
}

Eigen::VectorXd sample_lmm(RandomStream& rs, const DesignMatrices& dm,
                           double mu, const std::vector<double>& sigma2) {
  if (!std::isfinite(mu)) throw ValidationError("mu must be finite");
  if (static_cast<std::int64_t>(sigma2.size()) != dm.term_count() + 1) {
    throw ValidationError(
        "sigma2 needs one entry per design term plus the residual");
  }
  for (double v : sigma2) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ValidationError("variance components must be finite and >= 0");
    }
  }
  const std::int64_t n = dm.row_count();
  Eigen::VectorXd y = Eigen::VectorXd::Constant(n, mu);
  for (std::int64_t c = 0; c < dm.term_count(); ++c) {
    const Eigen::MatrixXd& Z = dm.terms()[c].Z;
    const double sd = std::sqrt(sigma2[c]);
    Eigen::VectorXd u(Z.cols());
    for (std::int64_t l = 0; l < Z.cols(); ++l) u[l] = sd * draw_normal(rs);
    y += Z * u;
  }
  const double sd_res = std::sqrt(sigma2.back());
  for (std::int64_t i = 0; i < n; ++i) y[i] += sd_res * draw_normal(rs);
  return y;
}

double clamp_rho_for_sampling(double rho) { return std::max(rho, 1e-9); }

double clamp_phi_for_sampling(double phi) { return std::max(phi, 1.0 + 1e-9); }

}  // namespace predcal
