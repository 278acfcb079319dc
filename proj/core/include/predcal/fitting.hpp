#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "predcal/design.hpp"
#include "predcal/types.hpp"

namespace predcal {

// ---- moment fits for the three count families ----

struct QuasiBinomialFit {
  double pi_hat = 0.0;
  double phi_hat = 1.0;        // floored at 1
  double pearson = 0.0;        // raw Pearson statistic
  std::int64_t n_total = 0;    // N = sum of cluster sizes
  std::int64_t n_clusters = 0; // H
  std::vector<std::int64_t> sizes;
};

struct BetaBinomialFit {
  double pi_hat = 0.0;
  double rho_hat = 0.0;        // clamped to [1e-6, 1-1e-6]
  double msb = 0.0, msw = 0.0, n_star = 0.0;  // ANOVA pieces, for audit
  std::int64_t n_total = 0;
  std::int64_t n_clusters = 0;
  std::vector<std::int64_t> sizes;
};

struct QuasiPoissonFit {
  double lambda_hat = 0.0;
  double phi_hat = 1.0;        // floored at 1
  std::int64_t n_clusters = 0;
};

// pi_hat = sum(y)/N; phi_hat = max(1, Pearson/(H-1)) from the
// intercept-only quasi-binomial model.
QuasiBinomialFit fit_quasi_binomial(const ClusteredBinomial& data);

// Same pi_hat; rho_hat from the one-way ANOVA intraclass estimator
// (MSB, MSW, n° weights for unequal sizes).
BetaBinomialFit fit_beta_binomial(const ClusteredBinomial& data);

// lambda_hat = mean(y); phi_hat = max(1, sum((y-lambda)^2)/lambda/(H-1)).
QuasiPoissonFit fit_quasi_poisson(const ClusteredCounts& data);

// ---- REML for random-intercept mixed models ----

struct LmmFit {
  double mu_hat = 0.0;
  double var_mu_hat = 0.0;
  std::vector<double> sigma2;                // per term, residual last
  std::vector<std::string> component_names;  // term names + "Residual"
  double reml_value = 0.0;                   // restricted log-likelihood
  ModelSpec model;                           // empty response if matrix-only
  DesignMatrices design;                     // historical design

  double total_variance() const;
  double pred_se() const;  // sqrt(var_mu_hat + sum(sigma2))
};

// Estimates without the design/model attachments; what the bootstrap
// refit loop actually consumes.
struct RemlEstimates {
  double mu_hat = 0.0;
  double var_mu_hat = 0.0;
  double reml_value = 0.0;
  std::vector<double> sigma2;  // per term, residual last

  double total_variance() const;
  double pred_se() const;
};

// REML machinery precomputed for one design; reusable across many
// response vectors (the bootstrap refits thousands of them).  When the
// per-term relation matrices Z_c Z_c' commute -- every balanced crossed
// layout does -- a one-off joint eigendecomposition turns each likelihood
// evaluation into O(N·C) work; otherwise each evaluation factorizes V.
class RemlModel {
 public:
  explicit RemlModel(const DesignMatrices& dm);

  // Maximizes the restricted likelihood over log-variances with a
  // multi-start Nelder-Mead search.  Throws ComputeError when no start
  // converges or the response is constant.
  RemlEstimates estimate(const Eigen::VectorXd& y) const;

  // estimate() plus the design and component names attached.
  LmmFit fit(const Eigen::VectorXd& y) const;

  // Restricted log-likelihood at fixed variance components (term order,
  // residual last); exposed for cross-checking the optimizer.
  double restricted_loglik(const Eigen::VectorXd& y,
                           const std::vector<double>& sigma2) const;

  std::int64_t row_count() const { return n_; }
  std::int64_t component_count() const {
    return static_cast<std::int64_t>(names_.size());
  }
  bool uses_spectral_path() const { return spectral_; }

 private:
  struct Eval {
    double loglik = 0.0;
    double s11 = 0.0;  // 1' V^-1 1
    double s1y = 0.0;  // 1' V^-1 y
    bool ok = false;
  };
  Eval evaluate_spectral(const Eigen::VectorXd& yt,
                         const double* sigma2) const;
  Eval evaluate_direct(const Eigen::VectorXd& y, const double* sigma2) const;

  std::int64_t n_ = 0;
  std::vector<std::string> names_;        // term names + "Residual"
  std::vector<Eigen::MatrixXd> relation_; // A_c = Z_c Z_c'
  DesignMatrices design_;
  bool spectral_ = false;
  Eigen::MatrixXd qt_;       // Q' (joint eigenbasis)
  Eigen::MatrixXd eig_;      // n x C, column c = eigenvalues of A_c
  Eigen::VectorXd ones_t_;   // Q' 1

  friend LmmFit fit_random_intercepts(const MixedModelData&, const ModelSpec&);
};

// Convenience wrapper: build the design, fit, and attach the model spec.
LmmFit fit_random_intercepts(const MixedModelData& data, const ModelSpec& spec);

}  // namespace predcal
