#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "predcal/design.hpp"
#include "predcal/rng.hpp"
#include "predcal/types.hpp"

namespace predcal {

// The four generative mechanisms behind fixtures and bootstrap samples.
// Parameter ranges are enforced strictly: prob in (0,1), rho in (0,1),
// phi > 1 (and < min cluster size for the quasi-binomial), lambda > 0.
// Callers feeding floored point estimates back in (phi = 1, rho = 0 after
// flooring) must clamp first; see clamp_*_for_sampling below.

// Beta-binomial: a+b = (1-rho)/rho, a = prob*(a+b); per cluster
// p_i ~ Beta(a,b), y_i ~ Binomial(n_i, p_i).
std::vector<std::int64_t> sample_beta_binomial(
    RandomStream& rs, const std::vector<std::int64_t>& sizes, double prob,
    double rho);

// Quasi-binomial: per cluster (a+b)_i = (n_i - phi)/(phi - 1), positive
// only for 1 < phi < n_i; a_i = prob*(a+b)_i; p_i ~ Beta(a_i, b_i);
// y_i ~ Binomial(n_i, p_i).
std::vector<std::int64_t> sample_quasi_binomial(
    RandomStream& rs, const std::vector<std::int64_t>& sizes, double prob,
    double phi);

// Quasi-Poisson: kappa = (phi-1)/lambda; lambda_i ~ Gamma(shape 1/kappa,
// rate 1/(kappa*lambda)) -- rate, not scale, which is the only reading
// with E(y) = lambda and Var(y) = phi*lambda; y_i ~ Poisson(lambda_i).
std::vector<std::int64_t> sample_quasi_poisson(RandomStream& rs,
                                               std::int64_t n_clusters,
                                               double lambda, double phi);

// Mixed-model bootstrap: y = 1*mu + sum_c Z_c U_c + e with
// U_c ~ N(0, sigma2[c] I) and e ~ N(0, sigma2.back() I).  sigma2 holds
// one entry per design term plus the residual, in that order.
Eigen::VectorXd sample_lmm(RandomStream& rs, const DesignMatrices& dm,
                           double mu, const std::vector<double>& sigma2);

// Clamps for feeding floored estimates into the samplers.
double clamp_rho_for_sampling(double rho);    // >= 1e-9
double clamp_phi_for_sampling(double phi);    // >= 1 + 1e-9

}  // namespace predcal
