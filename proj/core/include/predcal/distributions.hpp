#pragma once

#include <cstdint>

#include "predcal/rng.hpp"

namespace predcal {

// Exact (non-approximate) samplers for the distributions the bootstrap
// machinery needs.  All of them draw from a RandomStream so results are
// reproducible under the substream scheme.  Invalid parameters throw
// ValidationError.

// Standard normal via Box-Muller.
double draw_normal(RandomStream& rs);

// Gamma(shape, rate); density proportional to x^{shape-1} e^{-rate x}.
// Marsaglia-Tsang squeeze for shape >= 1, boosted for shape < 1.
double draw_gamma(RandomStream& rs, double shape, double rate);

// log of a Gamma(shape, 1) draw; stays finite for very small shapes where
// the draw itself would underflow to zero.
double draw_log_gamma(RandomStream& rs, double shape);

// Beta(a, b) as G_a / (G_a + G_b); switches to a log-space form when a
// shape is small enough that the gamma draws risk underflow.
double draw_beta(RandomStream& rs, double a, double b);

// Poisson(mean).  Multiplication method for small means; Ahrens-Dieter
// gamma/binomial reduction for large ones, so cost stays bounded.
std::int64_t draw_poisson(RandomStream& rs, double mean);

// Binomial(n, p).  Bernoulli count for small n; Knuth's beta-splitting
// recursion for large n (O(log n) beta draws).
std::int64_t draw_binomial(RandomStream& rs, std::int64_t n, double p);

}  // namespace predcal
