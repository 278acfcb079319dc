#include "predcal/distributions.hpp"

#include <cmath>

#include "predcal/types.hpp"

namespace predcal {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double gamma_shape_ge1(RandomStream& rs, double shape) {
  // Marsaglia & Tsang (2000), valid for shape >= 1.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x = draw_normal(rs);
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = rs.next_open();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

double draw_normal(RandomStream& rs) {
  double u1 = rs.next_open();
  double u2 = rs.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double draw_gamma(RandomStream& rs, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw ValidationError("gamma draw needs shape > 0 and rate > 0");
  }
  if (shape >= 1.0) return gamma_shape_ge1(rs, shape) / rate;
  // Boost: G(a) = G(a+1) * U^{1/a}.
  double g = gamma_shape_ge1(rs, shape + 1.0);
  double u = rs.next_open();
  return g * std::exp(std::log(u) / shape) / rate;
}

double draw_log_gamma(RandomStream& rs, double shape) {
  if (!(shape > 0.0)) {
    throw ValidationError("gamma draw needs shape > 0 and rate > 0");
  }
  if (shape >= 1.0) return std::log(gamma_shape_ge1(rs, shape));
  double g = gamma_shape_ge1(rs, shape + 1.0);
  double u = rs.next_open();
  return std::log(g) + std::log(u) / shape;
}

double draw_beta(RandomStream& rs, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw ValidationError("beta draw needs both shapes > 0");
  }
  if (a < 0.1 || b < 0.1) {
    // Ratio in log space: X = 1 / (1 + exp(log G_b - log G_a)).
    double d = draw_log_gamma(rs, b) - draw_log_gamma(rs, a);
    if (d > 700.0) return 0.0;
    if (d < -700.0) return 1.0;
    return 1.0 / (1.0 + std::exp(d));
  }
  double g1 = draw_gamma(rs, a, 1.0);
  double g2 = draw_gamma(rs, b, 1.0);
  double s = g1 + g2;
  if (s <= 0.0) {
    double d = draw_log_gamma(rs, b) - draw_log_gamma(rs, a);
    return 1.0 / (1.0 + std::exp(d));
  }
  return g1 / s;
}

std::int64_t draw_poisson(RandomStream& rs, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw ValidationError("poisson draw needs a finite mean >= 0");
  }
  std::int64_t total = 0;
  double lam = mean;
  // Ahrens-Dieter reduction: peel off blocks of ~7/8 of the mean using a
  // gamma waiting time until the remainder is small.
  while (lam > 12.0) {
    std::int64_t m = static_cast<std::int64_t>(std::floor(0.875 * lam));
    double g = draw_gamma(rs, static_cast<double>(m), 1.0);
    if (g <= lam) {
      total += m;
      lam -= g;
    } else {
      return total + draw_binomial(rs, m - 1, lam / g);
    }
  }
  if (lam <= 0.0) return total;
  // Knuth's multiplication method.
  const double limit = std::exp(-lam);
  double prod = 1.0;
  std::int64_t k = -1;
  do {
    prod *= rs.next_open();
    ++k;
  } while (prod > limit);
  return total + k;
}

std::int64_t draw_binomial(RandomStream& rs, std::int64_t n, double p) {
  if (n < 0) throw ValidationError("binomial draw needs n >= 0");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("binomial draw needs p in [0, 1]");
  }
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - draw_binomial(rs, n, 1.0 - p);
  if (n <= 64) {
    std::int64_t count = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      count += rs.next_double() < p ? 1 : 0;
    }
    return count;
  }
  // Split at the order statistic: with a = 1 + n/2, the a-th of n uniforms
  // is Beta(a, n+1-a); condition on which side of p it falls.
  std::int64_t a = 1 + n / 2;
  double x = draw_beta(rs, static_cast<double>(a), static_cast<double>(n + 1 - a));
  if (x >= p) return draw_binomial(rs, a - 1, p / x);
  return a + draw_binomial(rs, n - a, (p - x) / (1.0 - x));
}

}  // namespace predcal
