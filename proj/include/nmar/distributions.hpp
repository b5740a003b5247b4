#ifndef NMAR_DISTRIBUTIONS_HPP
#define NMAR_DISTRIBUTIONS_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nmar::dist {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Two-sided Wald p-value 2 * Phi(-|estimate / se|).
inline double wald_pvalue(double estimate, double se) {
  if (estimate == 0.0 || std::isinf(se)) return 1.0;
  if (!(se > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return 2.0 * normal_cdf(-std::abs(estimate / se));
}

/// Regularized lower incomplete gamma P(a, x): power series below a + 1,
/// Lentz continued fraction for Q(a, x) above.
inline double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || std::isnan(x)) throw std::domain_error("gamma_p domain");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  constexpr double eps = 1e-16;
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * eps) break;
    }
    return std::min(1.0, sum * std::exp(log_prefix));
  }
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::max(0.0, 1.0 - std::exp(log_prefix) * h);
}

inline double chisq_cdf(double x, double df) {
  if (x < 0.0 || !(df >= 1.0)) throw std::domain_error("chisq_cdf domain");
  return gamma_p(0.5 * df, 0.5 * x);
}

/// Lower-tail quantile; the upper-tail critical value at level alpha is
/// chisq_quantile(1 - alpha, df).
inline double chisq_quantile(double prob, double df) {
  if (!(prob > 0.0 && prob < 1.0) || !(df >= 1.0)) throw std::domain_error("chisq_quantile domain");
  double lo = 0.0;
  double hi = std::max(1.0, df);
  while (chisq_cdf(hi, df) < prob) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (chisq_cdf(mid, df) < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace nmar::dist

#endif  // NMAR_DISTRIBUTIONS_HPP
