#ifndef BODX_NORMAL_HPP
#define BODX_NORMAL_HPP

#include <cmath>

#include "bodx/common.hpp"

// Standard normal density, CDF, log-CDF and quantile, exact through the far
// tail. erfc covers |x| <= 36; beyond that the Mills-ratio asymptotic series
// takes over (crossover chosen where the two agree to better than 1e-10).
namespace bodx {

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double log_norm_cdf(double x) {
  if (x >= -36.0) return std::log(norm_cdf(x));
  const double t = -x;
  const double t2 = t * t;
  const double series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) -
                        15.0 / (t2 * t2 * t2) + 105.0 / (t2 * t2 * t2 * t2);
  return -0.5 * t2 - 0.5 * std::log(2.0 * kPi) - std::log(t) + std::log(series);
}

// Quantile: Hastings' rational initial guess polished by Newton steps on
// log Phi, which stays conditioned arbitrarily far into the tail.
inline double norm_quantile(double u) {
  require(u > 0.0 && u < 1.0, "normal quantile needs u in (0,1)");
  const bool flip = u > 0.5;
  const double uu = flip ? 1.0 - u : u;
  const double t = std::sqrt(-2.0 * std::log(uu));
  double x = -(t - (2.30753 + 0.27061 * t) /
                       (1.0 + 0.99229 * t + 0.04481 * t * t));
  const double target = std::log(uu);
  for (int it = 0; it < 8; ++it) {
    const double lc = log_norm_cdf(x);
    const double lpdf = -0.5 * x * x - 0.5 * std::log(2.0 * kPi);
    const double step = (lc - target) / std::exp(lpdf - lc);
    x -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(x))) break;
  }
  return flip ? -x : x;
}

}  // namespace bodx

#endif
