#pragma once

#include <cmath>
#include <numbers>

namespace mpbin {

/// Standard normal distribution function, via the complementary error function.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Black-Scholes price of a European call (put when is_call is false), no dividends.
inline double black_scholes(double s0, double strike, double r, double sigma, double t,
                            bool is_call = true) {
  const double vol = sigma * std::sqrt(t);
  const double d1 = (std::log(s0 / strike) + (r + 0.5 * sigma * sigma) * t) / vol;
  const double d2 = d1 - vol;
  const double disc = std::exp(-r * t);
  if (is_call) return s0 * normal_cdf(d1) - strike * disc * normal_cdf(d2);
  return strike * disc * normal_cdf(-d2) - s0 * normal_cdf(-d1);
}

}  // namespace mpbin
