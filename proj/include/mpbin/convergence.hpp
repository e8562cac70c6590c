#pragma once

// Kolmogorov distance between the tree's terminal law and the lognormal law.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "mpbin/errors.hpp"
#include "mpbin/lattice.hpp"
#include "mpbin/normal.hpp"
#include "mpbin/tree.hpp"

namespace mpbin {

/// Distribution function of a discrete law: F(x) = cum[i] on [support[i], support[i+1]).
struct DiscreteCdf {
  std::vector<double> support;  // strictly ascending
  std::vector<double> cum;      // non-decreasing, back() == 1

  std::size_t size() const noexcept { return support.size(); }

  double mass(std::size_t i) const { return i == 0 ? cum[0] : cum[i] - cum[i - 1]; }

  double operator()(double x) const {
    const auto it = std::upper_bound(support.begin(), support.end(), x);
    if (it == support.begin()) return 0.0;
    return cum[static_cast<std::size_t>(it - support.begin()) - 1];
  }
};

enum class Measure { physical, risk_neutral };

/// Law of s0 * u^I * d^(n-I) with I ~ Binomial(n, q), exact factors.
/// q is p_dt under the physical measure and Q_dt under the risk-neutral one.
inline DiscreteCdf terminal_distribution(double s0, const ModelParams& params, int n, double dt,
                                         Measure measure, std::optional<double> r = std::nullopt) {
  if (n < 1) throw DomainError("terminal distribution needs n >= 1");
  if (!(s0 > 0.0)) throw DomainError("spot price must be positive");
  if (measure == Measure::risk_neutral && !r) {
    throw DomainError("risk-neutral terminal distribution requires a rate");
  }
  const StepFactors f = step_factors_exact(params, dt);
  const double q = measure == Measure::physical ? f.p : risk_neutral_prob(params, *r, dt);

  const boost::math::binomial_distribution<double> counts(n, q);
  DiscreteCdf cdf;
  cdf.support.reserve(static_cast<std::size_t>(n) + 1);
  cdf.cum.reserve(static_cast<std::size_t>(n) + 1);
  const double log_u = std::log(f.u);
  const double log_d = std::log(f.d);
  double running = 0.0;
  for (int i = 0; i <= n; ++i) {
    cdf.support.push_back(s0 * std::exp(i * log_u + (n - i) * log_d));
    running += boost::math::pdf(counts, i);
    cdf.cum.push_back(running);
  }
  return cdf;
}

/// P(S_t <= x) for S_t = s0 exp((b - sigma^2/2) t + sigma B(t)).
inline double lognormal_cdf(double x, double s0, double b, double sigma, double t) {
  if (!(t > 0.0)) throw DomainError("t must be positive");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return normal_cdf((std::log(x / s0) - (b - 0.5 * sigma * sigma) * t) / (sigma * std::sqrt(t)));
}

/// sup_x |F_n(x) - F(x)| for a step function F_n against a continuous F.
/// Both one-sided limits of F_n are compared at every jump.
template <class Cdf>
double kolmogorov_distance(const DiscreteCdf& empirical, Cdf&& continuous) {
  double worst = 0.0;
  double below = 0.0;
  for (std::size_t i = 0; i < empirical.size(); ++i) {
    const double f = continuous(empirical.support[i]);
    worst = std::max({worst, std::abs(empirical.cum[i] - f), std::abs(below - f)});
    below = empirical.cum[i];
  }
  return worst;
}

/// p-dependence of the Berry-Esseen bound: (1 - 2p + 2p^2) / sqrt(p (1 - p)).
inline double rate_constant(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("rate constant needs p in (0, 1)");
  return (1.0 - 2.0 * p + 2.0 * p * p) / std::sqrt(p * (1.0 - p));
}

struct RateRow {
  int n = 0;
  double distance = 0.0;
  double scaled = 0.0;  // distance * sqrt(n)
};

struct RateExperiment {
  std::vector<RateRow> rows;
  double slope = 0.0;  // least-squares slope of log(distance) against log(n)
};

/// Least-squares slope of y against x.
inline double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

/// Kolmogorov distance between the n-step physical terminal law at horizon t
/// (dt = t / n) and the lognormal law with mean b = params.drift(), for each n.
inline RateExperiment rate_experiment(const ModelParams& params, double t,
                                      std::span<const int> n_values, double s0 = 1.0) {
  if (n_values.empty()) throw DomainError("rate experiment needs at least one n");
  if (!std::is_sorted(n_values.begin(), n_values.end()) ||
      std::adjacent_find(n_values.begin(), n_values.end()) != n_values.end()) {
    throw DomainError("n values must be strictly ascending");
  }
  const double b = params.drift();
  RateExperiment out;
  std::vector<double> log_n, log_dist;
  for (const int n : n_values) {
    const double dt = t / n;
    const DiscreteCdf tree = terminal_distribution(s0, params, n, dt, Measure::physical);
    const double dist = kolmogorov_distance(
        tree, [&](double x) { return lognormal_cdf(x, s0, b, params.sigma, t); });
    out.rows.push_back({n, dist, dist * std::sqrt(static_cast<double>(n))});
    log_n.push_back(std::log(static_cast<double>(n)));
    log_dist.push_back(std::log(dist));
  }
  out.slope = out.rows.size() >= 2 ? fit_slope(log_n, log_dist) : 0.0;
  return out;
}

/// CSV rows `n,distance,scaled_distance` followed by a `# slope=` footer.
inline void write_rate_csv(std::ostream& os, const RateExperiment& experiment, int precision = 6) {
  const auto flags = os.flags();
  const auto old_precision = os.precision(precision);
  os << "n,distance,scaled_distance\n";
  for (const RateRow& row : experiment.rows) {
    os << row.n << ',' << row.distance << ',' << row.scaled << '\n';
  }
  os << "# slope=" << experiment.slope << '\n';
  os.precision(old_precision);
  os.flags(flags);
}

}  // namespace mpbin
