#pragma once

// Lattice construction and European pricing by backward induction.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mpbin/errors.hpp"
#include "mpbin/tree.hpp"

namespace mpbin {

struct Lattice {
  double s0 = 100.0;
  int n = 1;
  double dt = 1.0;
  StepFactors factors;
  double rate = 0.0;

  double maturity() const noexcept { return n * dt; }

  /// Price after k steps with i up-moves.
  double node(int k, int i) const {
    return s0 * std::pow(factors.u, i) * std::pow(factors.d, k - i);
  }
};

inline Lattice make_lattice(double s0, const ModelParams& params, int n, double dt, double rate,
                            FactorForm form = FactorForm::exact) {
  if (!(s0 > 0.0)) throw DomainError("spot price must be positive");
  if (n < 1) throw DomainError("lattice needs at least one step");
  return {s0, n, dt, step_factors(params, dt, form), rate};
}

class Payoff {
 public:
  enum class Kind { call, put, custom };

  static Payoff call(double strike) { return Payoff(Kind::call, strike, {}); }
  static Payoff put(double strike) { return Payoff(Kind::put, strike, {}); }
  static Payoff custom(std::function<double(double)> evaluator) {
    return Payoff(Kind::custom, 0.0, std::move(evaluator));
  }

  Kind kind() const noexcept { return kind_; }
  double strike() const noexcept { return strike_; }

  double operator()(double terminal_price) const {
    switch (kind_) {
      case Kind::call:
        return std::max(terminal_price - strike_, 0.0);
      case Kind::put:
        return std::max(strike_ - terminal_price, 0.0);
      case Kind::custom:
        break;
    }
    return evaluator_(terminal_price);
  }

 private:
  Payoff(Kind kind, double strike, std::function<double(double)> evaluator)
      : kind_(kind), strike_(strike), evaluator_(std::move(evaluator)) {
    if (kind_ != Kind::custom && !(strike_ >= 0.0 && std::isfinite(strike_))) {
      throw DomainError("strike must be finite and non-negative");
    }
    if (kind_ == Kind::custom && !evaluator_) throw DomainError("custom payoff needs an evaluator");
  }

  Kind kind_;
  double strike_;
  std::function<double(double)> evaluator_;
};

/// The risk-neutral branch probability before the [0, 1] check:
///
///   Q = ((r - delta) s sqrt(dt) + p sigma) / ((gamma - delta) s sqrt(dt) + sigma),
///   s = sqrt(p (1 - p)).
///
/// Throws DomainError when the denominator is not positive.
inline double risk_neutral_formula(const ModelParams& params, double r, double dt) {
  const double p = p_up(params, dt);
  const double spread = std::sqrt(p * (1.0 - p)) * std::sqrt(dt);
  const double denom = (params.gamma - params.delta) * spread + params.sigma;
  if (!(denom > 0.0)) {
    throw DomainError("risk-neutral denominator (gamma - delta) sqrt(p(1-p) dt) + sigma is not positive");
  }
  return ((r - params.delta) * spread + p * params.sigma) / denom;
}

/// Risk-neutral probability; throws ArbitrageError when it leaves [0, 1].
inline double risk_neutral_prob(const ModelParams& params, double r, double dt) {
  const double q = risk_neutral_formula(params, r, dt);
  if (!(q >= 0.0 && q <= 1.0)) {
    throw ArbitrageError("risk-neutral probability " + std::to_string(q) +
                         " outside [0, 1]: rate lies outside the one-step no-arbitrage band");
  }
  return q;
}

/// Market price of risk (gamma - r) / sigma; defined only for gamma == delta.
inline double market_price_of_risk(const ModelParams& params, double r) {
  if (params.gamma != params.delta) {
    throw DomainError("market price of risk requires gamma == delta");
  }
  return (params.gamma - r) / params.sigma;
}

/// Equal-drift form of the risk-neutral probability, Q = p - theta sqrt(p (1 - p)) sqrt(dt).
/// Algebraically identical to risk_neutral_formula when gamma == delta.
inline double risk_neutral_prob_equal_drifts(double p, double theta, double dt) {
  return p - theta * std::sqrt(p * (1.0 - p)) * std::sqrt(dt);
}

/// Stock position that makes the one-step portfolio riskless:
///   Delta = (f_u - f_d) / (s ((gamma - delta) dt + sigma sqrt(dt) / sqrt(p (1 - p)))).
/// The denominator is u - d for the asymptotic factors.
inline double delta_hedge(double s, double f_u, double f_d, const ModelParams& params, double dt) {
  if (!(s > 0.0)) throw DomainError("spot must be positive");
  const double p = p_up(params, dt);
  const double spread = (params.gamma - params.delta) * dt +
                        params.sigma * std::sqrt(dt) / std::sqrt(p * (1.0 - p));
  if (spread == 0.0 || !std::isfinite(spread)) {
    throw DomainError("degenerate hedge: up and down moves coincide");
  }
  return (f_u - f_d) / (s * spread);
}

/// European value by backward induction over the lattice, discounting e^{-r dt} per step.
inline double price_european(const Lattice& lattice, const ModelParams& params,
                             const Payoff& payoff) {
  const double q = risk_neutral_prob(params, lattice.rate, lattice.dt);
  const double disc = std::exp(-lattice.rate * lattice.dt);
  const double up = disc * q;
  const double down = disc * (1.0 - q);
  const int n = lattice.n;

  std::vector<double> values(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) values[static_cast<std::size_t>(i)] = payoff(lattice.node(n, i));

  for (int k = n - 1; k >= 0; --k) {
    for (int i = 0; i <= k; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      values[idx] = up * values[idx + 1] + down * values[idx];
    }
  }
  return values.front();
}

/// Convenience: build the lattice for maturity t with n steps and price.
inline double price_european(double s0, const ModelParams& params, double r, double t, int n,
                             const Payoff& payoff, FactorForm form = FactorForm::exact) {
  if (!(t > 0.0)) throw DomainError("maturity must be positive");
  const double dt = t / n;
  return price_european(make_lattice(s0, params, n, dt, r, form), params, payoff);
}

struct DiscontinuityReport {
  double f0_interior = 0.0;  // value for any p in (0, 1)
  double f0_at_p = 0.0;      // value at the requested p, endpoints included
  double gap_at_0 = 0.0;     // f0(0) - lim_{p -> 0+} f0(p)
  double gap_at_1 = 0.0;     // f0(1) - lim_{p -> 1-} f0(p)
};

/// One-step tree with u = e^{sigma sqrt(t)}, d = 1/u: the replication value does
/// not depend on p inside (0, 1) but jumps when p hits 0 or 1.
inline DiscontinuityReport discontinuity_report(double s0, double r, double sigma, double t,
                                                const Payoff& payoff, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0, 1]");
  if (!(sigma > 0.0) || !(t > 0.0)) throw DomainError("sigma and t must be positive");
  const double u = std::exp(sigma * std::sqrt(t));
  const double d = 1.0 / u;
  const double q = (std::exp(r * t) - d) / (u - d);
  if (!(q > 0.0 && q < 1.0)) {
    throw ArbitrageError("replicating probability " + std::to_string(q) + " outside (0, 1)");
  }
  const double disc = std::exp(-r * t);
  const double f_u = payoff(s0 * u);
  const double f_d = payoff(s0 * d);

  DiscontinuityReport report;
  report.f0_interior = disc * (q * f_u + (1.0 - q) * f_d);
  if (p == 0.0) {
    report.f0_at_p = disc * f_d;
  } else if (p == 1.0) {
    report.f0_at_p = disc * f_u;
  } else {
    report.f0_at_p = report.f0_interior;
  }
  report.gap_at_0 = disc * q * (f_d - f_u);
  report.gap_at_1 = disc * (1.0 - q) * (f_u - f_d);
  return report;
}

}  // namespace mpbin
