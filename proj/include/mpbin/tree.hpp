#pragma once

// Multi-purpose binomial model: parameterization, one-step factors and
// one-step moments.
//
// One period of length dt moves the price by a gross factor u with
// probability p = g + v*sqrt(dt) and by d otherwise. The branch drifts gamma
// (up) and delta (down) combine into the instantaneous mean
// b = g*gamma + (1 - g)*delta. The branch volatilities
//
//   h_u = sigma * sqrt((1 - p) / p),   h_d = sigma * sqrt(p / (1 - p))
//
// are evaluated at the dt-dependent probability p, which keeps the exact
// (exponential) and asymptotic (first-order) factor forms consistent.

#include <algorithm>
#include <cmath>
#include <string>

#include "mpbin/errors.hpp"

namespace mpbin {

struct ModelParams {
  double gamma = 0.0;  // drift of the up branch, per year
  double delta = 0.0;  // drift of the down branch, per year
  double g = 0.5;      // base up-probability
  double v = 0.0;      // probability slope, per sqrt(year)
  double sigma = 0.2;  // volatility, per sqrt(year)

  /// Instantaneous mean of the limiting geometric Brownian motion.
  double drift() const noexcept { return g * gamma + (1.0 - g) * delta; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct StepFactors {
  double u = 1.0;
  double d = 1.0;
  double p = 0.5;
};

/// Which one-step factor formula a computation uses.
enum class FactorForm { exact, asymptotic };

/// Largest moment order accepted by step_moment / gbm_moment.
inline constexpr int kMaxMomentOrder = 64;

/// Checks the model assumptions for step size dt and returns params unchanged.
/// Throws DomainError naming the violated assumption.
inline ModelParams validate_params(const ModelParams& params, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw DomainError("time step dt must be positive and finite");
  }
  if (!(params.g > 0.0 && params.g < 1.0)) {
    throw DomainError("assumption i violated: g must lie in (0, 1), got " + std::to_string(params.g));
  }
  if (!std::isfinite(params.v)) {
    throw DomainError("assumption i violated: v must be finite");
  }
  if (!(params.sigma > 0.0) || !std::isfinite(params.sigma)) {
    throw DomainError("assumption ii violated: sigma must be positive, got " +
                      std::to_string(params.sigma));
  }
  if (!std::isfinite(params.drift())) {
    throw DomainError("assumption iii violated: g*gamma + (1-g)*delta must be finite");
  }
  const double p = params.g + params.v * std::sqrt(dt);
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("assumption iv violated: p = g + v*sqrt(dt) = " + std::to_string(p) +
                      " is outside (0, 1); dt is too coarse for these parameters");
  }
  return params;
}

/// Up probability g + v*sqrt(dt).
inline double p_up(const ModelParams& params, double dt) {
  validate_params(params, dt);
  return params.g + params.v * std::sqrt(dt);
}

namespace detail {

inline double h_up(double sigma, double p) { return sigma * std::sqrt((1.0 - p) / p); }
inline double h_down(double sigma, double p) { return sigma * std::sqrt(p / (1.0 - p)); }

}  // namespace detail

namespace detail {
// Drift gaps of order dt can overtake the sqrt(dt) spread when dt is coarse.
inline void require_ordered(const StepFactors& f) {
  if (!(f.u > f.d)) {
    throw DomainError("up factor " + std::to_string(f.u) + " does not exceed down factor " +
                      std::to_string(f.d) + "; dt is too coarse for the drift gap");
  }
}
}  // namespace detail

/// Exponential one-step factors:
///   u = exp((gamma - h_u^2/2) dt + h_u sqrt(dt)),
///   d = exp((delta - h_d^2/2) dt - h_d sqrt(dt)).
/// Throws DomainError when u <= d.
inline StepFactors step_factors_exact(const ModelParams& params, double dt) {
  const double p = p_up(params, dt);
  const double hu = detail::h_up(params.sigma, p);
  const double hd = detail::h_down(params.sigma, p);
  const double sdt = std::sqrt(dt);
  const StepFactors f{std::exp((params.gamma - 0.5 * hu * hu) * dt + hu * sdt),
                      std::exp((params.delta - 0.5 * hd * hd) * dt - hd * sdt), p};
  detail::require_ordered(f);
  return f;
}

/// First-order factors u = 1 + gamma dt + h_u sqrt(dt), d = 1 + delta dt - h_d sqrt(dt).
/// Throws DomainError when d <= 0 or u <= d (dt too coarse).
inline StepFactors step_factors_asymptotic(const ModelParams& params, double dt) {
  const double p = p_up(params, dt);
  const double sdt = std::sqrt(dt);
  const StepFactors f{1.0 + params.gamma * dt + detail::h_up(params.sigma, p) * sdt,
                      1.0 + params.delta * dt - detail::h_down(params.sigma, p) * sdt, p};
  if (!(f.d > 0.0)) {
    throw DomainError("asymptotic down factor " + std::to_string(f.d) +
                      " is not positive; dt is too coarse");
  }
  detail::require_ordered(f);
  return f;
}

inline StepFactors step_factors(const ModelParams& params, double dt, FactorForm form) {
  return form == FactorForm::exact ? step_factors_exact(params, dt)
                                   : step_factors_asymptotic(params, dt);
}

// Classical trees as parameter choices.

inline void require_positive_sigma(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
}

/// Cox-Ross-Rubinstein: gamma = delta = r, g = 1/2, v = (r - sigma^2/2) / (2 sigma).
inline ModelParams crr_params(double r, double sigma) {
  require_positive_sigma(sigma);
  return {r, r, 0.5, (r - 0.5 * sigma * sigma) / (2.0 * sigma), sigma};
}

/// Jarrow-Rudd: gamma = delta = r, g = 1/2, v = 0.
inline ModelParams jarrow_rudd_params(double r, double sigma) {
  require_positive_sigma(sigma);
  return {r, r, 0.5, 0.0, sigma};
}

/// Tian: gamma = delta = r, g = 1/2, v = -3 sigma / 4.
///
/// Both branches keep the risk-neutral drift, so the first two moments match
/// for any slope; the slope is then fixed by the third moment. Expanding the
/// Tian factors gives p = 1/2 - (3/4) sigma sqrt(dt) + O(dt).
inline ModelParams tian_params(double r, double sigma) {
  require_positive_sigma(sigma);
  return {r, r, 0.5, -0.75 * sigma, sigma};
}

/// Classical CRR step: u = e^{sigma sqrt(dt)}, d = 1/u, p = (e^{r dt} - d) / (u - d).
inline StepFactors crr_factors(double r, double sigma, double dt) {
  const double u = std::exp(sigma * std::sqrt(dt));
  const double d = 1.0 / u;
  return {u, d, (std::exp(r * dt) - d) / (u - d)};
}

/// Classical Jarrow-Rudd step: exp((r - sigma^2/2) dt +- sigma sqrt(dt)), p = 1/2.
inline StepFactors jarrow_rudd_factors(double r, double sigma, double dt) {
  const double m = (r - 0.5 * sigma * sigma) * dt;
  const double s = sigma * std::sqrt(dt);
  return {std::exp(m + s), std::exp(m - s), 0.5};
}

/// Classical Tian step with V = e^{sigma^2 dt}:
///   u, d = e^{r dt} V (V + 1 +- sqrt(V^2 + 2V - 3)) / 2,  p = (e^{r dt} - d) / (u - d).
inline StepFactors tian_factors(double r, double sigma, double dt) {
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  require_positive_sigma(sigma);
  const double growth = std::exp(r * dt);
  const double V = std::exp(sigma * sigma * dt);
  const double radical = std::sqrt(std::max(0.0, V * V + 2.0 * V - 3.0));
  const double u = 0.5 * growth * V * (V + 1.0 + radical);
  const double d = 0.5 * growth * V * (V + 1.0 - radical);
  return {u, d, (growth - d) / (u - d)};
}

namespace detail {

inline void check_moment_order(int j) {
  if (j < 1 || j > kMaxMomentOrder) {
    throw DomainError("moment order must lie in [1, " + std::to_string(kMaxMomentOrder) +
                      "], got " + std::to_string(j));
  }
}

}  // namespace detail

/// j-th raw moment p u^j + (1-p) d^j of the one-step gross return, asymptotic factors.
inline double step_moment(const ModelParams& params, double dt, int j) {
  detail::check_moment_order(j);
  const StepFactors f = step_factors_asymptotic(params, dt);
  return f.p * std::pow(f.u, j) + (1.0 - f.p) * std::pow(f.d, j);
}

/// j-th raw moment exp(j (b + (j-1) sigma^2 / 2) dt) of the GBM gross return over dt.
inline double gbm_moment(double b, double sigma, double dt, int j) {
  detail::check_moment_order(j);
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  return std::exp(j * (b + 0.5 * (j - 1) * sigma * sigma) * dt);
}

}  // namespace mpbin
