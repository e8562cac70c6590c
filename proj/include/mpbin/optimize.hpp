#pragma once

// Derivative-free Nelder-Mead minimization over a box.
//
// Each bounded coordinate is searched in an unconstrained variable y:
//   [lo, hi]        x = lo + (hi - lo) * logistic(y)        (linear scale)
//   [lo, hi], lo>0  log x = log lo + log(hi/lo) * logistic(y) (log scale)
//   [lo, +inf)      x = lo + exp(y)
//   (-inf, hi]      x = hi - exp(y)
// so every trial point is feasible. Restarts rebuild the simplex around the
// incumbent with seeded random edge lengths; results are deterministic given
// (start, config).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mpbin/errors.hpp"

namespace mpbin {

struct Bound {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool log_scale = false;
};

struct MinimizeConfig {
  double tolerance = 1e-10;  // simplex value spread, relative to the value at the start
  int max_evaluations = 20000;
  int restarts = 3;
  std::uint64_t seed = 20160520;
  double initial_step = 0.25;  // simplex edge in the transformed space
};

struct MinimizeResult {
  std::vector<double> argmin;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

namespace detail {

inline double logistic(double y) {
  return y >= 0.0 ? 1.0 / (1.0 + std::exp(-y)) : std::exp(y) / (1.0 + std::exp(y));
}

inline double logit(double u) { return std::log(u) - std::log1p(-u); }

class BoxTransform {
 public:
  explicit BoxTransform(std::vector<Bound> bounds) : bounds_(std::move(bounds)) {}

  std::vector<double> to_box(const std::vector<double>& y) const {
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = forward(bounds_[i], y[i]);
    return x;
  }

  std::vector<double> from_box(const std::vector<double>& x) const {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = inverse(bounds_[i], x[i]);
    return y;
  }

 private:
  static double forward(const Bound& b, double y) {
    const bool lo = std::isfinite(b.lower);
    const bool hi = std::isfinite(b.upper);
    if (lo && hi) {
      const double s = logistic(y);
      if (b.log_scale) {
        const double x = std::exp(std::log(b.lower) + (std::log(b.upper) - std::log(b.lower)) * s);
        return std::clamp(x, b.lower, b.upper);
      }
      return std::clamp(b.lower + (b.upper - b.lower) * s, b.lower, b.upper);
    }
    if (lo) return b.lower + std::exp(y);
    if (hi) return b.upper - std::exp(y);
    return y;
  }

  static double inverse(const Bound& b, double x) {
    const bool lo = std::isfinite(b.lower);
    const bool hi = std::isfinite(b.upper);
    if (lo && hi) {
      const double u = b.log_scale
                           ? (std::log(x) - std::log(b.lower)) / (std::log(b.upper) - std::log(b.lower))
                           : (x - b.lower) / (b.upper - b.lower);
      return logit(u);
    }
    if (lo) return std::log(x - b.lower);
    if (hi) return std::log(b.upper - x);
    return x;
  }

  std::vector<Bound> bounds_;
};

}  // namespace detail

/// Minimizes objective over the box, starting from start (strictly inside every finite bound).
/// Throws DomainError for an infeasible start or a non-finite objective at the start.
inline MinimizeResult minimize(const Objective& objective, const std::vector<Bound>& bounds,
                               const std::vector<double>& start, const MinimizeConfig& config = {}) {
  const std::size_t dim = start.size();
  if (dim == 0 || bounds.size() != dim) throw DomainError("start and bounds must have equal, nonzero size");
  if (config.restarts < 0 || config.max_evaluations < 1 || !(config.tolerance > 0.0)) {
    throw DomainError("invalid optimizer configuration");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    const Bound& b = bounds[i];
    if (!(b.lower < b.upper) || (b.log_scale && !(b.lower > 0.0))) {
      throw DomainError("malformed bound for coordinate " + std::to_string(i));
    }
    if (!(start[i] > b.lower && start[i] < b.upper)) {
      throw DomainError("infeasible start: coordinate " + std::to_string(i) + " = " +
                        std::to_string(start[i]) + " is not strictly inside its bounds");
    }
  }

  const detail::BoxTransform box(bounds);
  MinimizeResult result;

  auto eval = [&](const std::vector<double>& y) {
    ++result.evaluations;
    const double f = objective(box.to_box(y));
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  };

  std::vector<double> best_y = box.from_box(start);
  double best_f = eval(best_y);
  if (!std::isfinite(best_f)) throw DomainError("objective is not finite at the start");
  const double spread_tol =
      config.tolerance * std::max(std::abs(best_f), std::numeric_limits<double>::min());

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);

  // One Nelder-Mead run from best_y; returns whether the spread criterion was met.
  auto run = [&](bool randomize) {
    std::vector<std::vector<double>> simplex(dim + 1, best_y);
    std::vector<double> values(dim + 1, best_f);
    for (std::size_t i = 0; i < dim; ++i) {
      double step = config.initial_step;
      if (randomize) step *= jitter(rng) * (rng() % 2 == 0 ? 1.0 : -1.0);
      simplex[i + 1][i] += step;
      values[i + 1] = eval(simplex[i + 1]);
    }

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);
    while (result.evaluations < config.max_evaluations) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
      const std::size_t lo = order.front();
      const std::size_t hi = order.back();
      const std::size_t second = order[dim - 1];
      if (values[lo] < best_f) {
        best_f = values[lo];
        best_y = simplex[lo];
      }

      double diameter = 0.0;
      for (std::size_t k = 1; k <= dim; ++k) {
        for (std::size_t i = 0; i < dim; ++i) {
          diameter = std::max(diameter, std::abs(simplex[order[k]][i] - simplex[lo][i]));
        }
      }
      if (values[hi] - values[lo] <= spread_tol) return true;
      if (diameter < 1e-14) return std::isfinite(values[hi]);  // collapsed simplex

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t k = 0; k < dim; ++k) {
        for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[order[k]][i];
      }
      for (double& c : centroid) c /= static_cast<double>(dim);

      auto along = [&](double coef, std::vector<double>& out) {
        for (std::size_t i = 0; i < dim; ++i) {
          out[i] = centroid[i] + coef * (simplex[hi][i] - centroid[i]);
        }
      };

      along(-1.0, trial);  // reflection
      const double f_reflect = eval(trial);
      if (f_reflect < values[lo]) {
        along(-2.0, trial2);  // expansion
        const double f_expand = eval(trial2);
        if (f_expand < f_reflect) {
          simplex[hi] = trial2;
          values[hi] = f_expand;
        } else {
          simplex[hi] = trial;
          values[hi] = f_reflect;
        }
        continue;
      }
      if (f_reflect < values[second]) {
        simplex[hi] = trial;
        values[hi] = f_reflect;
        continue;
      }
      const bool outside = f_reflect < values[hi];
      along(outside ? -0.5 : 0.5, trial2);  // contraction
      const double f_contract = eval(trial2);
      if (f_contract < (outside ? f_reflect : values[hi])) {
        simplex[hi] = trial2;
        values[hi] = f_contract;
        continue;
      }
      for (std::size_t k = 0; k <= dim; ++k) {  // shrink toward the best vertex
        if (k == lo) continue;
        for (std::size_t i = 0; i < dim; ++i) {
          simplex[k][i] = simplex[lo][i] + 0.5 * (simplex[k][i] - simplex[lo][i]);
        }
        values[k] = eval(simplex[k]);
      }
    }
    for (std::size_t k = 0; k <= dim; ++k) {
      if (values[k] < best_f) {
        best_f = values[k];
        best_y = simplex[k];
      }
    }
    return false;
  };

  result.converged = run(false);
  for (int attempt = 0; attempt < config.restarts && result.evaluations < config.max_evaluations;
       ++attempt) {
    result.converged = run(true);
  }

  result.argmin = box.to_box(best_y);
  result.value = best_f;
  return result;
}

}  // namespace mpbin
