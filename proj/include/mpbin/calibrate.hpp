#pragma once

// Least-squares calibration of tree models to a chain of European calls.
//
// Every quote is priced on its own lattice with n = days to maturity steps of
// length dt (1/252 by default). Free parameters per model:
//   CRR, JR, Tian   sigma
//   MPBin1          sigma, g          (gamma = delta = r, v = 0, so p = g)
//   MPBin2          gamma, g, p, sigma (delta = (r - g gamma)/(1 - g), v = (p - g)/sqrt(dt))

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpbin/errors.hpp"
#include "mpbin/lattice.hpp"
#include "mpbin/optimize.hpp"
#include "mpbin/tree.hpp"

namespace mpbin {

inline constexpr double kTradingDaysPerYear = 252.0;

struct OptionQuote {
  double strike = 0.0;
  int days_to_maturity = 1;
  double market_price = 0.0;

  friend bool operator==(const OptionQuote&, const OptionQuote&) = default;
};

struct ErrorMetrics {
  double aae = 0.0;
  double ape = 0.0;
  double arpe = 0.0;
  double rmse = 0.0;
};

enum class TreeModel { crr, jr, tian, mpbin1, mpbin2 };

inline constexpr std::array<TreeModel, 5> kAllModels = {TreeModel::crr, TreeModel::jr, TreeModel::tian,
                                                        TreeModel::mpbin1, TreeModel::mpbin2};

inline std::string_view model_name(TreeModel model) {
  switch (model) {
    case TreeModel::crr: return "CRR";
    case TreeModel::jr: return "JR";
    case TreeModel::tian: return "Tian";
    case TreeModel::mpbin1: return "MPBin1";
    case TreeModel::mpbin2: return "MPBin2";
  }
  return "?";
}

/// Accepts the display names above case-insensitively, plus "jarrow-rudd".
inline TreeModel parse_model(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "crr") return TreeModel::crr;
  if (lower == "jr" || lower == "jarrow-rudd") return TreeModel::jr;
  if (lower == "tian") return TreeModel::tian;
  if (lower == "mpbin1" || lower == "mp-bin1") return TreeModel::mpbin1;
  if (lower == "mpbin2" || lower == "mp-bin2") return TreeModel::mpbin2;
  throw DomainError("unknown model '" + std::string(text) + "'");
}

struct CalibrationResult {
  TreeModel model = TreeModel::crr;
  ModelParams params;
  ErrorMetrics metrics;
  int objective_evaluations = 0;
  bool converged = false;
};

struct CalibrationConfig {
  double dt = 1.0 / kTradingDaysPerYear;
  MinimizeConfig optimizer;
};

/// AAE, APE (AAE over the mean market price), ARPE and RMSE.
inline ErrorMetrics error_metrics(std::span<const double> model_prices,
                                  std::span<const double> market_prices) {
  if (model_prices.size() != market_prices.size()) {
    throw DomainError("model and market price sequences differ in length");
  }
  if (market_prices.empty()) throw DomainError("error metrics need at least one price");
  const double n = static_cast<double>(market_prices.size());
  double abs_sum = 0.0, rel_sum = 0.0, sq_sum = 0.0, market_sum = 0.0;
  for (std::size_t j = 0; j < market_prices.size(); ++j) {
    const double market = market_prices[j];
    if (!(market > 0.0)) {
      throw DomainError("market price at index " + std::to_string(j) + " is not positive");
    }
    const double diff = std::abs(market - model_prices[j]);
    abs_sum += diff;
    rel_sum += diff / market;
    sq_sum += diff * diff;
    market_sum += market;
  }
  ErrorMetrics m;
  m.aae = abs_sum / n;
  m.ape = m.aae / (market_sum / n);
  m.arpe = rel_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  return m;
}

/// Price of a single call quote: n = days_to_maturity steps of length dt.
inline double quote_price(const ModelParams& params, const OptionQuote& quote, double s0, double r,
                          double dt = 1.0 / kTradingDaysPerYear) {
  if (quote.days_to_maturity < 1) throw DomainError("days to maturity must be >= 1");
  const Lattice lattice = make_lattice(s0, params, quote.days_to_maturity, dt, r);
  return price_european(lattice, params, Payoff::call(quote.strike));
}

/// Model prices for every quote. A failure names the offending quote index.
inline std::vector<double> model_prices(const ModelParams& params, std::span<const OptionQuote> quotes,
                                        double s0, double r, double dt = 1.0 / kTradingDaysPerYear) {
  if (quotes.empty()) throw DomainError("no quotes to price");
  std::vector<double> prices;
  prices.reserve(quotes.size());
  for (std::size_t j = 0; j < quotes.size(); ++j) {
    try {
      prices.push_back(quote_price(params, quotes[j], s0, r, dt));
    } catch (const ArbitrageError& e) {
      throw ArbitrageError("quote " + std::to_string(j) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("quote " + std::to_string(j) + ": " + e.what());
    }
  }
  return prices;
}

namespace calibration {

inline constexpr double kSigmaMin = 1e-4;
inline constexpr double kSigmaMax = 5.0;
inline constexpr double kProbMin = 1e-4;
inline constexpr double kProbMax = 1.0 - 1e-4;
inline constexpr double kGammaMin = 1e-4;
inline constexpr double kGammaMax = 5.0;

inline std::vector<Bound> bounds(TreeModel model) {
  const Bound sigma{kSigmaMin, kSigmaMax, true};
  const Bound prob{kProbMin, kProbMax, false};
  const Bound gamma{kGammaMin, kGammaMax, false};
  switch (model) {
    case TreeModel::crr:
    case TreeModel::jr:
    case TreeModel::tian: return {sigma};
    case TreeModel::mpbin1: return {sigma, prob};
    case TreeModel::mpbin2: return {gamma, prob, prob, sigma};
  }
  return {};
}

/// Free-parameter vector to full model parameters.
inline ModelParams to_params(TreeModel model, std::span<const double> x, double r, double dt) {
  switch (model) {
    case TreeModel::crr: return crr_params(r, x[0]);
    case TreeModel::jr: return jarrow_rudd_params(r, x[0]);
    case TreeModel::tian: return tian_params(r, x[0]);
    case TreeModel::mpbin1: return {r, r, x[1], 0.0, x[0]};
    case TreeModel::mpbin2: {
      const double gamma = x[0], g = x[1], p = x[2], sigma = x[3];
      // r + g (r - gamma)/(1 - g) == (r - g gamma)/(1 - g), and is exactly r when gamma == r.
      const double delta = r + g * (r - gamma) / (1.0 - g);
      return {gamma, delta, g, (p - g) / std::sqrt(dt), sigma};
    }
  }
  return {};
}

/// Best representation of params in the model's free-parameter space.
/// Equal-drift parameters map onto MPBin1/MPBin2 reproducing the same tree at dt.
inline std::vector<double> to_vector(TreeModel model, const ModelParams& params, double dt) {
  switch (model) {
    case TreeModel::crr:
    case TreeModel::jr:
    case TreeModel::tian: return {params.sigma};
    case TreeModel::mpbin1: return {params.sigma, p_up(params, dt)};
    case TreeModel::mpbin2: {
      const double p = p_up(params, dt);
      const double g = params.gamma == params.delta ? p : params.g;
      return {params.gamma, g, p, params.sigma};
    }
  }
  return {};
}

inline bool inside(const std::vector<Bound>& box, std::span<const double> x, bool strict) {
  for (std::size_t i = 0; i < box.size(); ++i) {
    const bool ok = strict ? (x[i] > box[i].lower && x[i] < box[i].upper)
                           : (x[i] >= box[i].lower && x[i] <= box[i].upper);
    if (!ok) return false;
  }
  return true;
}

inline double sum_squares(const ModelParams& params, std::span<const OptionQuote> quotes, double s0,
                          double r, double dt) {
  double total = 0.0;
  try {
    for (const OptionQuote& q : quotes) {
      const double diff = quote_price(params, q, s0, r, dt) - q.market_price;
      total += diff * diff;
    }
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::infinity();
  }
  return total;
}

/// Volatility matching the quote nearest the money under CRR, by bisection.
inline double invert_atm_sigma(std::span<const OptionQuote> quotes, double s0, double r, double dt) {
  const auto atm = std::min_element(quotes.begin(), quotes.end(), [&](const auto& a, const auto& b) {
    const double da = std::abs(a.strike - s0), db = std::abs(b.strike - s0);
    return da != db ? da < db : a.days_to_maturity < b.days_to_maturity;
  });
  auto price_at = [&](double sigma) -> std::optional<double> {
    try {
      return quote_price(crr_params(r, sigma), *atm, s0, r, dt);
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
  };
  double lo = 0.01;
  while (lo < kSigmaMax && !price_at(lo)) lo *= 1.5;
  double hi = kSigmaMax;
  const auto p_lo = price_at(lo);
  const auto p_hi = price_at(hi);
  if (!p_lo || !p_hi || atm->market_price <= *p_lo || atm->market_price >= *p_hi) return 0.2;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto pm = price_at(mid);
    if (!pm) return 0.2;
    (*pm < atm->market_price ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace calibration

/// Least-squares fit of one model to the chain.
///
/// The search starts from the best of a neutral start (ATM-implied sigma,
/// g = p = 1/2, gamma = r) and the supplied seeds. A seed whose exact
/// objective beats the search result is returned as-is, so a model seeded
/// with a nested model's optimum never reports a larger RMSE than that
/// optimum. Throws DomainError when a seed lies outside the box.
inline CalibrationResult calibrate(TreeModel model, std::span<const OptionQuote> quotes, double s0,
                                   double r, const CalibrationConfig& config = {},
                                   std::span<const ModelParams> seeds = {}) {
  if (quotes.empty()) throw DomainError("calibration needs at least one quote");
  if (!(s0 > 0.0)) throw DomainError("spot price must be positive");
  const double dt = config.dt;
  const std::vector<Bound> box = calibration::bounds(model);

  auto objective_of = [&](const ModelParams& params) {
    return calibration::sum_squares(params, quotes, s0, r, dt);
  };
  auto objective = [&](const std::vector<double>& x) {
    ModelParams params;
    try {
      params = calibration::to_params(model, x, r, dt);
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::infinity();
    }
    return objective_of(params);
  };

  auto nudge = [&](std::vector<double> x) {
    for (std::size_t i = 0; i < box.size(); ++i) {
      const double margin = 1e-9 * (box[i].upper - box[i].lower);
      x[i] = std::clamp(x[i], box[i].lower + margin, box[i].upper - margin);
    }
    return x;
  };

  std::vector<std::vector<double>> starts;
  {
    const double sigma0 = calibration::invert_atm_sigma(quotes, s0, r, dt);
    std::vector<double> neutral;
    switch (model) {
      case TreeModel::crr:
      case TreeModel::jr:
      case TreeModel::tian: neutral = {sigma0}; break;
      case TreeModel::mpbin1: neutral = {sigma0, 0.5}; break;
      case TreeModel::mpbin2: neutral = {r, 0.5, 0.5, sigma0}; break;
    }
    starts.push_back(nudge(neutral));
  }

  struct ExactSeed {
    ModelParams params;
    double value;
  };
  std::vector<ExactSeed> exact_seeds;
  int evaluations = 0;
  for (const ModelParams& seed : seeds) {
    const std::vector<double> x = calibration::to_vector(model, seed, dt);
    if (!calibration::inside(box, x, false)) {
      throw DomainError(std::string("infeasible start: seed lies outside the ") +
                        std::string(model_name(model)) + " bounds");
    }
    const ModelParams exact = calibration::to_params(model, x, r, dt);
    exact_seeds.push_back({exact, objective_of(exact)});
    ++evaluations;
    starts.push_back(nudge(x));
  }

  // Run the simplex from the most promising start.
  const std::vector<double>* best_start = nullptr;
  double best_start_value = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    const double f = objective(s);
    ++evaluations;
    if (!best_start || f < best_start_value) {
      best_start = &s;
      best_start_value = f;
    }
  }
  if (!std::isfinite(best_start_value)) {
    throw DomainError("infeasible start: objective is not finite at any starting point");
  }

  const MinimizeResult found = minimize(objective, box, *best_start, config.optimizer);
  evaluations += found.evaluations;

  CalibrationResult result;
  result.model = model;
  result.params = calibration::to_params(model, found.argmin, r, dt);
  result.converged = found.converged;
  double best_value = found.value;
  for (const ExactSeed& seed : exact_seeds) {
    if (seed.value <= best_value) {
      best_value = seed.value;
      result.params = seed.params;
    }
  }
  result.objective_evaluations = evaluations;

  std::vector<double> market;
  market.reserve(quotes.size());
  for (const OptionQuote& q : quotes) market.push_back(q.market_price);
  result.metrics = error_metrics(model_prices(result.params, quotes, s0, r, dt), market);
  return result;
}

/// Calibrates the requested models, richer models seeded with the optima of the
/// models they contain: MPBin1 with CRR/JR/Tian, MPBin2 with all of those and MPBin1.
/// Results come back in the order requested.
inline std::vector<CalibrationResult> calibrate_nested(std::span<const TreeModel> models,
                                                       std::span<const OptionQuote> quotes, double s0,
                                                       double r, const CalibrationConfig& config = {}) {
  auto rank = [](TreeModel m) {
    return m == TreeModel::mpbin2 ? 2 : m == TreeModel::mpbin1 ? 1 : 0;
  };
  std::vector<TreeModel> order(models.begin(), models.end());
  std::stable_sort(order.begin(), order.end(), [&](TreeModel a, TreeModel b) { return rank(a) < rank(b); });

  std::vector<CalibrationResult> done;
  for (const TreeModel model : order) {
    const std::vector<Bound> box = calibration::bounds(model);
    std::vector<ModelParams> seeds;
    for (const CalibrationResult& prior : done) {
      if (rank(prior.model) >= rank(model)) continue;
      const std::vector<double> x = calibration::to_vector(model, prior.params, config.dt);
      if (calibration::inside(box, x, false)) seeds.push_back(prior.params);
    }
    done.push_back(calibrate(model, quotes, s0, r, config, seeds));
  }

  std::vector<CalibrationResult> out;
  for (const TreeModel model : models) {
    out.push_back(*std::find_if(done.begin(), done.end(),
                                [&](const CalibrationResult& c) { return c.model == model; }));
  }
  return out;
}

/// One CSV row per model with its parameters and error metrics.
inline void write_calibration_csv(std::ostream& os, std::span<const CalibrationResult> results,
                                  double dt = 1.0 / kTradingDaysPerYear, int precision = 6) {
  const auto flags = os.flags();
  const auto old_precision = os.precision(precision);
  os << "model,sigma,p_dt,gamma,delta,g,v,aae,ape,arpe,rmse,evaluations,converged\n";
  for (const CalibrationResult& c : results) {
    const ModelParams& p = c.params;
    os << model_name(c.model) << ',' << p.sigma << ',' << p_up(p, dt) << ',' << p.gamma << ','
       << p.delta << ',' << p.g << ',' << p.v << ',' << c.metrics.aae << ',' << c.metrics.ape << ','
       << c.metrics.arpe << ',' << c.metrics.rmse << ',' << c.objective_evaluations << ','
       << (c.converged ? "true" : "false") << '\n';
  }
  os.precision(old_precision);
  os.flags(flags);
}

}  // namespace mpbin
