#pragma once

// Inference on the up-move probability from observed returns.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "mpbin/errors.hpp"

namespace mpbin {

struct UpDownCounts {
  long long ups = 0;
  long long total = 0;

  double p_hat() const {
    if (total < 1) throw DomainError("proportion needs at least one observation");
    return static_cast<double>(ups) / static_cast<double>(total);
  }
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

inline void check_counts(const UpDownCounts& c) {
  if (c.total < 1 || c.ups < 0 || c.ups > c.total) {
    throw DomainError("counts must satisfy 0 <= ups <= total, total >= 1");
  }
}

/// Strictly positive returns count as up; zero is not up.
inline UpDownCounts up_proportion(std::span<const double> returns) {
  if (returns.empty()) throw DomainError("no returns to count");
  UpDownCounts c;
  c.total = static_cast<long long>(returns.size());
  c.ups = std::count_if(returns.begin(), returns.end(), [](double r) { return r > 0.0; });
  return c;
}

/// Wilson score interval at the given two-sided confidence level.
inline Interval proportion_ci(const UpDownCounts& counts, double level = 0.95) {
  check_counts(counts);
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal_distribution<double>(),
                                         1.0 - 0.5 * (1.0 - level));
  const double n = static_cast<double>(counts.total);
  const double p = counts.p_hat();
  const double z2n = z * z / n;
  const double center = (p + 0.5 * z2n) / (1.0 + z2n);
  const double half = z / (1.0 + z2n) * std::sqrt(p * (1.0 - p) / n + 0.25 * z2n / n);
  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (counts.ups == 0) ci.lower = 0.0;
  if (counts.ups == counts.total) ci.upper = 1.0;
  return ci;
}

/// Two-sided exact binomial p-value: total probability of outcomes no more
/// likely than the observed one (relative slack 1e-7 on the comparison).
inline double exact_binomial_test(const UpDownCounts& counts, double p0) {
  check_counts(counts);
  if (!(p0 > 0.0 && p0 < 1.0)) throw DomainError("p0 must lie in (0, 1)");
  const boost::math::binomial_distribution<double> law(static_cast<double>(counts.total), p0);
  const double observed = boost::math::pdf(law, static_cast<double>(counts.ups));
  const double threshold = observed * (1.0 + 1e-7);
  double total = 0.0;
  for (long long k = 0; k <= counts.total; ++k) {
    const double mass = boost::math::pdf(law, static_cast<double>(k));
    if (mass <= threshold) total += mass;
  }
  return std::clamp(total, 0.0, 1.0);
}

/// Upper tail P(X > x) of the chi-square law with df degrees of freedom.
inline double chi_square_sf(double x, double df) {
  if (!(df > 0.0)) throw DomainError("degrees of freedom must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

struct HomogeneityTest {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Pearson chi-square test (no continuity correction) that all groups share one
/// up-probability, on the k x 2 table of up/down counts.
inline HomogeneityTest homogeneity_test(std::span<const UpDownCounts> groups) {
  if (groups.size() < 2) throw DomainError("homogeneity test needs at least two groups");
  long long ups = 0, total = 0;
  for (const UpDownCounts& g : groups) {
    check_counts(g);
    ups += g.ups;
    total += g.total;
  }
  const double pooled = static_cast<double>(ups) / static_cast<double>(total);
  if (pooled <= 0.0 || pooled >= 1.0) {
    throw DomainError("pooled proportion is 0 or 1: expected counts vanish");
  }
  HomogeneityTest out;
  for (const UpDownCounts& g : groups) {
    const double n = static_cast<double>(g.total);
    const double up_dev = static_cast<double>(g.ups) - n * pooled;
    const double down_dev = static_cast<double>(g.total - g.ups) - n * (1.0 - pooled);
    out.statistic += up_dev * up_dev / (n * pooled) + down_dev * down_dev / (n * (1.0 - pooled));
  }
  out.df = static_cast<int>(groups.size()) - 1;
  out.p_value = chi_square_sf(out.statistic, out.df);
  return out;
}

struct DatedValue {
  std::chrono::year_month_day date;
  double value = 0.0;
};

struct GroupEstimate {
  int year = 0;
  UpDownCounts counts;
  double p_hat = 0.0;
  Interval ci;
};

/// Per-calendar-year counts, estimates and Wilson intervals, ordered by year.
inline std::vector<GroupEstimate> grouped_estimates(std::span<const DatedValue> returns,
                                                    double level = 0.95) {
  std::map<int, UpDownCounts> by_year;
  for (const DatedValue& row : returns) {
    UpDownCounts& c = by_year[static_cast<int>(row.date.year())];
    ++c.total;
    if (row.value > 0.0) ++c.ups;
  }
  std::vector<GroupEstimate> out;
  out.reserve(by_year.size());
  for (const auto& [year, counts] : by_year) {
    out.push_back({year, counts, counts.p_hat(), proportion_ci(counts, level)});
  }
  return out;
}

/// CSV with columns year,ups,total,p_hat,ci_low,ci_high.
inline void write_group_csv(std::ostream& os, std::span<const GroupEstimate> rows, int precision = 6) {
  const auto flags = os.flags();
  const auto old_precision = os.precision(precision);
  os << "year,ups,total,p_hat,ci_low,ci_high\n";
  for (const GroupEstimate& row : rows) {
    os << row.year << ',' << row.counts.ups << ',' << row.counts.total << ',' << row.p_hat << ','
       << row.ci.lower << ',' << row.ci.upper << '\n';
  }
  os.precision(old_precision);
  os.flags(flags);
}

}  // namespace mpbin
