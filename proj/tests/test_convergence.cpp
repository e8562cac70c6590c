#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "mpbin/convergence.hpp"

using namespace mpbin;
using Catch::Approx;

TEST_CASE("one-step terminal law", "[convergence]") {
  const ModelParams params{0.05, 0.05, 0.5, 0.0, 0.2};
  const DiscreteCdf cdf = terminal_distribution(100, params, 1, 0.01, Measure::physical);
  const StepFactors f = step_factors_exact(params, 0.01);
  REQUIRE(cdf.size() == 2);
  CHECK(cdf.support[0] == Approx(100 * f.d).epsilon(1e-15));
  CHECK(cdf.support[1] == Approx(100 * f.u).epsilon(1e-15));
  CHECK(cdf.mass(0) == Approx(0.5).epsilon(1e-15));
  CHECK(cdf.mass(1) == Approx(0.5).epsilon(1e-15));
  CHECK(cdf(100 * f.d - 1e-9) == 0.0);
  CHECK(cdf(100.0) == Approx(0.5));
  CHECK(cdf(1e9) == Approx(1.0));
}

TEST_CASE("two-step law matches path enumeration", "[convergence]") {
  const ModelParams params{0.05, 0.05, 0.6, 0.0, 0.2};
  const double dt = 0.01;
  const StepFactors f = step_factors_exact(params, dt);
  // Enumerate UU, UD, DU, DD and merge by up-count.
  double mass[3] = {0, 0, 0};
  for (int path = 0; path < 4; ++path) {
    const int ups = (path & 1) + ((path >> 1) & 1);
    mass[ups] += (ups == 2 ? 0.36 : ups == 1 ? 0.24 : 0.16);
  }
  const DiscreteCdf cdf = terminal_distribution(100, params, 2, dt, Measure::physical);
  for (int i = 0; i < 3; ++i) CHECK(cdf.mass(i) == Approx(mass[i]).epsilon(1e-14));
  CHECK(cdf.mass(0) == Approx(0.16).epsilon(1e-14));
  CHECK(cdf.mass(1) == Approx(0.48).epsilon(1e-14));
  CHECK(cdf.mass(2) == Approx(0.36).epsilon(1e-14));
  CHECK(cdf.support[0] == Approx(100 * f.d * f.d).epsilon(1e-14));
  CHECK(cdf.support[1] == Approx(100 * f.u * f.d).epsilon(1e-14));
  CHECK(cdf.support[2] == Approx(100 * f.u * f.u).epsilon(1e-14));
}

TEST_CASE("terminal weights sum to one and stay non-negative", "[convergence][property]") {
  for (const int n : {1, 7, 64, 1000, 4096}) {
    for (const double g : {0.1, 0.5, 0.9}) {
      const DiscreteCdf cdf = terminal_distribution(1.0, {0.05, 0.05, g, 0.0, 0.2}, n, 1.0 / n, Measure::physical);
      INFO("n = " << n << ", g = " << g);
      CHECK(std::abs(cdf.cum.back() - 1.0) <= 1e-12);
      for (std::size_t i = 0; i < cdf.size(); ++i) CHECK(cdf.mass(i) >= 0.0);
      for (std::size_t i = 1; i < cdf.size(); ++i) REQUIRE(cdf.support[i] > cdf.support[i - 1]);
    }
  }
}

TEST_CASE("risk-neutral terminal law needs a rate", "[convergence]") {
  const ModelParams params{0.08, 0.08, 0.6, 0.0, 0.2};
  CHECK_THROWS_AS(terminal_distribution(100, params, 10, 0.01, Measure::risk_neutral), DomainError);
  const DiscreteCdf cdf = terminal_distribution(100, params, 1, 0.01, Measure::risk_neutral, 0.02);
  CHECK(cdf.mass(1) == Approx(risk_neutral_prob(params, 0.02, 0.01)).epsilon(1e-14));
  CHECK_THROWS_AS(terminal_distribution(100, params, 0, 0.01, Measure::physical), DomainError);
}

TEST_CASE("lognormal_cdf", "[convergence]") {
  const double s0 = 100, b = 0.05, sigma = 0.2, t = 1.0;
  const double median = s0 * std::exp((b - 0.5 * sigma * sigma) * t);
  CHECK(lognormal_cdf(median, s0, b, sigma, t) == Approx(0.5).epsilon(1e-15));
  CHECK(lognormal_cdf(0.0, s0, b, sigma, t) == 0.0);
  CHECK(lognormal_cdf(std::numeric_limits<double>::infinity(), s0, b, sigma, t) == 1.0);
  CHECK(lognormal_cdf(1e12, s0, b, sigma, t) == Approx(1.0));
  // Phi(-0.15) to 17 digits.
  CHECK(lognormal_cdf(100, s0, b, sigma, t) == Approx(0.44038230762975748).epsilon(1e-14));

  for (const double a : {0.01, 0.3, 1.7}) {
    CHECK(lognormal_cdf(median * std::exp(a), s0, b, sigma, t) + lognormal_cdf(median * std::exp(-a), s0, b, sigma, t) ==
          Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("lognormal_cdf is non-decreasing", "[convergence][property]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double x = 300 * unit(rng), y = x + 10 * unit(rng);
    CHECK(lognormal_cdf(x, 100, 0.05, 0.2, 1.0) <= lognormal_cdf(y, 100, 0.05, 0.2, 1.0));
  }
}

TEST_CASE("kolmogorov_distance single atom", "[convergence]") {
  const DiscreteCdf atom{{100.0}, {1.0}};
  const auto F = [](double x) { return lognormal_cdf(x, 100, 0.05, 0.2, 1.0); };
  const double fm = F(100.0);
  CHECK(kolmogorov_distance(atom, F) == Approx(std::max(fm, 1 - fm)).epsilon(1e-15));
}

TEST_CASE("kolmogorov_distance is the half-jump against its own midpoint interpolation", "[convergence]") {
  // F passes through the middle of each jump, so the distance is half the largest jump.
  const DiscreteCdf cdf{{1.0, 2.0, 3.0}, {0.2, 0.7, 1.0}};
  const auto F = [&](double x) {
    if (x <= 1.0) return 0.1;
    if (x <= 2.0) return 0.1 + (x - 1.0) * (0.45 - 0.1);
    if (x <= 3.0) return 0.45 + (x - 2.0) * (0.85 - 0.45);
    return 0.85;
  };
  CHECK(kolmogorov_distance(cdf, F) == Approx(0.25).epsilon(1e-15));
}

TEST_CASE("n = 2 distance matches a dense grid scan", "[convergence]") {
  const ModelParams params{0.05, 0.05, 0.5, 0.0, 0.2};
  const double t = 1.0;
  const DiscreteCdf tree = terminal_distribution(1.0, params, 2, t / 2, Measure::physical);
  const auto F = [&](double x) { return lognormal_cdf(x, 1.0, 0.05, 0.2, t); };
  const double distance = kolmogorov_distance(tree, F);

  // The grid holds every atom and the points just left of it, so sup is attained on it.
  double scan = 0.0;
  const int points = 1'000'000;
  const double lo = 0.2, hi = 3.0;
  for (int k = 0; k <= points; ++k) {
    const double x = lo + (hi - lo) * k / points;
    scan = std::max(scan, std::abs(tree(x) - F(x)));
  }
  for (const double atom : tree.support) {
    scan = std::max(scan, std::abs(tree(atom) - F(atom)));
    const double left = std::nextafter(atom, 0.0);
    scan = std::max(scan, std::abs(tree(left) - F(left)));
  }
  CHECK(distance == Approx(scan).margin(1e-9));
  CHECK(distance > 0.0);
  CHECK(distance <= 1.0);
}

TEST_CASE("distance is unchanged by rescaling prices", "[convergence][property]") {
  // Measuring the stochastic factor alone or the full price gives the same distance.
  const ModelParams params{0.05, 0.05, 0.3, 0.0, 0.2};
  const int n = 64;
  const double t = 1.0, b = params.drift(), sigma = params.sigma;
  const DiscreteCdf price = terminal_distribution(100.0, params, n, t / n, Measure::physical);
  const double shift = std::exp((b - 0.5 * sigma * sigma) * t);
  DiscreteCdf factor = price;
  for (double& x : factor.support) x /= 100.0 * shift;
  const double d_price = kolmogorov_distance(price, [&](double x) { return lognormal_cdf(x, 100, b, sigma, t); });
  const double d_factor = kolmogorov_distance(
      factor, [&](double x) { return normal_cdf(std::log(x) / (sigma * std::sqrt(t))); });
  CHECK(d_price == Approx(d_factor).margin(1e-12));
}

TEST_CASE("rate_constant", "[convergence]") {
  CHECK(rate_constant(0.5) == Approx(1.0).epsilon(1e-15));
  CHECK(rate_constant(0.9) == Approx(0.82 / 0.3).epsilon(1e-14));
  CHECK(rate_constant(0.9) == Approx(2.7333).margin(5e-5));
  for (const double p : {0.01, 0.2, 0.37}) CHECK(rate_constant(p) == Approx(rate_constant(1 - p)).epsilon(1e-14));
  CHECK_THROWS_AS(rate_constant(0.0), DomainError);
  CHECK_THROWS_AS(rate_constant(1.0), DomainError);
}

TEST_CASE("fit_slope recovers an exact power law", "[convergence]") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y{1.0, 0.5, 0.0, -0.5};
  CHECK(fit_slope(x, y) == Approx(-0.5).epsilon(1e-15));
  CHECK_THROWS_AS(fit_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), DomainError);
}

TEST_CASE("rate experiment shows the inverse square-root law", "[convergence]") {
  std::vector<int> ns;
  for (int n = 16; n <= 2048; n *= 2) ns.push_back(n);
  const RateExperiment ex = rate_experiment({0.05, 0.05, 0.5, 0.0, 0.2}, 1.0, ns);
  CHECK(ex.slope >= -0.6);
  CHECK(ex.slope <= -0.4);

  double lo = 1e300, hi = 0.0;
  for (std::size_t i = ex.rows.size() / 2; i < ex.rows.size(); ++i) {
    CHECK(ex.rows[i].scaled == Approx(ex.rows[i].distance * std::sqrt(ex.rows[i].n)));
    lo = std::min(lo, ex.rows[i].scaled);
    hi = std::max(hi, ex.rows[i].scaled);
  }
  CHECK(hi / lo < 1.5);

  std::ostringstream csv;
  write_rate_csv(csv, ex);
  CHECK(csv.str().rfind("n,distance,scaled_distance\n16,", 0) == 0);
  CHECK(csv.str().find("# slope=") != std::string::npos);

  CHECK_THROWS_AS(rate_experiment({0.05, 0.05, 0.5, 0.0, 0.2}, 1.0, std::vector<int>{32, 16}), DomainError);
}

TEST_CASE("distance grows with the rate constant across p", "[convergence]") {
  const std::vector<int> ns{2048};
  const double d5 = rate_experiment({0.05, 0.05, 0.5, 0.0, 0.2}, 1.0, ns).rows[0].distance;
  const double d9 = rate_experiment({0.05, 0.05, 0.9, 0.0, 0.2}, 1.0, ns).rows[0].distance;
  CHECK(d9 / d5 == Approx(rate_constant(0.9) / rate_constant(0.5)).epsilon(0.25));
}
