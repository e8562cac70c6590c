#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "mpbin/lattice.hpp"
#include "mpbin/normal.hpp"

using namespace mpbin;
using Catch::Approx;

TEST_CASE("lattice recombines into k + 1 distinct nodes", "[lattice]") {
  const Lattice lat = make_lattice(100.0, {0.05, 0.02, 0.4, 0.1, 0.3}, 50, 0.01, 0.03);
  for (int k = 0; k <= lat.n; ++k) {
    std::set<double> nodes;
    for (int i = 0; i <= k; ++i) nodes.insert(lat.node(k, i));
    CHECK(nodes.size() == static_cast<std::size_t>(k + 1));
  }
  CHECK(lat.maturity() == Approx(0.5));
  CHECK_THROWS_AS(make_lattice(0.0, {0.05, 0.05, 0.5, 0.0, 0.2}, 10, 0.01, 0.0), DomainError);
  CHECK_THROWS_AS(make_lattice(100.0, {0.05, 0.05, 0.5, 0.0, 0.2}, 0, 0.01, 0.0), DomainError);
}

TEST_CASE("payoffs", "[lattice]") {
  CHECK(Payoff::call(100)(120) == 20);
  CHECK(Payoff::call(100)(80) == 0);
  CHECK(Payoff::put(100)(80) == 20);
  CHECK(Payoff::put(100)(120) == 0);
  CHECK(Payoff::custom([](double s) { return s * s; })(3.0) == 9.0);
  CHECK_THROWS_AS(Payoff::call(-1.0), DomainError);
}

TEST_CASE("risk_neutral_prob", "[lattice]") {
  const ModelParams same{0.03, 0.03, 0.6, 0.0, 0.2};
  CHECK(risk_neutral_prob(same, 0.03, 0.01) == Approx(0.6).epsilon(1e-15));

  const ModelParams p{0.08, 0.08, 0.6, 0.0, 0.2};
  const double q = risk_neutral_prob(p, 0.02, 0.01);
  CHECK(q == Approx(0.6 - 0.3 * std::sqrt(0.24) * 0.1).epsilon(1e-14));
  CHECK(q == Approx(0.58530).margin(5e-6));
  CHECK(q == Approx(risk_neutral_prob_equal_drifts(0.6, market_price_of_risk(p, 0.02), 0.01)).epsilon(1e-14));

  // A huge rate pushes Q past 1.
  CHECK_THROWS_AS(risk_neutral_prob({0.0, 0.0, 0.5, 0.0, 0.2}, 50.0, 0.01), ArbitrageError);
}

TEST_CASE("equal-drift special case agrees with the general formula", "[lattice][property]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double gamma = -0.2 + 0.5 * unit(rng), r = 0.1 * unit(rng), sigma = 0.05 + 0.5 * unit(rng);
    const double g = 0.05 + 0.9 * unit(rng), dt = 0.001 + 0.02 * unit(rng);
    const ModelParams params{gamma, gamma, g, 0.0, sigma};
    const double general = risk_neutral_formula(params, r, dt);
    const double special = risk_neutral_prob_equal_drifts(g, market_price_of_risk(params, r), dt);
    CHECK(general == Approx(special).epsilon(1e-12));
  }
}

TEST_CASE("market_price_of_risk", "[lattice]") {
  CHECK(market_price_of_risk({0.02, 0.02, 0.5, 0.0, 0.2}, 0.02) == 0.0);
  CHECK(market_price_of_risk({0.08, 0.08, 0.5, 0.0, 0.2}, 0.02) == Approx(0.3).epsilon(1e-14));
  CHECK(market_price_of_risk({0.01, 0.01, 0.5, 0.0, 0.2}, 0.02) < 0.0);
  CHECK_THROWS_AS(market_price_of_risk({0.08, 0.07, 0.5, 0.0, 0.2}, 0.02), DomainError);
}

TEST_CASE("risk-neutral probability tends to 0 and 1 at the ends of p", "[lattice]") {
  const double r = 0.02, dt = 1.0 / 252;
  const double near0 = risk_neutral_formula({0.08, 0.08, 1e-6, 0.0, 0.2}, r, dt);
  const double near1 = risk_neutral_formula({0.08, 0.08, 1 - 1e-6, 0.0, 0.2}, r, dt);
  CHECK(std::abs(near0) < 1e-4);
  CHECK(std::abs(1 - near1) < 1e-4);
}

TEST_CASE("delta_hedge", "[lattice]") {
  const ModelParams params{0.05, 0.05, 0.5, 0.0, 0.2};
  CHECK(delta_hedge(100, 3, 3, params, 0.01) == 0.0);
  CHECK(delta_hedge(100, 5, 0, params, 0.01) == Approx(1.25).epsilon(1e-14));
  CHECK_THROWS_AS(delta_hedge(0, 5, 0, params, 0.01), DomainError);
}

TEST_CASE("delta hedge makes the one-step portfolio riskless", "[lattice][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const ModelParams params{-0.1 + 0.3 * unit(rng), -0.1 + 0.3 * unit(rng), 0.1 + 0.8 * unit(rng), 0.0,
                             0.05 + 0.5 * unit(rng)};
    const double dt = 0.001 + 0.01 * unit(rng), s = 50 + 100 * unit(rng);
    const double fu = 30 * unit(rng), fd = 30 * unit(rng);
    const StepFactors f = step_factors_asymptotic(params, dt);
    const double delta = delta_hedge(s, fu, fd, params, dt);
    const double up = delta * s * f.u - fu, down = delta * s * f.d - fd;
    CHECK(up == Approx(down).epsilon(1e-12).margin(1e-12 * (std::abs(fu) + std::abs(fd))));
  }
}

TEST_CASE("one-step price equals hand backward induction", "[lattice]") {
  const ModelParams params{0.0, 0.0, 0.5, 0.0, 0.2};
  const double u = std::exp(-0.02 + 0.2), d = std::exp(-0.02 - 0.2);
  const double q = (1 - d) / (u - d);
  const double price = price_european(100.0, params, 0.0, 1.0, 1, Payoff::call(100));
  // With r = gamma = delta = 0 the lattice Q is p = 1/2; the replication q differs
  // because the exact factors are not the asymptotic ones.
  CHECK(price == Approx(0.5 * (100 * u - 100)).epsilon(1e-14));
  CHECK(std::abs(q - 0.5) < 0.02);
}

TEST_CASE("backward induction agrees with the closed binomial sum", "[lattice]") {
  const ModelParams params{0.07, 0.01, 0.45, 0.2, 0.25};
  const double r = 0.03, t = 0.5;
  const int n = 40;
  const double dt = t / n;
  const StepFactors f = step_factors_exact(params, dt);
  const double q = risk_neutral_prob(params, r, dt);
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    double c = 1.0;
    for (int k = 1; k <= i; ++k) c = c * (n - i + k) / k;
    sum += c * std::pow(q, i) * std::pow(1 - q, n - i) * std::max(100 * std::pow(f.u, i) * std::pow(f.d, n - i) - 95, 0.0);
  }
  CHECK(price_european(100, params, r, t, n, Payoff::call(95)) == Approx(std::exp(-r * t) * sum).epsilon(1e-12));
}

TEST_CASE("deep in-the-money call tends to the forward", "[lattice]") {
  const double r = 0.04;
  const double price = price_european(100.0, {r, r, 0.5, 0.0, 1e-4}, r, 1.0, 200, Payoff::call(50));
  CHECK(price == Approx(100 - 50 * std::exp(-r)).epsilon(1e-6));
}

TEST_CASE("at-the-money call converges to Black-Scholes", "[lattice]") {
  const double bs = black_scholes(100, 100, 0.05, 0.2, 1.0, true);
  CHECK(bs == Approx(10.4506).margin(5e-5));
  const ModelParams mp1{0.05, 0.05, 0.5, 0.0, 0.2};
  CHECK(std::abs(price_european(100, mp1, 0.05, 1.0, 1000, Payoff::call(100)) - bs) < 0.01);

  // n |error| oscillates at the money but stays bounded: the late sweep never
  // exceeds 1.5 times the early peak.
  double early = 0.0, late = 0.0;
  for (int n = 50; n <= 3200; n *= 2) {
    const double scaled = n * std::abs(price_european(100, mp1, 0.05, 1.0, n, Payoff::call(100)) - bs);
    double& peak = n <= 200 ? early : late;
    peak = std::max(peak, scaled);
  }
  CHECK(late <= 1.5 * early);
}

TEST_CASE("put-call parity holds on the lattice", "[lattice]") {
  const ModelParams params{0.06, 0.02, 0.52, 0.1, 0.3};
  const double r = 0.03, t = 0.75;
  const int n = 150;
  const double dt = t / n;
  const double call = price_european(100, params, r, t, n, Payoff::call(105));
  const double put = price_european(100, params, r, t, n, Payoff::put(105));
  // The forward on the lattice is s0 (Q u + (1-Q) d)^n, not s0 e^{rt} exactly.
  const StepFactors f = step_factors_exact(params, dt);
  const double q = risk_neutral_prob(params, r, dt);
  const double forward = 100 * std::pow(q * f.u + (1 - q) * f.d, n);
  CHECK(call - put == Approx(std::exp(-r * t) * (forward - 105)).epsilon(1e-10));
}

TEST_CASE("call price is monotone in strike and spot", "[lattice][property]") {
  const ModelParams params{0.05, 0.05, 0.5, 0.0, 0.2};
  double last = std::numeric_limits<double>::infinity();
  for (double k = 60; k <= 140; k += 5) {
    const double price = price_european(100, params, 0.05, 0.5, 100, Payoff::call(k));
    CHECK(price <= last);
    last = price;
  }
  last = -1.0;
  for (double s = 60; s <= 140; s += 5) {
    const double price = price_european(s, params, 0.05, 0.5, 100, Payoff::call(100));
    CHECK(price >= last);
    last = price;
  }
}

TEST_CASE("asymptotic factors are available behind a switch", "[lattice]") {
  const ModelParams mp1{0.05, 0.05, 0.5, 0.0, 0.2};
  const double exact = price_european(100, mp1, 0.05, 1.0, 500, Payoff::call(100));
  const double asym = price_european(100, mp1, 0.05, 1.0, 500, Payoff::call(100), FactorForm::asymptotic);
  CHECK(exact != asym);
  CHECK(std::abs(exact - asym) < 0.05);
}

TEST_CASE("discontinuity_report worked example", "[lattice]") {
  const Payoff call = Payoff::call(100);
  const DiscontinuityReport mid = discontinuity_report(100, 0.0, 0.2, 1.0, call, 0.5);
  const double u = std::exp(0.2), d = std::exp(-0.2);
  const double q = (1 - d) / (u - d);
  CHECK(q == Approx(0.45017).margin(5e-6));
  CHECK(mid.f0_interior == Approx(q * (100 * u - 100)).epsilon(1e-14));
  CHECK(mid.f0_interior == Approx(9.967).margin(5e-4));
  CHECK(mid.gap_at_0 == Approx(-mid.f0_interior).epsilon(1e-12));
  CHECK(mid.gap_at_1 == Approx((1 - q) * (100 * u - 100)).epsilon(1e-14));

  for (const double p : {0.01, 0.99}) {
    CHECK(discontinuity_report(100, 0.0, 0.2, 1.0, call, p).f0_interior == mid.f0_interior);
  }
  CHECK(discontinuity_report(100, 0.0, 0.2, 1.0, call, 0.0).f0_at_p == 0.0);
  CHECK(discontinuity_report(100, 0.0, 0.2, 1.0, call, 1.0).f0_at_p == Approx(100 * u - 100).epsilon(1e-14));

  const DiscontinuityReport flat = discontinuity_report(100, 0.0, 0.2, 1.0, Payoff::custom([](double) { return 4.0; }), 0.3);
  CHECK(flat.gap_at_0 == 0.0);
  CHECK(flat.gap_at_1 == 0.0);

  CHECK_THROWS_AS(discontinuity_report(100, 0.0, 0.2, 1.0, call, 1.5), DomainError);
  CHECK_THROWS_AS(discontinuity_report(100, 1.0, 0.2, 1.0, call, 0.5), ArbitrageError);
}
