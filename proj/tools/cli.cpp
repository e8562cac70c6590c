#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpbin/mpbin.hpp"

namespace mpbin::cli {

namespace {

struct Options {
  bool full_precision = false;
  std::string config_path;

  // shared market / model inputs
  std::string model = "mp";
  double s0 = 100.0;
  double strike = 100.0;
  double r = 0.05;
  double sigma = 0.2;
  double maturity = 1.0;
  int steps = 1000;
  std::optional<double> gamma;
  std::optional<double> delta;
  double g = 0.5;
  double v = 0.0;
  std::optional<double> p;
  bool put = false;
  bool asymptotic = false;

  // calibrate
  std::string chain_path;
  std::vector<std::string> models;
  bool maturity_filter = false;

  // converge
  double b = 0.05;
  int n_min = 16;
  int n_max = 2048;

  // estimate-p
  std::string returns_path;
  std::string kind = "return";
  std::optional<double> level;
  double p0 = 0.5;
  std::string grouping = "year";

  // demo-discontinuity
  std::vector<double> p_grid = {0.0, 0.01, 0.25, 0.5, 0.75, 0.99, 1.0};

  // moments
  int j_max = 8;
  double dt = 1.0 / 252.0;
  int halvings = 5;
};

RunConfig config_for(const Options& o) {
  return o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
}

Payoff payoff_for(const Options& o) { return o.put ? Payoff::put(o.strike) : Payoff::call(o.strike); }

ModelParams params_for(const Options& o, double dt) {
  if (o.model == "mp") return {o.gamma.value_or(o.r), o.delta.value_or(o.r), o.g, o.v, o.sigma};
  switch (parse_model(o.model)) {
    case TreeModel::crr: return crr_params(o.r, o.sigma);
    case TreeModel::jr: return jarrow_rudd_params(o.r, o.sigma);
    case TreeModel::tian: return tian_params(o.r, o.sigma);
    case TreeModel::mpbin1: return {o.r, o.r, o.g, 0.0, o.sigma};
    case TreeModel::mpbin2: {
      const std::vector<double> x{o.gamma.value_or(o.r), o.g, o.p.value_or(o.g), o.sigma};
      return calibration::to_params(TreeModel::mpbin2, x, o.r, dt);
    }
  }
  return {};
}

int cmd_price(const Options& o, std::ostream& out) {
  if (o.steps < 1) throw DomainError("--n must be >= 1");
  const double dt = o.maturity / o.steps;
  const ModelParams params = params_for(o, dt);
  const double price = price_european(o.s0, params, o.r, o.maturity, o.steps, payoff_for(o),
                                      o.asymptotic ? FactorForm::asymptotic : FactorForm::exact);
  out << "# model=" << o.model << " n=" << o.steps << " dt=" << dt << '\n';
  out << price << '\n';
  return 0;
}

int cmd_calibrate(const Options& o, std::ostream& out) {
  const RunConfig config = config_for(o);
  ChainOptions chain_options;
  chain_options.maturity_filter = o.maturity_filter || config.maturity_filter;
  const ChainFile chain = load_chain(o.chain_path, chain_options);

  std::vector<TreeModel> models;
  if (o.models.empty()) {
    models.assign(kAllModels.begin(), kAllModels.end());
  } else {
    for (const std::string& name : o.models) models.push_back(parse_model(name));
  }
  const auto results = calibrate_nested(models, chain.quotes, chain.spot, chain.rate, config.calibration());
  out << "# spot=" << chain.spot << " rate=" << chain.rate << " quotes=" << chain.quotes.size()
      << " dt=" << config.dt << '\n';
  write_calibration_csv(out, results, config.dt, static_cast<int>(out.precision()));
  return 0;
}

int cmd_converge(const Options& o, std::ostream& out) {
  if (o.n_min < 1 || o.n_max < o.n_min) throw DomainError("need 1 <= n-min <= n-max");
  std::vector<int> ns;
  for (int n = o.n_min; n <= o.n_max; n *= 2) ns.push_back(n);
  const ModelParams params{o.gamma.value_or(o.b), o.delta.value_or(o.b), o.g, o.v, o.sigma};
  const RateExperiment experiment = rate_experiment(params, o.maturity, ns);
  out << "# g=" << o.g << " v=" << o.v << " b=" << params.drift() << " sigma=" << o.sigma
      << " T=" << o.maturity << " rate_constant=" << rate_constant(o.g) << '\n';
  write_rate_csv(out, experiment, static_cast<int>(out.precision()));
  return 0;
}

int cmd_estimate(const Options& o, std::ostream& out) {
  const RunConfig config = config_for(o);
  const double level = o.level.value_or(config.ci_level);
  ValueKind kind;
  if (o.kind == "price") {
    kind = ValueKind::price;
  } else if (o.kind == "return") {
    kind = ValueKind::simple_return;
  } else {
    throw DomainError("--kind must be 'price' or 'return'");
  }
  const ReturnSeries series = load_returns(o.returns_path, kind);
  std::vector<double> values;
  values.reserve(series.rows.size());
  for (const DatedValue& row : series.rows) values.push_back(row.value);

  const UpDownCounts counts = up_proportion(values);
  const Interval ci = proportion_ci(counts, level);
  const double p_value = exact_binomial_test(counts, o.p0);
  out << "ups,total,p_hat,ci_low,ci_high,level,p0,exact_p_value\n";
  out << counts.ups << ',' << counts.total << ',' << counts.p_hat() << ',' << ci.lower << ','
      << ci.upper << ',' << level << ',' << o.p0 << ',' << p_value << '\n';

  if (o.grouping == "year") {
    const auto groups = grouped_estimates(series.rows, level);
    if (groups.size() >= 2) {
      std::vector<UpDownCounts> per_group;
      for (const GroupEstimate& g : groups) per_group.push_back(g.counts);
      const HomogeneityTest test = homogeneity_test(per_group);
      out << "# homogeneity statistic=" << test.statistic << " df=" << test.df
          << " p_value=" << test.p_value << '\n';
    }
    write_group_csv(out, groups, static_cast<int>(out.precision()));
  } else if (o.grouping != "none") {
    throw DomainError("--grouping must be 'year' or 'none'");
  }
  return 0;
}

int cmd_discontinuity(const Options& o, std::ostream& out) {
  const Payoff payoff = payoff_for(o);
  out << "p,f0\n";
  DiscontinuityReport last;
  for (const double p : o.p_grid) {
    last = discontinuity_report(o.s0, o.r, o.sigma, o.maturity, payoff, p);
    out << p << ',' << last.f0_at_p << '\n';
  }
  if (o.p_grid.empty()) last = discontinuity_report(o.s0, o.r, o.sigma, o.maturity, payoff, 0.5);
  out << "# f0_interior=" << last.f0_interior << " gap_at_0=" << last.gap_at_0
      << " gap_at_1=" << last.gap_at_1 << '\n';
  return 0;
}

int cmd_moments(const Options& o, std::ostream& out) {
  if (o.j_max < 1 || o.j_max > kMaxMomentOrder) throw DomainError("--j-max out of range");
  if (o.halvings < 0) throw DomainError("--halvings must be non-negative");
  const ModelParams params{o.b, o.b, o.g, 0.0, o.sigma};
  out << "j,dt,step_moment,gbm_moment,abs_error,error_over_dt2\n";
  std::vector<std::string> verdicts;
  for (int j = 1; j <= o.j_max; ++j) {
    double lo = INFINITY, hi = 0.0;
    for (int h = 0; h <= o.halvings; ++h) {
      const double dt = std::ldexp(o.dt, -h);
      const double tree = step_moment(params, dt, j);
      const double gbm = gbm_moment(o.b, o.sigma, dt, j);
      const double scaled = std::abs(tree - gbm) / (dt * dt);
      lo = std::min(lo, scaled);
      hi = std::max(hi, scaled);
      out << j << ',' << dt << ',' << tree << ',' << gbm << ',' << std::abs(tree - gbm) << ','
          << scaled << '\n';
    }
    const double ratio = lo > 0.0 ? hi / lo : (hi == 0.0 ? 1.0 : INFINITY);
    std::ostringstream line;
    line.precision(out.precision());
    line << "# j=" << j << " spread_ratio=" << ratio << ' ' << (ratio <= 4.0 ? "PASS" : "FAIL");
    verdicts.push_back(line.str());
  }
  for (const std::string& v : verdicts) out << v << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Multi-purpose binomial tree: pricing, calibration and diagnostics", "mpbin"};
  app.require_subcommand(1);
  app.add_flag("--full-precision", o.full_precision, "Print 17 significant digits instead of 6");
  app.add_option("--config", o.config_path, "key=value run configuration file");

  auto add_market = [&](CLI::App* sub) {
    sub->add_option("--s0", o.s0, "Spot price")->capture_default_str();
    sub->add_option("--strike,-K,--K", o.strike, "Strike")->capture_default_str();
    sub->add_option("--r", o.r, "Risk-free rate (continuous, per year)")->capture_default_str();
    sub->add_option("--sigma", o.sigma, "Volatility")->capture_default_str();
    sub->add_option("--T", o.maturity, "Maturity in years")->capture_default_str();
    sub->add_flag("--put", o.put, "Price a put instead of a call");
  };

  CLI::App* price = app.add_subcommand("price", "Price a European option on the tree");
  add_market(price);
  price->add_option("--model", o.model, "crr | jr | tian | mpbin1 | mpbin2 | mp")->capture_default_str();
  price->add_option("--n", o.steps, "Number of steps")->capture_default_str();
  price->add_option("--gamma", o.gamma, "Up-branch drift (default r)");
  price->add_option("--delta", o.delta, "Down-branch drift (default r)");
  price->add_option("--g", o.g, "Base up-probability")->capture_default_str();
  price->add_option("--v", o.v, "Probability slope")->capture_default_str();
  price->add_option("--p", o.p, "Up-probability at dt (mpbin2)");
  price->add_flag("--asymptotic", o.asymptotic, "Use first-order step factors");

  CLI::App* calibrate_cmd = app.add_subcommand("calibrate", "Fit tree models to an option chain");
  calibrate_cmd->add_option("--chain", o.chain_path, "Chain CSV")->required();
  calibrate_cmd->add_option("--models", o.models, "Models to fit (default: all)")->delimiter(',');
  calibrate_cmd->add_flag("--maturity-filter", o.maturity_filter, "Drop quotes beyond 100 trading days");

  CLI::App* converge = app.add_subcommand("converge", "Kolmogorov distance to the lognormal law over an n sweep");
  converge->add_option("--g", o.g, "Base up-probability")->capture_default_str();
  converge->add_option("--v", o.v, "Probability slope")->capture_default_str();
  converge->add_option("--b", o.b, "Drift used for both branches")->capture_default_str();
  converge->add_option("--gamma", o.gamma, "Up-branch drift (default b)");
  converge->add_option("--delta", o.delta, "Down-branch drift (default b)");
  converge->add_option("--sigma", o.sigma, "Volatility")->capture_default_str();
  converge->add_option("--T", o.maturity, "Horizon in years")->capture_default_str();
  converge->add_option("--n-min", o.n_min, "Smallest n (doubled up to n-max)")->capture_default_str();
  converge->add_option("--n-max", o.n_max, "Largest n")->capture_default_str();

  CLI::App* estimate = app.add_subcommand("estimate-p", "Estimate the physical up-probability");
  estimate->add_option("--returns", o.returns_path, "date,value CSV")->required();
  estimate->add_option("--kind", o.kind, "price | return")->capture_default_str();
  estimate->add_option("--level", o.level, "Confidence level (default from config, 0.95)");
  estimate->add_option("--p0", o.p0, "Null probability for the exact test")->capture_default_str();
  estimate->add_option("--grouping", o.grouping, "year | none")->capture_default_str();

  CLI::App* demo = app.add_subcommand("demo-discontinuity", "One-step value as the up-probability varies");
  add_market(demo);
  demo->add_option("--p", o.p_grid, "Probabilities to evaluate")->delimiter(',');

  CLI::App* moments = app.add_subcommand("moments", "One-step tree moments against the GBM moments");
  moments->add_option("--b", o.b, "Drift")->capture_default_str();
  moments->add_option("--sigma", o.sigma, "Volatility")->capture_default_str();
  moments->add_option("--g", o.g, "Up-probability")->capture_default_str();
  moments->add_option("--j-max", o.j_max, "Highest moment order")->capture_default_str();
  moments->add_option("--dt", o.dt, "Coarsest step")->capture_default_str();
  moments->add_option("--halvings", o.halvings, "Number of dt halvings")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "mpbin: " << e.what() << '\n';
    err << "Run with --help for usage.\n";
    return 2;
  }

  const auto flags = out.flags();
  const auto precision = out.precision(o.full_precision ? 17 : 6);
  int code = 1;
  try {
    if (price->parsed()) code = cmd_price(o, out);
    else if (calibrate_cmd->parsed()) code = cmd_calibrate(o, out);
    else if (converge->parsed()) code = cmd_converge(o, out);
    else if (estimate->parsed()) code = cmd_estimate(o, out);
    else if (demo->parsed()) code = cmd_discontinuity(o, out);
    else if (moments->parsed()) code = cmd_moments(o, out);
  } catch (const std::exception& e) {
    err << "mpbin: " << e.what() << '\n';
    code = 1;
  }
  out.precision(precision);
  out.flags(flags);
  return code;
}

}  // namespace mpbin::cli
