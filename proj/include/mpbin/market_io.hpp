#pragma once

// CSV and key=value readers. Malformed lines are reported with their line number.
//
// Chain CSV:
//   # spot=100
//   # rate=0.02
//   strike,days_to_maturity,market_price
//   95,21,6.51
// Returns CSV: `date,value` rows with ISO-8601 dates (header optional).
// Config: `key=value` lines, `#` starts a comment.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mpbin/calibrate.hpp"
#include "mpbin/errors.hpp"
#include "mpbin/stats.hpp"

namespace mpbin {

namespace io {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

template <class Int>
std::optional<Int> to_integer(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  Int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

/// Strict YYYY-MM-DD.
inline std::optional<std::chrono::year_month_day> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  const auto y = to_integer<int>(s.substr(0, 4));
  const auto m = to_integer<unsigned>(s.substr(5, 2));
  const auto d = to_integer<unsigned>(s.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day date{std::chrono::year{*y}, std::chrono::month{*m},
                                         std::chrono::day{*d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

inline std::string format_date(const std::chrono::year_month_day& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

inline std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

}  // namespace io

struct ChainFile {
  double spot = 0.0;
  double rate = 0.0;
  std::vector<OptionQuote> quotes;
};

struct ChainOptions {
  bool maturity_filter = false;  // drop quotes maturing after max_days
  int max_days = 100;
};

inline ChainFile parse_chain(std::istream& in, const std::string& source = "<chain>",
                             const ChainOptions& options = {}) {
  ChainFile chain;
  std::optional<double> spot, rate;
  std::optional<std::size_t> col_strike, col_days, col_price;
  std::size_t columns = 0;
  bool header_seen = false;
  std::string raw;
  std::size_t line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = io::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = io::trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = io::trim(body.substr(0, eq));
      const std::string_view value = io::trim(body.substr(eq + 1));
      if (key != "spot" && key != "rate") continue;
      const auto parsed = io::to_double(value);
      if (!parsed) throw ParseError(source, line_no, "non-numeric " + std::string(key));
      (key == "spot" ? spot : rate) = *parsed;
      continue;
    }
    const auto fields = io::split(line, ',');
    if (!header_seen) {
      header_seen = true;
      columns = fields.size();
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "strike") col_strike = i;
        if (fields[i] == "days_to_maturity") col_days = i;
        if (fields[i] == "market_price") col_price = i;
      }
      if (!col_strike) throw ParseError(source, line_no, "missing column 'strike'");
      if (!col_days) throw ParseError(source, line_no, "missing column 'days_to_maturity'");
      if (!col_price) throw ParseError(source, line_no, "missing column 'market_price'");
      continue;
    }
    if (fields.size() != columns) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(columns) + " fields, got " + std::to_string(fields.size()));
    }
    const auto strike = io::to_double(fields[*col_strike]);
    if (!strike) throw ParseError(source, line_no, "non-numeric strike");
    if (!(*strike > 0.0)) throw ParseError(source, line_no, "strike must be positive");
    const auto days = io::to_integer<int>(fields[*col_days]);
    if (!days) throw ParseError(source, line_no, "days_to_maturity must be an integer");
    if (*days < 1) throw ParseError(source, line_no, "days_to_maturity must be >= 1");
    const auto price = io::to_double(fields[*col_price]);
    if (!price) throw ParseError(source, line_no, "non-numeric market_price");
    if (!(*price > 0.0)) throw ParseError(source, line_no, "market_price must be positive");
    if (options.maturity_filter && *days > options.max_days) continue;
    chain.quotes.push_back({*strike, *days, *price});
  }

  if (!spot) throw ParseError(source, line_no, "missing '# spot=' header");
  if (!rate) throw ParseError(source, line_no, "missing '# rate=' header");
  if (!(*spot > 0.0)) throw ParseError(source, line_no, "spot must be positive");
  if (!header_seen) throw ParseError(source, line_no, "missing column header");
  if (chain.quotes.empty()) throw ParseError(source, line_no, "chain has no quotes");
  chain.spot = *spot;
  chain.rate = *rate;
  return chain;
}

inline ChainFile load_chain(const std::string& path, const ChainOptions& options = {}) {
  std::ifstream in = io::open(path);
  return parse_chain(in, path, options);
}

/// Canonical form: metadata lines, header, one row per quote, shortest round-trip numbers.
inline void write_chain(std::ostream& os, const ChainFile& chain) {
  os << "# spot=" << io::format_double(chain.spot) << '\n';
  os << "# rate=" << io::format_double(chain.rate) << '\n';
  os << "strike,days_to_maturity,market_price\n";
  for (const OptionQuote& q : chain.quotes) {
    os << io::format_double(q.strike) << ',' << q.days_to_maturity << ','
       << io::format_double(q.market_price) << '\n';
  }
}

enum class ValueKind { price, simple_return };

struct ReturnSeries {
  std::vector<DatedValue> rows;  // dates strictly ascending
  ValueKind value_kind = ValueKind::simple_return;
};

/// Reads `date,value` rows. Price series come back converted to simple returns
/// P_t / P_{t-1} - 1, dated at t.
inline ReturnSeries parse_returns(std::istream& in, ValueKind kind, const std::string& source = "<returns>") {
  ReturnSeries raw;
  raw.value_kind = kind;
  std::string text;
  std::size_t line_no = 0;
  bool first_data = true;
  while (std::getline(in, text)) {
    ++line_no;
    const std::string_view line = io::trim(text);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = io::split(line, ',');
    if (first_data && fields.size() == 2 && fields[0] == "date") {
      first_data = false;
      continue;
    }
    first_data = false;
    if (fields.size() != 2) throw ParseError(source, line_no, "expected 'date,value'");
    const auto date = io::parse_date(fields[0]);
    if (!date) throw ParseError(source, line_no, "unparseable date '" + std::string(fields[0]) + "'");
    const auto value = io::to_double(fields[1]);
    if (!value || !std::isfinite(*value)) throw ParseError(source, line_no, "non-numeric value");
    if (kind == ValueKind::price && !(*value > 0.0)) {
      throw ParseError(source, line_no, "price must be positive");
    }
    if (!raw.rows.empty()) {
      const auto& prev = raw.rows.back().date;
      if (*date == prev) {
        throw ParseError(source, line_no, "duplicate date " + io::format_date(*date));
      }
      if (*date < prev) {
        throw ParseError(source, line_no, "dates not ascending at " + io::format_date(*date));
      }
    }
    raw.rows.push_back({*date, *value});
  }
  if (kind == ValueKind::simple_return) return raw;

  ReturnSeries out;
  out.value_kind = ValueKind::simple_return;
  for (std::size_t i = 1; i < raw.rows.size(); ++i) {
    out.rows.push_back({raw.rows[i].date, raw.rows[i].value / raw.rows[i - 1].value - 1.0});
  }
  return out;
}

inline ReturnSeries load_returns(const std::string& path, ValueKind kind) {
  std::ifstream in = io::open(path);
  return parse_returns(in, kind, path);
}

struct RunConfig {
  double dt = 1.0 / kTradingDaysPerYear;
  double optimizer_tolerance = 1e-10;
  int optimizer_max_evaluations = 20000;
  int optimizer_restarts = 3;
  std::uint64_t seed = 20160520;
  bool maturity_filter = false;
  double ci_level = 0.95;

  CalibrationConfig calibration() const {
    CalibrationConfig c;
    c.dt = dt;
    c.optimizer.tolerance = optimizer_tolerance;
    c.optimizer.max_evaluations = optimizer_max_evaluations;
    c.optimizer.restarts = optimizer_restarts;
    c.optimizer.seed = seed;
    return c;
  }
};

inline RunConfig parse_config(std::istream& in, const std::string& source = "<config>") {
  RunConfig config;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    std::string_view line = text;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = io::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key=value");
    const std::string key(io::trim(line.substr(0, eq)));
    const std::string_view value = io::trim(line.substr(eq + 1));
    auto bad = [&](const std::string& why) { return ParseError(source, line_no, key + ": " + why); };

    if (key == "dt") {
      const auto v = io::to_double(value);
      if (!v || !(*v > 0.0)) throw bad("must be a positive number");
      config.dt = *v;
    } else if (key == "optimizer_tolerance") {
      const auto v = io::to_double(value);
      if (!v || !(*v > 0.0)) throw bad("must be a positive number");
      config.optimizer_tolerance = *v;
    } else if (key == "optimizer_max_evaluations") {
      const auto v = io::to_integer<int>(value);
      if (!v || *v < 1) throw bad("must be a positive integer");
      config.optimizer_max_evaluations = *v;
    } else if (key == "optimizer_restarts") {
      const auto v = io::to_integer<int>(value);
      if (!v || *v < 0) throw bad("must be a non-negative integer");
      config.optimizer_restarts = *v;
    } else if (key == "seed") {
      const auto v = io::to_integer<std::uint64_t>(value);
      if (!v) throw bad("must be a non-negative integer");
      config.seed = *v;
    } else if (key == "maturity_filter") {
      if (value == "true" || value == "1") {
        config.maturity_filter = true;
      } else if (value == "false" || value == "0") {
        config.maturity_filter = false;
      } else {
        throw bad("must be true or false");
      }
    } else if (key == "ci_level") {
      const auto v = io::to_double(value);
      if (!v || !(*v > 0.0 && *v < 1.0)) throw bad("must lie in (0, 1)");
      config.ci_level = *v;
    } else {
      throw ParseError(source, line_no, "unknown key '" + key + "'");
    }
  }
  return config;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in = io::open(path);
  return parse_config(in, path);
}

}  // namespace mpbin
