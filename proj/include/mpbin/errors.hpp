#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpbin {

/// A model parameter or input lies outside its admissible domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A branch probability used for pricing falls outside [0, 1].
class ArbitrageError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed external data. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  explicit ParseError(const std::string& what) : std::runtime_error(what), line_(0) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mpbin
