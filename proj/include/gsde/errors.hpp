#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gsde {

// Invalid arguments (shape mismatch, bad dimensions, non-finite input) are
// reported with std::invalid_argument. The types below cover the
// domain-specific failures.

/// A volatility matrix outside the admissible box [sigma_lo^2 I, sigma_hi^2 I].
class AdmissibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Euler state left the finite range; carries the path and step.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t path, std::size_t step, const std::string& what)
      : std::runtime_error(what), path_(path), step_(step) {}
  std::size_t path() const noexcept { return path_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t path_;
  std::size_t step_;
};

/// Coefficient-expression syntax or semantic error (1-based line/column).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t line, std::size_t column)
      : std::runtime_error(msg + " at line " + std::to_string(line) + ", column " +
                           std::to_string(column)),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Malformed experiment configuration; the message names the field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gsde
