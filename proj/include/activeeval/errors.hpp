#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace activeeval {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Out-of-range system index.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Missing (system, example) entry or unknown name.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Bad hyperparameters, unknown algorithm names, inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input that makes a formula undefined (e.g. 0/0 in BTL, zero score range).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A pair the environment has no recorded judgments for.
class CoverageError : public Error {
 public:
  using Error::Error;
};

// Schema or parse failure in a line-delimited file. `line` is 1-based, 0 when
// the failure is not tied to a line.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace activeeval
