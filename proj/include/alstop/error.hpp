#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace alstop {

// Base class for everything the library throws on bad input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent data (files, datasets, outcome tables).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Trace file could not be decoded. `round()` names the failing record when
// the problem is inside a record rather than the header.
class TraceFormatError : public DataError {
 public:
  TraceFormatError(const std::string& what, std::optional<long> round = std::nullopt)
      : DataError(round ? what + " (round " + std::to_string(*round) + ")" : what),
        round_(round) {}
  std::optional<long> round() const noexcept { return round_; }

 private:
  std::optional<long> round_;
};

// A criterion was asked to evaluate a trace from a model it does not support.
class InapplicableCriterion : public Error {
 public:
  using Error::Error;
};

// A statistic is undefined for the given input (e.g. correlation of a
// constant series).
class UndefinedStatistic : public Error {
 public:
  using Error::Error;
};

}  // namespace alstop
