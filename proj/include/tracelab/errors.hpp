#pragma once

#include <stdexcept>
#include <string>

namespace tracelab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input parameters (violated preconditions).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An operation needs a nonempty set or a point off a singularity.
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// The requested tolerance could not be met within the cell budget.
class PrecisionError : public Error {
 public:
  PrecisionError(const std::string& what, double achieved_bound)
      : Error(what), achieved_bound_(achieved_bound) {}
  double achieved_bound() const noexcept { return achieved_bound_; }

 private:
  double achieved_bound_;
};

/// A ball leaves the region covered by a grid function.
class CoverageError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_value)
      : Error(what), best_value_(best_value) {}
  double best_value() const noexcept { return best_value_; }

 private:
  double best_value_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace tracelab
