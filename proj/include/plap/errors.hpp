#pragma once

#include <stdexcept>
#include <string>

namespace plap {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure (quadrature, ODE integration, root finding) did not
/// reach its requested accuracy.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double achieved = -1.0)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// An input object violates a documented invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string invariant, const std::string& detail)
      : std::runtime_error(invariant + ": " + detail), invariant_(std::move(invariant)) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// Descent for a constrained minimizer stalled before convergence.
class OptimizationError : public NumericalError {
 public:
  OptimizationError(const std::string& what, double grad_norm)
      : NumericalError(what, grad_norm) {}
  double gradient_norm() const noexcept { return achieved(); }
};

/// Broken-geodesic construction failed (maximizer on the boundary of the
/// admissible partition set, or a trivial piece).
class ConstructionError : public std::runtime_error {
 public:
  ConstructionError(const std::string& what, int index)
      : std::runtime_error(what), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

/// Malformed textual input (configuration files, expressions).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column)
      : std::runtime_error(what), line_(line), column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_, column_;
};

}  // namespace plap
