#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>

namespace plap {

/// Value and first derivative, propagated through arithmetic.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

/// Arithmetic expression in one variable, e.g. "1 + 0.5*sin(2*pi*x)".
/// Grammar: numbers, the variable, pi, e, + - * / ^, unary minus, and the
/// functions sin cos tan exp log sqrt tanh cosh sinh abs.
class Expression {
 public:
  struct Node;

  Expression() = default;
  /// Throws ParseError carrying the 1-based column of the offending token.
  Expression(const std::string& text, const std::string& var = "x");

  double operator()(double x) const { return eval({x, 1.0}).v; }
  double derivative(double x) const { return eval({x, 1.0}).d; }
  Dual eval(Dual x) const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

/// Strictly positive C^1 weight a(x) on [0, 1] with its derivative.
class WeightFunction {
 public:
  WeightFunction() = default;
  WeightFunction(std::function<double(double)> a, std::function<double(double)> a_prime,
                 std::string description = "");

  double a(double x) const { return a_(x); }
  double a_prime(double x) const { return ap_(x); }
  double operator()(double x) const { return a_(x); }
  const std::string& description() const { return desc_; }

 private:
  std::function<double(double)> a_, ap_;
  std::string desc_;
};

WeightFunction weight_from_expression(const std::string& text);

/// Piecewise cubic Hermite weight through samples (x_i, a_i) covering
/// [0, 1], with nodal slopes from 5-point finite differences.
WeightFunction weight_from_samples(const Eigen::VectorXd& x, const Eigen::VectorXd& a);

WeightFunction constant_weight(double c);

struct WeightReport {
  double min_value = 0.0;
  double max_fd_mismatch = 0.0;  // |a' - centered difference| / scale
};

/// Checks a > 0 on a grid and a' against second-order centered differences.
/// Throws ValidationError naming the violated invariant.
WeightReport validate_weight(const WeightFunction& w, int grid_size = 2001);

}  // namespace plap
