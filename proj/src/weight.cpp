#include "plap/weight.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "plap/errors.hpp"
#include "plap/fd.hpp"

namespace plap {

struct Expression::Node {
  enum Kind { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kFunc } kind;
  double value = 0.0;
  std::string func;
  std::shared_ptr<const Node> l, r;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

NodePtr make(Node::Kind k, NodePtr l = nullptr, NodePtr r = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->l = std::move(l);
  n->r = std::move(r);
  return n;
}

const std::vector<std::string> kFunctions = {"sin",  "cos",  "tan",  "exp",  "log",
                                             "sqrt", "tanh", "cosh", "sinh", "abs"};

// Recursive-descent parser:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
class Parser {
 public:
  Parser(const std::string& s, const std::string& var) : s_(s), var_(var) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ < s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const {
    throw ParseError("expression: " + msg + " at column " + std::to_string(pos_ + 1), 0,
                     static_cast<int>(pos_) + 1);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) {
        n = make(Node::kAdd, n, term());
      } else if (accept('-')) {
        n = make(Node::kSub, n, term());
      } else {
        return n;
      }
    }
  }
  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) {
        n = make(Node::kMul, n, unary());
      } else if (accept('/')) {
        n = make(Node::kDiv, n, unary());
      } else {
        return n;
      }
    }
  }
  NodePtr unary() {
    if (accept('-')) return make(Node::kNeg, unary());
    if (accept('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr n = atom();
    if (accept('^')) return make(Node::kPow, n, unary());
    return n;
  }
  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) error("unexpected end of expression");
    const char c = s_[pos_];
    if (accept('(')) {
      NodePtr n = expr();
      if (!accept(')')) error("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) error("bad number");
      pos_ += static_cast<size_t>(end - begin);
      auto n = std::make_shared<Node>();
      n->kind = Node::kConst;
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      const std::string id = s_.substr(start, pos_ - start);
      if (id == var_) return make(Node::kVar);
      if (id == "pi" || id == "e") {
        auto n = std::make_shared<Node>();
        n->kind = Node::kConst;
        n->value = id == "pi" ? std::numbers::pi : std::numbers::e;
        return n;
      }
      if (std::find(kFunctions.begin(), kFunctions.end(), id) != kFunctions.end()) {
        if (!accept('(')) error("expected '(' after " + id);
        NodePtr arg = expr();
        if (!accept(')')) error("expected ')'");
        auto n = std::make_shared<Node>();
        n->kind = Node::kFunc;
        n->func = id;
        n->l = arg;
        return n;
      }
      pos_ = start;
      error("unknown identifier '" + id + "'");
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  const std::string& var_;
  size_t pos_ = 0;
};

Dual eval_node(const Node& n, Dual x) {
  switch (n.kind) {
    case Node::kConst:
      return {n.value, 0.0};
    case Node::kVar:
      return x;
    case Node::kNeg: {
      const Dual a = eval_node(*n.l, x);
      return {-a.v, -a.d};
    }
    case Node::kAdd: {
      const Dual a = eval_node(*n.l, x), b = eval_node(*n.r, x);
      return {a.v + b.v, a.d + b.d};
    }
    case Node::kSub: {
      const Dual a = eval_node(*n.l, x), b = eval_node(*n.r, x);
      return {a.v - b.v, a.d - b.d};
    }
    case Node::kMul: {
      const Dual a = eval_node(*n.l, x), b = eval_node(*n.r, x);
      return {a.v * b.v, a.d * b.v + a.v * b.d};
    }
    case Node::kDiv: {
      const Dual a = eval_node(*n.l, x), b = eval_node(*n.r, x);
      return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
    }
    case Node::kPow: {
      const Dual a = eval_node(*n.l, x), b = eval_node(*n.r, x);
      const double v = std::pow(a.v, b.v);
      // constant exponent: d(a^b) = b a^{b-1} a'
      double d = b.v * std::pow(a.v, b.v - 1.0) * a.d;
      if (b.d != 0.0) d += v * std::log(a.v) * b.d;
      return {v, d};
    }
    case Node::kFunc: {
      const Dual a = eval_node(*n.l, x);
      const std::string& f = n.func;
      if (f == "sin") return {std::sin(a.v), std::cos(a.v) * a.d};
      if (f == "cos") return {std::cos(a.v), -std::sin(a.v) * a.d};
      if (f == "tan") {
        const double c = std::cos(a.v);
        return {std::tan(a.v), a.d / (c * c)};
      }
      if (f == "exp") {
        const double e = std::exp(a.v);
        return {e, e * a.d};
      }
      if (f == "log") return {std::log(a.v), a.d / a.v};
      if (f == "sqrt") {
        const double r = std::sqrt(a.v);
        return {r, 0.5 * a.d / r};
      }
      if (f == "tanh") {
        const double t = std::tanh(a.v);
        return {t, (1.0 - t * t) * a.d};
      }
      if (f == "cosh") return {std::cosh(a.v), std::sinh(a.v) * a.d};
      if (f == "sinh") return {std::sinh(a.v), std::cosh(a.v) * a.d};
      if (f == "abs") return {std::abs(a.v), (a.v < 0.0 ? -1.0 : 1.0) * a.d};
      break;
    }
  }
  throw DomainError("expression: corrupt node");
}

}  // namespace

Expression::Expression(const std::string& text, const std::string& var)
    : text_(text), root_(Parser(text, var).parse()) {}

Dual Expression::eval(Dual x) const {
  if (!root_) throw DomainError("expression: empty");
  return eval_node(*root_, x);
}

WeightFunction::WeightFunction(std::function<double(double)> a,
                               std::function<double(double)> a_prime, std::string description)
    : a_(std::move(a)), ap_(std::move(a_prime)), desc_(std::move(description)) {}

WeightFunction weight_from_expression(const std::string& text) {
  Expression e(text, "x");
  return WeightFunction([e](double x) { return e(x); }, [e](double x) { return e.derivative(x); },
                        text);
}

WeightFunction weight_from_samples(const Eigen::VectorXd& x, const Eigen::VectorXd& a) {
  const Eigen::Index n = x.size();
  if (n < 5 || a.size() != n) throw DomainError("weight samples: need >= 5 matching values");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(x[i] > x[i - 1])) throw DomainError("weight samples: abscissae must increase");
  }
  if (x[0] > 0.0 || x[n - 1] < 1.0) throw DomainError("weight samples must cover [0, 1]");
  auto xs = std::make_shared<const Eigen::VectorXd>(x);
  auto ys = std::make_shared<const Eigen::VectorXd>(a);
  auto ds = std::make_shared<const Eigen::VectorXd>(fd_derivative(x, a, 5));
  auto locate = [xs](double t) {
    const double* b = xs->data();
    Eigen::Index i = std::upper_bound(b, b + xs->size(), t) - b - 1;
    return std::clamp<Eigen::Index>(i, 0, xs->size() - 2);
  };
  auto val = [=](double t) {
    const Eigen::Index i = locate(t);
    const double h = (*xs)[i + 1] - (*xs)[i], u = (t - (*xs)[i]) / h;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * (*ys)[i] + (u3 - 2 * u2 + u) * h * (*ds)[i] +
           (-2 * u3 + 3 * u2) * (*ys)[i + 1] + (u3 - u2) * h * (*ds)[i + 1];
  };
  auto der = [=](double t) {
    const Eigen::Index i = locate(t);
    const double h = (*xs)[i + 1] - (*xs)[i], u = (t - (*xs)[i]) / h;
    const double u2 = u * u;
    return ((6 * u2 - 6 * u) * (*ys)[i] + (-6 * u2 + 6 * u) * (*ys)[i + 1]) / h +
           (3 * u2 - 4 * u + 1) * (*ds)[i] + (3 * u2 - 2 * u) * (*ds)[i + 1];
  };
  return WeightFunction(val, der, "samples");
}

WeightFunction constant_weight(double c) {
  std::ostringstream os;
  os.precision(17);
  os << c;
  return WeightFunction([c](double) { return c; }, [](double) { return 0.0; }, os.str());
}

WeightReport validate_weight(const WeightFunction& w, int grid_size) {
  if (grid_size < 10) throw DomainError("validate_weight: grid_size >= 10 required");
  WeightReport rep;
  rep.min_value = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (int i = 0; i < grid_size; ++i) {
    const double x = static_cast<double>(i) / (grid_size - 1);
    const double v = w.a(x);
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "a(" << x << ") = " << v;
      throw ValidationError("a > 0", os.str());
    }
    rep.min_value = std::min(rep.min_value, v);
    scale = std::max(scale, std::abs(v));
  }
  const double h = 1e-5;
  for (int i = 1; i + 1 < grid_size; ++i) {
    const double x = static_cast<double>(i) / (grid_size - 1);
    const double fd = (w.a(x + h) - w.a(x - h)) / (2.0 * h);
    const double mis = std::abs(fd - w.a_prime(x)) / std::max(1.0, scale);
    rep.max_fd_mismatch = std::max(rep.max_fd_mismatch, mis);
    if (mis > 1e-5) {
      std::ostringstream os;
      os << "a' disagrees with finite differences at x = " << x;
      throw ValidationError("a' consistent with a", os.str());
    }
  }
  return rep;
}

}  // namespace plap
