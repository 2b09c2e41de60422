#pragma once

// A small expression language for metric data.
//
//   expr     := term (('+' | '-') term)*
//   term     := unary (('*' | '/') unary)*
//   unary    := '-' unary | power
//   power    := primary ['^' exponent]
//   exponent := ['-'] INT | '(' ['-'] INT ['/' INT] ')'
//   primary  := NUMBER | VARIABLE | BUILTIN | FUNC '(' expr ')' | '(' expr ')'
//
// VARIABLE is x1..xn or y1..yn (1-based), BUILTIN one of normx2 = Σ(x^i)²,
// normy2 = Σ(y^i)², dotxy = Σ x^i y^i, FUNC one of sqrt, ln, exp. Exponents
// are integer or rational literals only; there is no abs or piecewise
// construct, every expression is smooth where defined.

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 1;
  bool operator==(const Rational&) const = default;
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

enum class BinaryOp { add, sub, mul, div };
enum class Func { sqrt, ln, exp };
enum class Builtin { normx2, normy2, dotxy };

struct Expr {
  struct Number {
    double value;
  };
  struct Variable {
    bool fibre;  // false: x^index, true: y^index
    int index;   // 1-based
  };
  struct Reduce {
    Builtin which;
  };
  struct Negate {
    ExprPtr operand;
  };
  struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
  };
  struct Power {
    ExprPtr base;
    Rational exponent;
  };
  struct Call {
    Func func;
    ExprPtr arg;
  };

  std::variant<Number, Variable, Reduce, Negate, Binary, Power, Call> node;
};

ExprPtr make_number(double v);
ExprPtr make_variable(bool fibre, int index);
ExprPtr make_reduce(Builtin which);
ExprPtr make_negate(ExprPtr e);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_power(ExprPtr base, Rational exponent);
ExprPtr make_call(Func f, ExprPtr arg);

// Parses `text`; positions in errors are reported relative to (line,
// first_column), so callers embedding an expression in a larger file can
// pass its location.
ExprPtr parse_expression(std::string_view text, int line = 1, int first_column = 1);

// Canonical text: minimal parentheses, shortest round-trip number literals.
// parse_expression(print_expression(e)) is structurally equal to e.
std::string print_expression(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

// Largest x- and y-variable indices used (0 if none). Builtin reducers
// count as using every index up to the dimension, reported separately.
struct VariableUsage {
  int max_x = 0;
  int max_y = 0;
  bool uses_x_reducer = false;
  bool uses_y_reducer = false;
};
VariableUsage variable_usage(const Expr& e);

// Scalar operations for evaluating expressions over plain doubles, with the
// same failure modes as the jet versions.
namespace scalar_ops {
inline double checked_sqrt(double v) {
  if (v <= 0.0) throw BranchError("sqrt of a non-positive value");
  return std::sqrt(v);
}
inline double checked_log(double v) {
  if (v <= 0.0) throw BranchError("ln of a non-positive value");
  return std::log(v);
}
inline double checked_exp(double v) { return std::exp(v); }
inline double checked_pow(double v, double r) {
  if (v <= 0.0) throw BranchError("fractional power of a non-positive value");
  return std::pow(v, r);
}
inline double checked_div(double a, double b) {
  if (b == 0.0) throw PoleError("division by zero");
  return a / b;
}
}  // namespace scalar_ops

// Evaluates `e` with x^i = xs[i-1], y^i = ys[i-1]. S is double or a jet type;
// `one` is the multiplicative unit of S (a constant jet of the right
// signature), used to lift literals.
template <class S>
S evaluate(const Expr& e, const std::vector<S>& xs, const std::vector<S>& ys, const S& one) {
  using scalar_ops::checked_div;
  using scalar_ops::checked_exp;
  using scalar_ops::checked_log;
  using scalar_ops::checked_pow;
  using scalar_ops::checked_sqrt;
  auto rec = [&](const ExprPtr& sub) { return evaluate(*sub, xs, ys, one); };
  return std::visit(
      [&](const auto& n) -> S {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Expr::Number>) {
          return one * n.value;
        } else if constexpr (std::is_same_v<N, Expr::Variable>) {
          const auto& v = n.fibre ? ys : xs;
          if (n.index < 1 || static_cast<std::size_t>(n.index) > v.size())
            throw DimensionError(std::string("variable ") + (n.fibre ? "y" : "x") + std::to_string(n.index) +
                                 " exceeds dimension " + std::to_string(v.size()));
          return v[static_cast<std::size_t>(n.index) - 1];
        } else if constexpr (std::is_same_v<N, Expr::Reduce>) {
          S acc = one * 0.0;
          for (std::size_t i = 0; i < xs.size(); ++i) {
            switch (n.which) {
              case Builtin::normx2: acc = acc + xs[i] * xs[i]; break;
              case Builtin::normy2: acc = acc + ys[i] * ys[i]; break;
              case Builtin::dotxy: acc = acc + xs[i] * ys[i]; break;
            }
          }
          return acc;
        } else if constexpr (std::is_same_v<N, Expr::Negate>) {
          return -rec(n.operand);
        } else if constexpr (std::is_same_v<N, Expr::Binary>) {
          S a = rec(n.lhs);
          S b = rec(n.rhs);
          switch (n.op) {
            case BinaryOp::add: return a + b;
            case BinaryOp::sub: return a - b;
            case BinaryOp::mul: return a * b;
            case BinaryOp::div: return checked_div(a, b);
          }
          throw Error("unreachable binary operator");
        } else if constexpr (std::is_same_v<N, Expr::Power>) {
          S base = rec(n.base);
          if (n.exponent.den == 1) {
            std::int64_t k = n.exponent.num;
            const bool invert = k < 0;
            if (invert) k = -k;
            S result = one;
            S sq = base;
            while (k > 0) {
              if (k & 1) result = result * sq;
              k >>= 1;
              if (k > 0) sq = sq * sq;
            }
            return invert ? checked_div(one, result) : result;
          }
          return checked_pow(base, n.exponent.to_double());
        } else {
          S a = rec(n.arg);
          switch (n.func) {
            case Func::sqrt: return checked_sqrt(a);
            case Func::ln: return checked_log(a);
            case Func::exp: return checked_exp(a);
          }
          throw Error("unreachable function");
        }
      },
      e.node);
}

}  // namespace finsler
