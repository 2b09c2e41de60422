#include "finsler/expression.hpp"

#include <cctype>
#include <charconv>
#include <numeric>

namespace finsler {

ExprPtr make_number(double v) {
  if (!std::isfinite(v)) throw ConfigError("non-finite numeric literal");
  if (std::signbit(v) && v != 0.0) return make_negate(make_number(-v));
  return std::make_shared<const Expr>(Expr{Expr::Number{v == 0.0 ? 0.0 : v}});
}
ExprPtr make_variable(bool fibre, int index) {
  return std::make_shared<const Expr>(Expr{Expr::Variable{fibre, index}});
}
ExprPtr make_reduce(Builtin which) { return std::make_shared<const Expr>(Expr{Expr::Reduce{which}}); }
ExprPtr make_negate(ExprPtr e) { return std::make_shared<const Expr>(Expr{Expr::Negate{std::move(e)}}); }
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<const Expr>(Expr{Expr::Binary{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr make_power(ExprPtr base, Rational exponent) {
  if (exponent.den == 0) throw ConfigError("zero denominator in exponent");
  if (exponent.den < 0) {
    exponent.num = -exponent.num;
    exponent.den = -exponent.den;
  }
  const std::int64_t g = std::gcd(exponent.num, exponent.den);
  if (g > 1) {
    exponent.num /= g;
    exponent.den /= g;
  }
  return std::make_shared<const Expr>(Expr{Expr::Power{std::move(base), exponent}});
}
ExprPtr make_call(Func f, ExprPtr arg) { return std::make_shared<const Expr>(Expr{Expr::Call{f, std::move(arg)}}); }

namespace {

class Parser {
 public:
  Parser(std::string_view text, int line, int first_column) : text_(text), line_(line), column0_(first_column) {}

  ExprPtr parse() {
    skip_space();
    if (at_end()) fail("empty expression");
    ExprPtr e = parse_sum();
    skip_space();
    if (!at_end()) fail(std::string("unexpected character '") + peek() + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, pos_); }

  [[noreturn]] void fail_at(const std::string& msg, std::size_t pos) const {
    int line = line_;
    int column = column0_;
    for (std::size_t i = 0; i < pos && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw SyntaxError(msg, line, column);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  ExprPtr parse_sum() {
    ExprPtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(BinaryOp::add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make_binary(BinaryOp::sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(BinaryOp::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_binary(BinaryOp::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_unary() {
    if (accept('-')) return make_negate(parse_unary());
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_primary();
    if (!accept('^')) return base;
    return make_power(base, parse_exponent());
  }

  std::int64_t parse_integer() {
    skip_space();
    const std::size_t start = pos_;
    bool negative = false;
    if (peek() == '-') {
      negative = true;
      ++pos_;
      skip_space();
    }
    const std::size_t digits = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (digits == pos_) fail_at("exponent must be an integer or rational literal", start);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + digits, text_.data() + pos_, v);
    if (ec != std::errc()) fail_at("integer literal out of range", digits);
    return negative ? -v : v;
  }

  Rational parse_exponent() {
    skip_space();
    if (peek() == '(') {
      ++pos_;
      Rational r{parse_integer(), 1};
      if (accept('/')) {
        const std::size_t at = pos_;
        r.den = parse_integer();
        if (r.den == 0) fail_at("zero denominator in exponent", at);
      }
      expect(')');
      return r;
    }
    return Rational{parse_integer(), 1};
  }

  ExprPtr parse_primary() {
    skip_space();
    if (at_end()) fail("unexpected end of expression");
    const char c = peek();
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_sum();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr parse_number() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) ++pos_;
    if (!at_end() && (peek() == 'e' || peek() == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(v))
      fail_at("malformed number '" + std::string(text_.substr(start, pos_ - start)) + "'", start);
    return make_number(v);
  }

  ExprPtr parse_identifier() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
    const std::string_view id = text_.substr(start, pos_ - start);

    if (id == "normx2") return make_reduce(Builtin::normx2);
    if (id == "normy2") return make_reduce(Builtin::normy2);
    if (id == "dotxy") return make_reduce(Builtin::dotxy);
    if (id == "sqrt" || id == "ln" || id == "exp") {
      const Func f = id == "sqrt" ? Func::sqrt : id == "ln" ? Func::ln : Func::exp;
      skip_space();
      if (peek() != '(') fail("expected '(' after function name");
      ++pos_;
      ExprPtr arg = parse_sum();
      expect(')');
      return make_call(f, arg);
    }
    if (id.size() >= 2 && (id[0] == 'x' || id[0] == 'y')) {
      int index = 0;
      auto [ptr, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), index);
      if (ec == std::errc() && ptr == id.data() + id.size() && id[1] != '0') {
        if (index < 1) fail_at("variable indices start at 1", start);
        return make_variable(id[0] == 'y', index);
      }
    }
    fail_at("unknown identifier '" + std::string(id) + "'", start);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_;
  int column0_;
};

enum Precedence { kSum = 1, kProduct = 2, kUnary = 3, kPower = 4, kPrimary = 5 };

int precedence(const Expr& e) {
  return std::visit(
      [](const auto& n) -> int {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Expr::Binary>) {
          return (n.op == BinaryOp::add || n.op == BinaryOp::sub) ? kSum : kProduct;
        } else if constexpr (std::is_same_v<N, Expr::Negate>) {
          return kUnary;
        } else if constexpr (std::is_same_v<N, Expr::Power>) {
          return kPower;
        } else {
          return kPrimary;
        }
      },
      e.node);
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void print(const Expr& e, std::string& out);

void print_child(const Expr& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print(child, out);
  if (parens) out += ')';
}

void print(const Expr& e, std::string& out) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Expr::Number>) {
          out += format_number(n.value);
        } else if constexpr (std::is_same_v<N, Expr::Variable>) {
          out += n.fibre ? 'y' : 'x';
          out += std::to_string(n.index);
        } else if constexpr (std::is_same_v<N, Expr::Reduce>) {
          out += n.which == Builtin::normx2 ? "normx2" : n.which == Builtin::normy2 ? "normy2" : "dotxy";
        } else if constexpr (std::is_same_v<N, Expr::Negate>) {
          out += '-';
          print_child(*n.operand, precedence(*n.operand) < kUnary, out);
        } else if constexpr (std::is_same_v<N, Expr::Binary>) {
          const int p = (n.op == BinaryOp::add || n.op == BinaryOp::sub) ? kSum : kProduct;
          print_child(*n.lhs, precedence(*n.lhs) < p, out);
          switch (n.op) {
            case BinaryOp::add: out += " + "; break;
            case BinaryOp::sub: out += " - "; break;
            case BinaryOp::mul: out += '*'; break;
            case BinaryOp::div: out += '/'; break;
          }
          print_child(*n.rhs, precedence(*n.rhs) <= p, out);
        } else if constexpr (std::is_same_v<N, Expr::Power>) {
          print_child(*n.base, precedence(*n.base) < kPrimary, out);
          out += '^';
          if (n.exponent.den == 1) {
            out += std::to_string(n.exponent.num);
          } else {
            out += '(' + std::to_string(n.exponent.num) + '/' + std::to_string(n.exponent.den) + ')';
          }
        } else {
          out += n.func == Func::sqrt ? "sqrt(" : n.func == Func::ln ? "ln(" : "exp(";
          print(*n.arg, out);
          out += ')';
        }
      },
      e.node);
}

void collect_usage(const Expr& e, VariableUsage& u) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Expr::Variable>) {
          int& m = n.fibre ? u.max_y : u.max_x;
          m = std::max(m, n.index);
        } else if constexpr (std::is_same_v<N, Expr::Reduce>) {
          if (n.which != Builtin::normy2) u.uses_x_reducer = true;
          if (n.which != Builtin::normx2) u.uses_y_reducer = true;
        } else if constexpr (std::is_same_v<N, Expr::Negate>) {
          collect_usage(*n.operand, u);
        } else if constexpr (std::is_same_v<N, Expr::Binary>) {
          collect_usage(*n.lhs, u);
          collect_usage(*n.rhs, u);
        } else if constexpr (std::is_same_v<N, Expr::Power>) {
          collect_usage(*n.base, u);
        } else if constexpr (std::is_same_v<N, Expr::Call>) {
          collect_usage(*n.arg, u);
        }
      },
      e.node);
}

}  // namespace

ExprPtr parse_expression(std::string_view text, int line, int first_column) {
  return Parser(text, line, first_column).parse();
}

std::string print_expression(const Expr& e) {
  std::string out;
  print(e, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& na) -> bool {
        using N = std::decay_t<decltype(na)>;
        const auto& nb = std::get<N>(b.node);
        if constexpr (std::is_same_v<N, Expr::Number>) {
          return na.value == nb.value;
        } else if constexpr (std::is_same_v<N, Expr::Variable>) {
          return na.fibre == nb.fibre && na.index == nb.index;
        } else if constexpr (std::is_same_v<N, Expr::Reduce>) {
          return na.which == nb.which;
        } else if constexpr (std::is_same_v<N, Expr::Negate>) {
          return structurally_equal(*na.operand, *nb.operand);
        } else if constexpr (std::is_same_v<N, Expr::Binary>) {
          return na.op == nb.op && structurally_equal(*na.lhs, *nb.lhs) && structurally_equal(*na.rhs, *nb.rhs);
        } else if constexpr (std::is_same_v<N, Expr::Power>) {
          return na.exponent == nb.exponent && structurally_equal(*na.base, *nb.base);
        } else {
          return na.func == nb.func && structurally_equal(*na.arg, *nb.arg);
        }
      },
      a.node);
}

VariableUsage variable_usage(const Expr& e) {
  VariableUsage u;
  collect_usage(e, u);
  return u;
}

}  // namespace finsler
