#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "finsler/expression.hpp"
#include "finsler/jet.hpp"

using namespace finsler;

namespace {

double eval(const std::string& text, std::vector<double> x, std::vector<double> y) {
  return evaluate(*parse_expression(text), x, y, 1.0);
}

void check_round_trip(const std::string& text) {
  const ExprPtr e = parse_expression(text);
  const std::string printed = print_expression(*e);
  const ExprPtr again = parse_expression(printed);
  CHECK_MESSAGE(structurally_equal(*e, *again), text << " -> " << printed);
  CHECK(print_expression(*again) == printed);
}

}  // namespace

TEST_CASE("evaluation of the grammar") {
  CHECK(eval("1 + 2*3", {}, {}) == 7.0);
  CHECK(eval("(2^3)^2", {}, {}) == doctest::Approx(64.0));
  CHECK_THROWS_AS(parse_expression("2^3^1"), SyntaxError);
  CHECK(eval("-2^2", {}, {}) == -4.0);
  CHECK(eval("(1 - 3)/4", {}, {}) == -0.5);
  CHECK(eval("x1*y2 - x2*y1", {1, 2}, {3, 4}) == 4 - 6);
  CHECK(eval("normx2 + normy2 + dotxy", {1, 2}, {3, 4}) == 5 + 25 + 11);
  CHECK(eval("sqrt(normy2)", {0, 0}, {3, 4}) == 5.0);
  CHECK(eval("ln(exp(2.5))", {}, {}) == doctest::Approx(2.5));
  CHECK(eval("4^(1/2)", {}, {}) == doctest::Approx(2.0));
  CHECK(eval("8^(-2/3)", {}, {}) == doctest::Approx(0.25));
  CHECK(eval("y1^-2", {0}, {2}) == 0.25);
  CHECK(eval("1.5e2 + .5", {}, {}) == 150.5);
}

TEST_CASE("evaluation errors") {
  CHECK_THROWS_AS(eval("sqrt(-1)", {}, {}), BranchError);
  CHECK_THROWS_AS(eval("ln(0)", {}, {}), BranchError);
  CHECK_THROWS_AS(eval("1/(x1 - x1)", {1}, {1}), PoleError);
  CHECK_THROWS_AS(eval("y3", {1, 2}, {1, 2}), DimensionError);
}

TEST_CASE("syntax errors carry line and column") {
  try {
    parse_expression("1 + * 2", 4, 10);
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 4);
    CHECK(e.column() == 14);
  }
  CHECK_THROWS_AS(parse_expression("sqrt(2"), SyntaxError);
  CHECK_THROWS_AS(parse_expression("abs(x1)"), SyntaxError);
  CHECK_THROWS_AS(parse_expression("x0"), SyntaxError);
  CHECK_THROWS_AS(parse_expression("x1^y1"), SyntaxError);
  CHECK_THROWS_AS(parse_expression("2^1.5"), SyntaxError);
  CHECK_THROWS_AS(parse_expression("1 2"), SyntaxError);
  CHECK_THROWS_AS(parse_expression(""), SyntaxError);
  CHECK_THROWS_AS(parse_expression("2^(1/0)"), SyntaxError);
}

TEST_CASE("parse print parse is the identity") {
  for (const char* text :
       {"1 + 2*3", "(1 + 2)*3", "1 - (2 - 3)", "1 - 2 - 3", "2/(3/4)", "2/3/4", "-x1^2",
        "(-x1)^2", "sqrt(normy2)^3 + ln(1 + normx2)*exp(-dotxy)", "y1^(1/3)*y2^(-2/3)", "x1*y2^3/y1",
        "(normy2 - (normx2*normy2 - dotxy^2))/(1 - normx2)", "0.1 + 1e-300 + 123456789.125", "--x1",
        "-(x1 + y1)", "x1*(y1*y2)", "(x1*y1)*y2", "(2^3)^2"}) {
    check_round_trip(text);
  }
}

TEST_CASE("random trees round trip") {
  std::mt19937_64 rng(5);
  std::function<ExprPtr(int)> gen = [&](int depth) -> ExprPtr {
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 7 : 2);
    switch (pick(rng)) {
      case 0: return make_number(std::uniform_real_distribution<double>(0.0, 10.0)(rng));
      case 1: return make_variable(rng() % 2 == 0, static_cast<int>(rng() % 3) + 1);
      case 2: return make_reduce(static_cast<Builtin>(rng() % 3));
      case 3: return make_negate(gen(depth - 1));
      case 4: return make_power(gen(depth - 1), Rational{static_cast<std::int64_t>(rng() % 7) - 3, 1 + static_cast<std::int64_t>(rng() % 3)});
      case 5: return make_call(static_cast<Func>(rng() % 3), gen(depth - 1));
      default: return make_binary(static_cast<BinaryOp>(rng() % 4), gen(depth - 1), gen(depth - 1));
    }
  };
  for (int i = 0; i < 300; ++i) {
    const ExprPtr e = gen(4);
    const std::string printed = print_expression(*e);
    const ExprPtr again = parse_expression(printed);
    CHECK_MESSAGE(structurally_equal(*e, *again), printed);
  }
}

TEST_CASE("variable usage") {
  const auto u = variable_usage(*parse_expression("x2*y3 + normx2"));
  CHECK(u.max_x == 2);
  CHECK(u.max_y == 3);
  CHECK(u.uses_x_reducer);
  CHECK_FALSE(u.uses_y_reducer);
}

TEST_CASE("expressions evaluate over jets") {
  const ExprPtr e = parse_expression("x1*y1^2 + sqrt(normy2)");
  const std::vector<Jet> xs = {Jet::variable(4, 3, 0, 0.5), Jet::variable(4, 3, 1, 0.1)};
  const std::vector<Jet> ys = {Jet::variable(4, 3, 2, 3.0), Jet::variable(4, 3, 3, 4.0)};
  const Jet r = evaluate(*e, xs, ys, Jet::constant(4, 3, 1.0));
  CHECK(r.value() == doctest::Approx(0.5 * 9 + 5));
  CHECK(r.partial({0, 2}) == doctest::Approx(6.0));
  CHECK(r.partial({2}) == doctest::Approx(2 * 0.5 * 3 + 3.0 / 5));
}
