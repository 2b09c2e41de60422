#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "finsler/metric.hpp"
#include "finsler/sampling.hpp"

using namespace finsler;

namespace {

const std::vector<std::string> kCatalog = {"euclidean3", "funk3", "sphere2", "warped2", "funk3_expr", "randers3"};

MetricSpec catalog(const std::string& name) {
  return load_metric_file(std::string(FINSLER_METRICS_DIR) + "/" + name + ".cfg");
}

Jet F2_jet(const MetricSpec& spec, const PhasePoint& p, int order) {
  return eval_F2(spec, seed_phase_point(p, order));
}

}  // namespace

TEST_CASE("built-in families evaluate F²") {
  const MetricSpec e = parse_metric("[metric]\ndimension = 3\nfamily = euclidean\n");
  CHECK(e.family == Family::euclidean);
  CHECK(eval_F2_value(e, {{7, -2, 1}, {3, 4, 0}}) == 25.0);

  const MetricSpec f = funk_ball_berwald_metric(3);
  CHECK(eval_F2_value(f, {{0, 0, 0}, {1, 0, 0}}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(eval_F2_value(f, {{1, 0, 0}, {1, 0, 0}}), DomainError);
  CHECK_THROWS_AS(eval_F2_value(f, {{0.6, 0.8, 0}, {1, 0, 0}}), DomainError);
  CHECK_THROWS_AS(eval_F2_value(f, {{0, 0, 0}, {0, 0, 0}}), DomainError);
}

TEST_CASE("custom expressions are checked for homogeneity") {
  CHECK_NOTHROW(parse_metric("[metric]\ndimension = 2\nfamily = custom\nexpression = normy2 + x1*y2^3/y1\n"));
  CHECK_THROWS_AS(parse_metric("[metric]\ndimension = 2\nfamily = custom\nexpression = normy2 + y1\n"),
                  HomogeneityError);
  CHECK_THROWS_AS(parse_metric("[metric]\ndimension = 2\nfamily = custom\nexpression = normy2 + y3^2\n"),
                  DimensionError);
  CHECK_THROWS_AS(parse_metric("[metric]\ndimension = 2\nfamily = custom\nexpression = normy2 + x3*y1^2\n"),
                  DimensionError);
}

TEST_CASE("config errors") {
  try {
    parse_metric("[metric]\ndimension = 2\nfamily = custom\nexpression = normy2 + * 2\n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 4);
    CHECK(e.column() == 23);
  }
  CHECK_THROWS_AS(parse_metric("[metric]\ndimension = 2\nfamily = euclidean\ncolour = red\n"), SyntaxError);
  CHECK_THROWS_AS(parse_metric("[metric]\ndimension = 2\ndimension = 3\nfamily = euclidean\n"), SyntaxError);
  CHECK_THROWS_AS(parse_metric("[metric]\nfamily = euclidean\n"), ConfigError);
  CHECK_THROWS_AS(parse_metric("[metric]\ndimension = 2\nfamily = hyperbolic\n"), ConfigError);
  CHECK_THROWS_AS(parse_metric("[metric]\ndimension = 2\nfamily = euclidean\nsigma = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_metric("[metric]\ndimension = 2\nfamily = euclidean\nsigma = y1^2\n"), ConfigError);
  CHECK_THROWS_AS(parse_metric("[metric]\ndimension = 2\nfamily = riemannian\n[components]\ng11 = 1\ng22 = 1\n"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_metric("[metric]\ndimension = 2\nfamily = riemannian\n[components]\ng11 = 1\ng12 = x1\ng21 = x2\n"
                   "g22 = 1\n"),
      ConfigError);
  CHECK_THROWS_AS(load_metric_file("/nonexistent/metric.cfg"), ConfigError);
}

TEST_CASE("catalog round trips through the printer") {
  for (const auto& name : kCatalog) {
    const MetricSpec a = catalog(name);
    const MetricSpec b = parse_metric(print_metric(a));
    CHECK_MESSAGE(structurally_equal(a, b), name);
    CHECK(print_metric(b) == print_metric(a));
  }
}

TEST_CASE("riemannian components are read off") {
  const MetricSpec w = catalog("warped2");
  const Jet f2 = F2_jet(w, {{1, 0}, {1, 1}}, 2);
  CHECK(f2.value() == doctest::Approx(3.0));
  CHECK(f2.partial({2, 2}) / 2 == doctest::Approx(1.0));
  CHECK(f2.partial({3, 3}) / 2 == doctest::Approx(2.0));
  CHECK(f2.partial({2, 3}) == doctest::Approx(0.0));
}

TEST_CASE("Euler identities hold on every catalog metric") {
  for (const auto& name : kCatalog) {
    const MetricSpec spec = catalog(name);
    const int n = spec.dimension;
    for (const auto& p : sample_phase_points(spec, 200, 42)) {
      const Jet f2 = F2_jet(spec, p, 2);
      double first = 0.0, second = 0.0;
      for (int i = 0; i < n; ++i) {
        first += p.y[static_cast<std::size_t>(i)] * f2.partial({n + i});
        for (int j = 0; j < n; ++j)
          second += p.y[static_cast<std::size_t>(i)] * p.y[static_cast<std::size_t>(j)] * f2.partial({n + i, n + j});
      }
      const double ref = 2.0 * f2.value();
      CHECK_MESSAGE(std::abs(first - ref) <= 1e-10 * ref, name);
      CHECK_MESSAGE(std::abs(second - ref) <= 1e-10 * ref, name);
    }
  }
}

TEST_CASE("riemannian F² is quadratic in y") {
  for (const auto& name : {"sphere2", "warped2", "euclidean3"}) {
    const MetricSpec spec = catalog(name);
    const int n = spec.dimension;
    for (const auto& p : sample_phase_points(spec, 50, 7)) {
      const Jet f2 = F2_jet(spec, p, 3);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) CHECK(std::abs(f2.partial({n + i, n + j, n + k})) <= 1e-12);
    }
  }
}

TEST_CASE("funk metric is positive and 1-homogeneous") {
  const MetricSpec f = funk_ball_berwald_metric(3);
  const MetricSpec g = catalog("funk3_expr");
  for (const auto& p : sample_phase_points(f, 200, 3)) {
    const double F = std::sqrt(eval_F2_value(f, p));
    CHECK(F > 0.0);
    for (double lambda : {2.0, 0.5, 3.0}) {
      PhasePoint q = p;
      for (auto& v : q.y) v *= lambda;
      CHECK(std::sqrt(eval_F2_value(f, q)) == doctest::Approx(lambda * F).epsilon(1e-12));
    }
    CHECK(eval_F2_value(g, p) == doctest::Approx(F * F).epsilon(1e-12));
  }
}

TEST_CASE("projective factor") {
  const MetricSpec f = funk_ball_berwald_metric(3);
  const Jet P = eval_projective_factor(f, seed_phase_point({{0, 0, 0}, {1, 0, 0}}, 1));
  CHECK(P.value() == doctest::Approx(1.0));
  const Jet Q = eval_projective_factor(f, seed_phase_point({{0, 0, 0}, {1, -2, 2}}, 1));
  CHECK(Q.value() == doctest::Approx(3.0));
  CHECK_THROWS_AS(eval_projective_factor(euclidean_metric(3), seed_phase_point({{0, 0, 0}, {1, 0, 0}}, 1)),
                  FamilyError);
}

TEST_CASE("sigma") {
  const MetricSpec s = with_sigma(euclidean_metric(2), parse_expression("exp(x1)"));
  const Jet sj = eval_sigma(s, seed_phase_point({{0.5, 0}, {1, 0}}, 2));
  CHECK(sj.value() == doctest::Approx(std::exp(0.5)));
  CHECK(sj.partial({0, 0}) == doctest::Approx(std::exp(0.5)));
}
