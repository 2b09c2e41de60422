#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <random>

#include "finsler/integrals.hpp"
#include "finsler/sampling.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace finsler;
using support::catalog;

namespace {

const PhasePoint kOrigin3{{0, 0, 0}, {1, 0, 0}};

Matrix diag(std::initializer_list<double> d) {
  Matrix m(static_cast<int>(d.size()), 0.0);
  int i = 0;
  for (double v : d) m(i, i) = v, ++i;
  return m;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("traces and characteristic coefficients by hand") {
  const auto r = traces_and_charpoly(diag({0, 4, 4}));
  REQUIRE(r.f.size() == 2);
  CHECK(r.f[0] == 8.0);
  CHECK(r.f[1] == 32.0);
  CHECK(r.c[0] == 8.0);
  CHECK(r.c[1] == 16.0);
  CHECK(0.5 * (r.f[0] * r.f[0] - r.f[1]) == r.c[1]);

  for (int n = 2; n <= 5; ++n) {
    const auto z = traces_and_charpoly(Matrix(n, 0.0));
    for (double v : z.f) CHECK(v == 0.0);
    for (double v : z.c) CHECK(v == 0.0);
  }
}

TEST_CASE("Faddeev–LeVerrier agrees with a Vandermonde fit of det(M + ΛI)") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int n = 2; n <= 5; ++n)
    for (int trial = 0; trial < 20; ++trial) {
      Matrix m(n);
      Eigen::MatrixXd e(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) e(i, j) = m(i, j) = u(rng);
      const auto fl = charpoly(m);
      const auto fit = oracle::charpoly_by_fit(e);
      for (int k = 0; k < n; ++k)
        CHECK(rel(fl[static_cast<std::size_t>(k)], fit[static_cast<std::size_t>(k)]) <= 1e-9);

      const auto newton = newton_from_traces(power_traces(m, n));
      for (int k = 0; k < n; ++k)
        CHECK(rel(newton[static_cast<std::size_t>(k)], fl[static_cast<std::size_t>(k)]) <= 1e-9);
    }
}

TEST_CASE("𝓔 examples") {
  const auto funk = compute_packet(catalog("funk3"), kOrigin3);
  const Matrix ee = build_EE(funk);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(ee(i, j) - (i == j && i > 0 ? 4.0 : 0.0)) < 1e-13);
  const auto fi = first_integrals(funk);
  CHECK(fi.f[0] == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(fi.f[1] == doctest::Approx(32.0).epsilon(1e-14));
  CHECK(fi.c[0] == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(fi.c[1] == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(fi.bordered_value == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(rank_one_determinant(funk) == doctest::Approx(16.0).epsilon(1e-14));
  CHECK(fi.f1_cl == doctest::Approx(8.0).epsilon(1e-14));

  const auto euc = first_integrals(compute_packet(euclidean_metric(3), {{1, 2, 3}, {0.3, 0.4, 0.5}}));
  CHECK(support::max_abs(euc.EE) == 0.0);
  CHECK(support::max_abs(euc.f) == 0.0);
  CHECK(support::max_abs(euc.c) == 0.0);
  CHECK(euc.bordered_value == 0.0);
}

TEST_CASE("first-integral identities on the catalog") {
  for (const auto& name : support::catalog_names()) {
    CAPTURE(name);
    const MetricSpec spec = catalog(name);
    for (const auto& p : sample_phase_points(spec, 15, 71)) {
      const auto pk = compute_packet(spec, p, 5);
      const auto fi = first_integrals(pk);
      const int n = pk.n;
      const double scale = frobenius(fi.EE);
      CHECK(fi.newton_residual <= 1e-9);
      CHECK(std::abs(fi.bordered_value - fi.c.back()) <= 1e-8 * std::max(1.0, std::abs(fi.c.back())));
      CHECK(std::abs(rank_one_determinant(pk) - fi.bordered_value) <= 1e-8 * std::max(1.0, std::abs(fi.c.back())));
      CHECK(std::abs(fi.det_EE) <= 1e-8 * std::max(1.0, std::pow(scale, n)));
      CHECK(std::abs(fi.c_n) <= 1e-8 * std::max(1.0, std::pow(scale, n)));
      CHECK(fi.f[0] == fi.c[0]);
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += fi.EE(i, j) * p.y[static_cast<std::size_t>(j)];
        CHECK(std::abs(s) <= 1e-9 * std::max(scale, 1e-3) * norm(p.y));
      }

      // 0-homogeneity
      const auto fi2 = first_integrals(compute_packet(spec, support::scaled(p, 2.0), 5));
      for (std::size_t a = 0; a < fi.f.size(); ++a) {
        CHECK(std::abs(fi2.f[a] - fi.f[a]) <= 1e-9 * std::max(1.0, std::abs(fi.f[a])));
        CHECK(std::abs(fi2.c[a] - fi.c[a]) <= 1e-9 * std::max(1.0, std::abs(fi.c[a])));
      }
      for (std::size_t k = 0; k < fi.EE.a.size(); ++k)
        CHECK(std::abs(fi2.EE.a[k] - fi.EE.a[k]) <= 1e-9 * std::max(1.0, scale));
    }
  }
}

TEST_CASE("closed forms for the three-dimensional Funk-type metric") {
  for (const auto& y : {Vector{1, 0, 0}, Vector{0.3, -2.0, 0.7}, Vector{0, 0, 5}}) {
    const auto c = closed_forms({{0, 0, 0}, y});
    CHECK(c.g1 == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(c.g2 == doctest::Approx(1.0).epsilon(1e-15));
  }
  const MetricSpec funk = catalog("funk3");
  for (const auto& p : sample_phase_points(funk, 20, 81)) {
    const auto a = closed_forms(p);
    const auto b = closed_forms(support::scaled(p, 2.0));
    CHECK(std::abs(a.g1 - b.g1) <= 1e-12 * std::max(1.0, std::abs(a.g1)));
    CHECK(std::abs(a.g2 - b.g2) <= 1e-12 * std::max(1.0, std::abs(a.g2)));
    const auto v = evaluate_fields(funk, {parse_field(funk, "g1_paper"), parse_field(funk, "g2_paper")}, p);
    CHECK(v[0] == doctest::Approx(a.g1).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(a.g2).epsilon(1e-14));
  }
  CHECK_THROWS_AS(closed_forms({{1, 0, 0}, {1, 0, 0}}), DomainError);
  CHECK_THROWS_AS(closed_forms({{0.1, 0, 0}, {0, 0, 0}}), DomainError);
  CHECK_THROWS_AS(closed_forms({{0, 0}, {1, 0}}), DimensionError);
}

TEST_CASE("scalar field registry") {
  const MetricSpec funk = catalog("funk3");
  const auto ids = field_ids(funk);
  const std::vector<std::string> expected{"F", "f1", "f2", "c1", "c2", "f1_cl", "g1_paper", "g2_paper"};
  CHECK(ids == expected);
  const MetricSpec euc = euclidean_metric(3);
  CHECK(field_ids(euc).size() == 6);
  for (const std::string bad : {"f3", "c0", "f0", "foo", "", "f", "c1x", "F2", "f01"})
    CHECK_THROWS_AS(parse_field(funk, bad), UnknownFieldError);
  CHECK_THROWS_AS(parse_field(euc, "g1_paper"), UnknownFieldError);
  CHECK_THROWS_AS(parse_field(catalog("funk3_expr"), "g2_paper"), UnknownFieldError);

  std::vector<FieldId> parsed;
  for (const auto& id : ids) parsed.push_back(parse_field(funk, id));
  const auto v = evaluate_fields(funk, parsed, kOrigin3);
  const std::vector<double> hand{1, 8, 32, 8, 16, 8, -0.25, 1};
  for (std::size_t k = 0; k < hand.size(); ++k) CHECK(v[k] == doctest::Approx(hand[k]).epsilon(1e-13));
}

TEST_CASE("Poisson bracket basics") {
  const MetricSpec funk = catalog("funk3");
  for (const auto& p : sample_phase_points(funk, 4, 91)) {
    const auto self = poisson_bracket(funk, "c2", "c2", p);
    CHECK(self.value == 0.0);
    const auto fc = poisson_bracket(funk, "F", "c1", p);
    CHECK(std::abs(fc.value) <= 1e-9 * fc.scale);
    const auto cc = poisson_bracket(funk, "c1", "c2", p);
    CHECK(std::abs(cc.value) <= 1e-6 * cc.scale);
    const auto ab = poisson_bracket(funk, "f1", "f2", p);
    const auto ba = poisson_bracket(funk, "f2", "f1", p);
    CHECK(ab.value == doctest::Approx(-ba.value).epsilon(1e-12));
  }
  // f1 vanishes identically for euclidean metrics: a constant field
  const MetricSpec euc = euclidean_metric(3);
  const auto z = poisson_bracket(euc, "f1", "F", {{0.1, 0.2, 0.3}, {1, -1, 0.5}});
  CHECK(z.value == 0.0);
  CHECK(support::max_abs(z.grad_a) == 0.0);
  CHECK_THROWS_AS(poisson_bracket(funk, "f1", "nope", kOrigin3), UnknownFieldError);
}

TEST_CASE("dual-layer gradients match one extra jet order") {
  // f1 = tr 𝓔 from an order-6 tower carries its first partials as jets.
  const MetricSpec funk = catalog("funk3");
  for (const auto& p : sample_phase_points(funk, 3, 101)) {
    const PipelineTower t = make_tower(funk, p, 6);
    const auto& gi = t.g_inv();
    const auto& E = t.E_berwald();
    const auto F = t.F().truncated(1);
    QuadJet tr = QuadJet::constant(6, 1, 0);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) tr += gi(i, k).truncated(1) * E(k, i);
    const QuadJet f1 = 2.0 * F * tr;
    const auto b = poisson_bracket(funk, "f1", "F", p);
    for (int d = 0; d < 6; ++d) {
      const double expected = value_of(f1.derivative(d).value());
      CHECK(std::abs(b.grad_a[static_cast<std::size_t>(d)] - expected) <= 1e-10 * std::max(1.0, std::abs(expected)));
      const double gF = value_of(t.F().derivative(d).value());
      CHECK(std::abs(b.grad_b[static_cast<std::size_t>(d)] - gF) <= 1e-12 * std::max(1.0, std::abs(gF)));
    }
  }
}

TEST_CASE("closed-form gradients match central differences") {
  const MetricSpec funk = catalog("funk3");
  const PhasePoint p{{0.2, -0.1, 0.3}, {0.5, 1.0, -0.4}};
  const auto b = poisson_bracket(funk, "g1_paper", "g2_paper", p);
  const oracle::ScalarFn g1 = [](std::span<const double> z) {
    return closed_forms({{z[0], z[1], z[2]}, {z[3], z[4], z[5]}}).g1;
  };
  const std::vector<double> z0{0.2, -0.1, 0.3, 0.5, 1.0, -0.4};
  for (int d = 0; d < 6; ++d) {
    std::vector<int> alpha(6, 0);
    alpha[static_cast<std::size_t>(d)] = 1;
    const double fd = oracle::richardson_partial(g1, z0, alpha, 1e-2);
    CHECK(rel(b.grad_a[static_cast<std::size_t>(d)], fd) <= 1e-8);
  }
}
