#include "finsler/integrals.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "finsler/errors.hpp"

namespace finsler {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd r(m.n, m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) r(i, j) = m(i, j);
  return r;
}

double factorial(int a) {
  double r = 1.0;
  for (int k = 2; k <= a; ++k) r *= k;
  return r;
}

}  // namespace

std::vector<double> newton_from_traces(const std::vector<double>& f) {
  std::vector<double> g;
  for (int a = 1; a <= static_cast<int>(f.size()); ++a) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a, a);
    for (int i = 0; i < a; ++i) {
      for (int j = 0; j <= i; ++j) m(i, j) = f[static_cast<std::size_t>(i - j)];
      if (i + 1 < a) m(i, i + 1) = i + 1;
    }
    g.push_back(m.determinant() / factorial(a));
  }
  return g;
}

Matrix build_EE(const CurvaturePacket& packet) { return build_EE(packet.g_inv, packet.E, packet.F); }

TracesAndCharpoly traces_and_charpoly(const Matrix& EE) {
  const int n = EE.n;
  TracesAndCharpoly r;
  if (n < 2) return r;
  r.f = power_traces(EE, n - 1);
  r.c = charpoly(EE);
  r.c.pop_back();
  return r;
}

double bordered_determinant(const CurvaturePacket& packet) {
  const int n = packet.n;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) b(i, j) = 2.0 * packet.F * packet.E(i, j);
    b(i, n) = packet.F_y[static_cast<std::size_t>(i)];
    b(n, i) = packet.F_y[static_cast<std::size_t>(i)];
  }
  const double det_g = to_eigen(packet.g).determinant();
  if (det_g == 0.0) throw SingularMetricError("det g vanishes");
  return -b.determinant() / det_g;
}

double rank_one_determinant(const CurvaturePacket& packet) {
  const int n = packet.n;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      m(i, j) = 2.0 * packet.F * packet.E(i, j) + packet.F_y[static_cast<std::size_t>(i)] * packet.F_y[static_cast<std::size_t>(j)];
  const double det_g = to_eigen(packet.g).determinant();
  if (det_g == 0.0) throw SingularMetricError("det g vanishes");
  return m.determinant() / det_g;
}

FirstIntegralSet first_integrals(const CurvaturePacket& packet) {
  FirstIntegralSet s;
  const int n = packet.n;
  s.EE = build_EE(packet);
  const auto full = charpoly(s.EE);
  const auto tc = traces_and_charpoly(s.EE);
  s.f = tc.f;
  s.c = tc.c;
  s.c_n = full.back();
  s.det_EE = to_eigen(s.EE).determinant();

  const double scale = frobenius(s.EE);
  const auto newton = newton_from_traces(s.f);
  for (std::size_t a = 0; a < newton.size(); ++a) {
    const double denom = std::max(1.0, std::pow(scale, static_cast<double>(a + 1)));
    s.newton_residual = std::max(s.newton_residual, std::abs(s.c[a] - newton[a]) / denom);
  }
  s.bordered_value = bordered_determinant(packet);

  double tr = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) tr += packet.g_inv(i, j) * packet.E_cl(i, j);
  s.f1_cl = 2.0 * packet.F * tr;
  return s;
}

ClosedForms closed_forms(const PhasePoint& p) {
  if (p.x.size() != 3 || p.y.size() != 3) throw DimensionError("the closed forms are stated for n = 3");
  Quad xx = 0, yy = 0, xy = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    xx += Quad(p.x[i]) * p.x[i];
    yy += Quad(p.y[i]) * p.y[i];
    xy += Quad(p.x[i]) * p.y[i];
  }
  if (!(xx < 1)) throw DomainError("the closed forms need |x| < 1");
  if (yy == 0) throw DomainError("the closed forms need y != 0");
  const auto [g1, g2] = closed_forms_from_invariants(xx, yy, xy);
  return {static_cast<double>(g1), static_cast<double>(g2)};
}

// ---- registry --------------------------------------------------------------

namespace {

bool has_closed_forms(const MetricSpec& spec) {
  return spec.family == Family::funk_ball_berwald && spec.dimension == 3;
}

}  // namespace

std::vector<std::string> field_ids(const MetricSpec& spec) {
  std::vector<std::string> ids{"F"};
  for (int a = 1; a < spec.dimension; ++a) ids.push_back("f" + std::to_string(a));
  for (int a = 1; a < spec.dimension; ++a) ids.push_back("c" + std::to_string(a));
  ids.push_back("f1_cl");
  if (has_closed_forms(spec)) {
    ids.push_back("g1_paper");
    ids.push_back("g2_paper");
  }
  return ids;
}

FieldId parse_field(const MetricSpec& spec, const std::string& name) {
  FieldId id;
  id.name = name;
  const auto unknown = [&] { return UnknownFieldError("unknown scalar field '" + name + "'"); };
  if (name == "F") return id;
  if (name == "f1_cl") {
    id.kind = FieldKind::trace_cl;
    id.a = 1;
    return id;
  }
  if (name == "g1_paper" || name == "g2_paper") {
    if (!has_closed_forms(spec)) throw unknown();
    id.kind = name == "g1_paper" ? FieldKind::g1_paper : FieldKind::g2_paper;
    return id;
  }
  if (name.size() >= 2 && (name[0] == 'f' || name[0] == 'c') && name[1] != '0' &&
      std::all_of(name.begin() + 1, name.end(), [](char ch) { return ch >= '0' && ch <= '9'; }) &&
      name.size() <= 4) {
    const int a = std::stoi(name.substr(1));
    if (a < 1 || a >= spec.dimension) throw unknown();
    id.kind = name[0] == 'f' ? FieldKind::trace : FieldKind::charpoly;
    id.a = a;
    return id;
  }
  throw unknown();
}

int field_order(const FieldId& id) {
  switch (id.kind) {
    case FieldKind::F:
    case FieldKind::g1_paper:
    case FieldKind::g2_paper:
      return 2;
    case FieldKind::trace:
    case FieldKind::charpoly:
    case FieldKind::trace_cl:
      return 5;
  }
  return 5;
}

std::vector<double> evaluate_fields(const MetricSpec& spec, const std::vector<FieldId>& ids, const PhasePoint& p,
                                    GuardMode mode) {
  int order = 2;
  for (const auto& id : ids) order = std::max(order, field_order(id));
  const PipelineTower t = make_tower(spec, p, order, mode);
  std::vector<double> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(value_of(eval_field(t, id)));
  return out;
}

BracketResult poisson_bracket(const MetricSpec& spec, const std::string& fa, const std::string& fb,
                              const PhasePoint& p) {
  const FieldId a = parse_field(spec, fa);
  const FieldId b = parse_field(spec, fb);
  const int n = spec.dimension;
  if (static_cast<int>(p.x.size()) != n || static_cast<int>(p.y.size()) != n)
    throw DimensionError("phase point dimension does not match the metric (" + std::to_string(n) + ")");
  check_phase_point(spec, p);
  // N^i_j needs order 3 in the value part.
  const int order = std::max({3, field_order(a), field_order(b)});

  BracketResult r;
  r.grad_a.assign(static_cast<std::size_t>(2 * n), 0.0);
  r.grad_b.assign(static_cast<std::size_t>(2 * n), 0.0);
  Matrix g_inv(n), N(n);
  for (int d = 0; d < 2 * n; ++d) {
    const Tower<QuadDual> t(spec, seed_phase_point_dual_as<Quad>(p, order, d));
    r.grad_a[static_cast<std::size_t>(d)] = static_cast<double>(eval_field(t, a).d);
    r.grad_b[static_cast<std::size_t>(d)] = static_cast<double>(eval_field(t, b).d);
    if (d == 0) {
      g_inv = to_double(values(t.g_inv()));
      N = to_double(values(t.N()));
    }
  }

  // δf/δx^i = ∂f/∂x^i − N^k_i ∂f/∂y^k
  const auto horizontal = [&](const Vector& grad) {
    Vector h(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double v = grad[static_cast<std::size_t>(i)];
      for (int k = 0; k < n; ++k) v -= N(k, i) * grad[static_cast<std::size_t>(n + k)];
      h[static_cast<std::size_t>(i)] = v;
    }
    return h;
  };
  const Vector ha = horizontal(r.grad_a);
  const Vector hb = horizontal(r.grad_b);
  double value = 0.0, scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double t1 = r.grad_a[static_cast<std::size_t>(n + j)] * hb[static_cast<std::size_t>(i)];
      const double t2 = r.grad_b[static_cast<std::size_t>(n + j)] * ha[static_cast<std::size_t>(i)];
      value += g_inv(i, j) * (t1 - t2);
      scale += std::abs(g_inv(i, j)) * (std::abs(t1) + std::abs(t2));
    }
  r.value = 0.5 * value;
  r.scale = 0.5 * scale;
  return r;
}

}  // namespace finsler
