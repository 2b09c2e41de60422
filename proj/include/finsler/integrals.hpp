#pragma once

// First integrals built from the mean Berwald curvature.
//
//   𝓔^i_j = 2F g^{ik} E_kj,   f_a = tr 𝓔^a,
//   det(𝓔 + ΛI) = Λ^n + c_1 Λ^{n-1} + ... + c_{n-1} Λ   (c_n = 0).

#include <string>
#include <utility>
#include <vector>

#include "finsler/tensors.hpp"

namespace finsler {

template <class T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
  Mat<T> r(a.n, T(0.0));
  for (int i = 0; i < a.n; ++i)
    for (int k = 0; k < a.n; ++k)
      for (int j = 0; j < a.n; ++j) r(i, j) += a(i, k) * b(k, j);
  return r;
}

template <class T>
T trace(const Mat<T>& a) {
  T s(0.0);
  for (int i = 0; i < a.n; ++i) s += a(i, i);
  return s;
}

template <class T>
Mat<T> build_EE(const Mat<T>& g_inv, const Mat<T>& E, const T& F) {
  Mat<T> r = matmul(g_inv, E);
  const T two_F = T(2.0) * F;
  for (auto& v : r.a) v *= two_F;
  return r;
}

// tr M^a for a = 1..count.
template <class T>
std::vector<T> power_traces(const Mat<T>& m, int count) {
  std::vector<T> f;
  Mat<T> p = m;
  for (int a = 1; a <= count; ++a) {
    f.push_back(trace(p));
    if (a < count) p = matmul(p, m);
  }
  return f;
}

// c_1..c_n of det(M + ΛI) by the Faddeev–LeVerrier recurrence.
template <class T>
std::vector<T> charpoly(const Mat<T>& m) {
  const int n = m.n;
  Mat<T> mk(n, T(0.0));
  for (int i = 0; i < n; ++i) mk(i, i) = T(1.0);
  std::vector<T> c;
  for (int k = 1; k <= n; ++k) {
    Mat<T> am = matmul(m, mk);
    const T a = -trace(am) / T(static_cast<double>(k));
    c.push_back((k % 2 == 0) ? a : -a);
    for (int i = 0; i < n; ++i) am(i, i) += a;
    mk = std::move(am);
  }
  return c;
}

// g_a = det(M_a)/a! with M_a the lower Hessenberg matrix of traces
// (f_1 on the diagonal, 1..a-1 on the superdiagonal).
std::vector<double> newton_from_traces(const std::vector<double>& f);

struct FirstIntegralSet {
  Matrix EE;
  Vector f;  // f_1..f_{n-1}
  Vector c;  // c_1..c_{n-1}
  double c_n = 0.0;
  double det_EE = 0.0;
  double newton_residual = 0.0;  // max_a |c_a - g_a| / max(1, ‖𝓔‖^a)
  double bordered_value = 0.0;
  double f1_cl = 0.0;            // g^{ij} E^{CL}_ij
};

Matrix build_EE(const CurvaturePacket& packet);

struct TracesAndCharpoly {
  Vector f;
  Vector c;
};
TracesAndCharpoly traces_and_charpoly(const Matrix& EE);

// −(1/det g) · det [[2F E_ij, F_{y^i}], [F_{y^j}, 0]].
double bordered_determinant(const CurvaturePacket& packet);
// (1/det g) · det(2F E_ij + F_{y^i} F_{y^j}).
double rank_one_determinant(const CurvaturePacket& packet);

FirstIntegralSet first_integrals(const CurvaturePacket& packet);

struct ClosedForms {
  double g1 = 0.0;
  double g2 = 0.0;
};

// The two displayed closed forms for the Funk-type Berwald example on B³,
// evaluated literally in the scalars |x|², |y|², ⟨x,y⟩.
template <class S>
std::pair<S, S> closed_forms_from_invariants(const S& xx, const S& yy, const S& xy) {
  using std::sqrt;
  const S q = yy - xx * yy + xy * xy;
  const S r = sqrt(q);
  const S num1 = (S(-2.0) * xy * r - S(2.0) * xy * xy - yy * (S(1.0) - xx)) * q * q;
  const S den1 = S(8.0) * (S(0.5) * yy + xx * yy - S(2.0) * xy * xy) * yy * (xy + r) * (xy + r);
  const S num2 = (S(2.0) * yy + xx * yy - xy * xy) * (xx * yy - xy * xy);
  const S den2 = S(2.0) * yy * (S(-0.5) * yy + yy * (S(1.0) + xx) - xy * xy);
  return {num1 / den1, S(1.0) + num2 / den2};
}

// Requires n = 3, |x| < 1, y ≠ 0 (DomainError otherwise).
ClosedForms closed_forms(const PhasePoint& p);

// ---- scalar-field registry ------------------------------------------------

enum class FieldKind { F, trace, charpoly, trace_cl, g1_paper, g2_paper };

struct FieldId {
  std::string name;
  FieldKind kind = FieldKind::F;
  int a = 0;  // power / coefficient index for trace and charpoly
};

// Identifiers available for `spec`: F, f1..f{n-1}, c1..c{n-1}, f1_cl and,
// for the three-dimensional Funk-type metric, g1_paper and g2_paper.
std::vector<std::string> field_ids(const MetricSpec& spec);

// UnknownFieldError for anything not in field_ids(spec).
FieldId parse_field(const MetricSpec& spec, const std::string& name);

// Base jet order a tower needs to evaluate the field.
int field_order(const FieldId& id);

template <class T>
T eval_field(const Tower<T>& t, const FieldId& id) {
  const int n = t.n();
  switch (id.kind) {
    case FieldKind::F:
      return t.F().value();
    case FieldKind::g1_paper:
    case FieldKind::g2_paper: {
      T xx(0.0), yy(0.0), xy(0.0);
      for (int i = 0; i < n; ++i) {
        const T& x = t.seeds()[static_cast<std::size_t>(i)].value();
        const T& y = t.seeds()[static_cast<std::size_t>(n + i)].value();
        xx += x * x;
        yy += y * y;
        xy += x * y;
      }
      const auto [g1, g2] = closed_forms_from_invariants(xx, yy, xy);
      return id.kind == FieldKind::g1_paper ? g1 : g2;
    }
    case FieldKind::trace_cl: {
      const auto gi = values(t.g_inv());
      const auto e = values(t.E_cl());
      T s(0.0);
      for (std::size_t k = 0; k < gi.a.size(); ++k) s += gi.a[k] * e.a[k];
      return T(2.0) * t.F().value() * s;
    }
    case FieldKind::trace:
    case FieldKind::charpoly: {
      const auto ee = build_EE(values(t.g_inv()), values(t.E_berwald()), t.F().value());
      if (id.kind == FieldKind::trace) return power_traces(ee, id.a).back();
      return charpoly(ee)[static_cast<std::size_t>(id.a - 1)];
    }
  }
  return T(0.0);
}

// Field values at p from a single tower.
std::vector<double> evaluate_fields(const MetricSpec& spec, const std::vector<FieldId>& ids, const PhasePoint& p,
                                    GuardMode mode = GuardMode::effective);

struct BracketResult {
  double value = 0.0;
  // ½ Σ |g^{ij}| (|∂_{y^j}f_a δ_i f_b| + |∂_{y^j}f_b δ_i f_a|), the size of
  // the terms that cancel.
  double scale = 0.0;
  Vector grad_a, grad_b;  // ∂f/∂(x, y)
};

// ½ g^{ij}(∂f_a/∂y^j δf_b/δx^i − ∂f_b/∂y^j δf_a/δx^i), with the gradients
// taken by running the whole pipeline on the dual layer once per phase
// direction.
BracketResult poisson_bracket(const MetricSpec& spec, const std::string& fa, const std::string& fb,
                              const PhasePoint& p);

}  // namespace finsler
