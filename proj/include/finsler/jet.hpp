#pragma once

// Truncated multivariate Taylor arithmetic ("jets").
//
// A jet of signature (dim, order) stores the Taylor coefficients c_α of a
// scalar function around an expansion point, for every multi-index α with
// |α| ≤ order. Coefficients are stored densely in graded lexicographic order:
// first by total degree, then by exponent tuple in descending lexicographic
// order, so that v1 > v2 > ... > v_dim. For dim = 2 the sequence is
//
//   1, v1, v2, v1², v1·v2, v2², v1³, ...
//
// Because the ordering within each degree does not depend on the truncation
// order, the coefficients of an order-k jet are a prefix of those of an
// order-(k+1) jet with the same dim. Derivatives and truncation rely on this.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "finsler/dual.hpp"
#include "finsler/errors.hpp"
#include "finsler/phase_point.hpp"

namespace finsler {

inline constexpr int kMaxJetDim = 12;
inline constexpr int kMaxJetOrder = 10;

// Immutable index tables for one (dim, order) signature. Shared between all
// jets of that signature; obtained through Layout::get, which caches them.
class Layout {
 public:
  struct Product {
    std::uint32_t rhs;
    std::uint32_t out;
  };
  struct Shift {
    std::uint32_t from;
    std::uint32_t to;
    double factor;
  };

  static std::shared_ptr<const Layout> get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  std::size_t size() const { return degree_.size(); }

  // Number of multi-indices with total degree ≤ k (k ≤ order).
  std::size_t size_up_to(int k) const { return offsets_[static_cast<std::size_t>(k) + 1]; }
  int degree(std::size_t i) const { return degree_[i]; }
  std::span<const std::uint8_t> exponents(std::size_t i) const {
    return {exponents_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  // Position of a multi-index; throws OrderError when |alpha| > order.
  std::size_t index_of(std::span<const int> alpha) const;

  // All (rhs, out) with degree(lhs) + degree(rhs) ≤ order and
  // exponents(out) = exponents(lhs) + exponents(rhs).
  std::span<const Product> products(std::size_t lhs) const {
    return {products_.data() + product_offsets_[lhs],
            product_offsets_[lhs + 1] - product_offsets_[lhs]};
  }

  // Coefficient map of ∂/∂v_var: c'_to += factor · c_from, with `to`
  // indexing the (dim, order-1) layout.
  std::span<const Shift> derivative(int var) const { return derivatives_[static_cast<std::size_t>(var)]; }

  Layout(int dim, int order);

 private:
  std::size_t find_key(std::uint64_t key) const;

  int dim_;
  int order_;
  std::vector<std::size_t> offsets_;
  std::vector<int> degree_;
  std::vector<std::uint8_t> exponents_;
  std::vector<std::uint64_t> keys_;  // packed exponents, 4 bits per variable
  std::vector<std::uint32_t> sorted_by_key_;
  std::vector<std::size_t> product_offsets_;
  std::vector<Product> products_;
  std::vector<std::vector<Shift>> derivatives_;
};

// Multi-index helper: builds exponent vectors from a list of variables, so
// that {2, 2, 5} means ∂³/∂v2²∂v5 (variables are 0-based).
std::vector<int> multi_index(int dim, std::initializer_list<int> vars);

template <class T>
class BasicJet {
 public:
  using value_type = T;

  BasicJet() = default;
  BasicJet(int dim, int order) : layout_(Layout::get(dim, order)), c_(layout_->size(), T(0.0)) {}

  static BasicJet constant(int dim, int order, T value) {
    BasicJet j(dim, order);
    j.c_[0] = value;
    return j;
  }

  // The coordinate function v_var expanded around a point where it equals
  // `value`.
  static BasicJet variable(int dim, int order, int var, T value) {
    if (order < 1) throw OrderError("a coordinate jet needs order >= 1");
    if (var < 0 || var >= dim) throw DimensionError("variable index out of range");
    BasicJet j(dim, order);
    j.c_[0] = value;
    j.c_[1 + static_cast<std::size_t>(var)] = T(1.0);
    return j;
  }

  bool valid() const { return layout_ != nullptr; }
  int dim() const { return layout_ ? layout_->dim() : 0; }
  int order() const { return layout_ ? layout_->order() : -1; }
  const Layout& layout() const { return *layout_; }

  const T& value() const { return c_.at(0); }
  std::span<const T> coefficients() const { return c_; }
  std::span<T> coefficients() { return c_; }

  T taylor_coefficient(std::span<const int> alpha) const { return c_[layout_->index_of(alpha)]; }

  // Mixed partial derivative at the expansion point: α! · c_α.
  T partial(std::span<const int> alpha) const {
    const std::size_t i = layout_->index_of(alpha);
    double factorial = 1.0;
    for (int a : alpha)
      for (int k = 2; k <= a; ++k) factorial *= k;
    return c_[i] * T(factorial);
  }
  T partial(std::initializer_list<int> vars) const {
    const auto alpha = multi_index(dim(), vars);
    return partial(std::span<const int>(alpha));
  }

  // ∂/∂v_var as a jet of order one less.
  BasicJet derivative(int var) const {
    if (order() < 1) throw OrderError("derivative of an order-0 jet");
    if (var < 0 || var >= dim()) throw DimensionError("variable index out of range");
    BasicJet r(dim(), order() - 1);
    for (const auto& s : layout_->derivative(var)) r.c_[s.to] += c_[s.from] * T(s.factor);
    return r;
  }

  BasicJet truncated(int order) const {
    if (order > this->order())
      throw OrderError("cannot raise jet order from " + std::to_string(this->order()) + " to " +
                       std::to_string(order));
    if (order == this->order()) return *this;
    BasicJet r(dim(), order);
    std::copy(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(r.c_.size()), r.c_.begin());
    return r;
  }

  BasicJet& operator+=(const BasicJet& o) {
    check_signature(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  BasicJet& operator-=(const BasicJet& o) {
    check_signature(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  BasicJet& operator+=(const T& s) {
    c_.at(0) += s;
    return *this;
  }
  BasicJet& operator-=(const T& s) {
    c_.at(0) -= s;
    return *this;
  }
  BasicJet& operator*=(const T& s) {
    for (auto& c : c_) c *= s;
    return *this;
  }

  BasicJet operator-() const {
    BasicJet r = *this;
    for (auto& c : r.c_) c = -c;
    return r;
  }

  friend BasicJet operator*(const BasicJet& a, const BasicJet& b) {
    a.check_signature(b);
    BasicJet r(a.dim(), a.order());
    const Layout& lay = *a.layout_;
    const std::size_t n = a.c_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const T ai = a.c_[i];
      if (is_zero(ai)) continue;
      for (const auto& p : lay.products(i)) r.c_[p.out] += ai * b.c_[p.rhs];
    }
    return r;
  }

  void check_signature(const BasicJet& o) const {
    if (!layout_ || !o.layout_ || dim() != o.dim() || order() != o.order())
      throw SignatureError("jet signature mismatch: (" + std::to_string(dim()) + "," +
                           std::to_string(order()) + ") vs (" + std::to_string(o.dim()) + "," +
                           std::to_string(o.order()) + ")");
  }

  // f(a) for a univariate f given its Taylor coefficients at value(),
  // series[m] = f^(m)(a0)/m!, m = 0..order.
  BasicJet compose(const std::vector<T>& series) const {
    BasicJet h = *this;
    h.c_[0] = T(0.0);
    BasicJet r = constant(dim(), order(), series[static_cast<std::size_t>(order())]);
    for (int m = order() - 1; m >= 0; --m) {
      r = r * h;
      r.c_[0] += series[static_cast<std::size_t>(m)];
    }
    return r;
  }

 private:
  std::shared_ptr<const Layout> layout_;
  std::vector<T> c_;
};

using Jet = BasicJet<double>;

template <class T>
BasicJet<T> operator+(BasicJet<T> a, const BasicJet<T>& b) {
  return a += b;
}
template <class T>
BasicJet<T> operator-(BasicJet<T> a, const BasicJet<T>& b) {
  return a -= b;
}
template <class T>
BasicJet<T> operator+(BasicJet<T> a, std::type_identity_t<T> s) {
  return a += s;
}
template <class T>
BasicJet<T> operator+(std::type_identity_t<T> s, BasicJet<T> a) {
  return a += s;
}
template <class T>
BasicJet<T> operator-(BasicJet<T> a, std::type_identity_t<T> s) {
  return a -= s;
}
template <class T>
BasicJet<T> operator-(std::type_identity_t<T> s, const BasicJet<T>& a) {
  BasicJet<T> r = -a;
  return r += s;
}
template <class T>
BasicJet<T> operator*(BasicJet<T> a, std::type_identity_t<T> s) {
  return a *= s;
}
template <class T>
BasicJet<T> operator*(std::type_identity_t<T> s, BasicJet<T> a) {
  return a *= s;
}

template <class T>
BasicJet<T> reciprocal(const BasicJet<T>& a) {
  const T a0 = a.value();
  if (value_of(a0) == 0.0) throw PoleError("division by a jet with zero value");
  std::vector<T> series(static_cast<std::size_t>(a.order()) + 1);
  const T inv = T(1.0) / a0;
  T term = inv;
  for (auto& s : series) {
    s = term;
    term = -term * inv;
  }
  return a.compose(series);
}

template <class T>
BasicJet<T> operator/(const BasicJet<T>& a, const BasicJet<T>& b) {
  a.check_signature(b);
  return a * reciprocal(b);
}
template <class T>
BasicJet<T> operator/(BasicJet<T> a, std::type_identity_t<T> s) {
  if (value_of(s) == 0.0) throw PoleError("division of a jet by zero");
  return a *= T(1.0) / s;
}
template <class T>
BasicJet<T> operator/(std::type_identity_t<T> s, const BasicJet<T>& a) {
  return reciprocal(a) *= s;
}

// a^r for a real constant r. Non-integer r needs a positive value part;
// negative integer r needs a nonzero one.
template <class T>
BasicJet<T> pow(const BasicJet<T>& a, double r) {
  using std::pow;
  const bool integral = std::floor(r) == r && std::abs(r) < 1e9;
  if (integral && r >= 0.0) {
    auto e = static_cast<long long>(r);
    BasicJet<T> result = BasicJet<T>::constant(a.dim(), a.order(), T(1.0));
    BasicJet<T> base = a;
    while (e > 0) {
      if (e & 1) result = result * base;
      e >>= 1;
      if (e > 0) base = base * base;
    }
    return result;
  }
  if (integral) return reciprocal(pow(a, -r));
  const T a0 = a.value();
  if (value_of(a0) <= 0.0) throw BranchError("fractional power of a non-positive jet");
  std::vector<T> series(static_cast<std::size_t>(a.order()) + 1);
  T binom(1.0);
  for (std::size_t m = 0; m < series.size(); ++m) {
    series[m] = binom * pow(a0, r - static_cast<double>(m));
    binom = binom * T(r - static_cast<double>(m)) / T(static_cast<double>(m + 1));
  }
  return a.compose(series);
}

template <class T>
BasicJet<T> sqrt(const BasicJet<T>& a) {
  if (value_of(a.value()) <= 0.0) throw BranchError("sqrt of a non-positive jet");
  return pow(a, 0.5);
}

template <class T>
BasicJet<T> log(const BasicJet<T>& a) {
  using std::log;
  const T a0 = a.value();
  if (value_of(a0) <= 0.0) throw BranchError("ln of a non-positive jet");
  std::vector<T> series(static_cast<std::size_t>(a.order()) + 1);
  series[0] = log(a0);
  const T inv = T(1.0) / a0;
  T power = inv;
  for (std::size_t m = 1; m < series.size(); ++m) {
    const double sign = (m % 2 == 1) ? 1.0 : -1.0;
    series[m] = T(sign) / T(static_cast<double>(m)) * power;
    power = power * inv;
  }
  return a.compose(series);
}

template <class T>
BasicJet<T> exp(const BasicJet<T>& a) {
  using std::exp;
  const T e = exp(a.value());
  std::vector<T> series(static_cast<std::size_t>(a.order()) + 1);
  T inv_factorial(1.0);
  for (std::size_t m = 0; m < series.size(); ++m) {
    series[m] = e * inv_factorial;
    inv_factorial = inv_factorial / T(static_cast<double>(m + 1));
  }
  return a.compose(series);
}

// Names used by the generic expression evaluator (found by ADL).
template <class T>
BasicJet<T> checked_sqrt(const BasicJet<T>& a) {
  return sqrt(a);
}
template <class T>
BasicJet<T> checked_log(const BasicJet<T>& a) {
  return log(a);
}
template <class T>
BasicJet<T> checked_exp(const BasicJet<T>& a) {
  return exp(a);
}
template <class T>
BasicJet<T> checked_pow(const BasicJet<T>& a, double r) {
  return pow(a, r);
}
template <class T>
BasicJet<T> checked_div(const BasicJet<T>& a, const BasicJet<T>& b) {
  return a / b;
}

// A jet whose coefficients are dual numbers: the value jet plus the jet of
// its derivative along one seed direction. Pushing one through a jet
// computation yields that computation's directional derivative exactly,
// which supplies one derivative beyond the jet order.
using DualLayer = BasicJet<Dual>;

DualLayer make_dual_layer(const Jet& value, const Jet& tangent);
Jet value_part(const DualLayer& d);
Jet tangent_part(const DualLayer& d);

// Coordinate jets x^1..x^n, y^1..y^n (variables 0..n-1 and n..2n-1) at p.
// Rejects order < 1 and y = 0.
std::vector<Jet> seed_phase_point(const PhasePoint& p, int order);

// Same, with a dual tangent seeded along phase variable `direction`
// (0..2n-1): every coefficient then carries its derivative with respect to
// moving the expansion point along that axis.
std::vector<DualLayer> seed_phase_point_dual(const PhasePoint& p, int order, int direction);

using QuadJet = BasicJet<Quad>;
using QuadDualLayer = BasicJet<QuadDual>;

void check_seed_point(const PhasePoint& p, int order);

// Seeding for any coefficient type.
template <class T>
std::vector<BasicJet<T>> seed_phase_point_as(const PhasePoint& p, int order) {
  check_seed_point(p, order);
  const int n = static_cast<int>(p.x.size());
  std::vector<BasicJet<T>> seeds;
  seeds.reserve(2 * p.x.size());
  for (int v = 0; v < 2 * n; ++v) {
    const double coord = v < n ? p.x[static_cast<std::size_t>(v)] : p.y[static_cast<std::size_t>(v - n)];
    seeds.push_back(BasicJet<T>::variable(2 * n, order, v, T(coord)));
  }
  return seeds;
}

template <class R>
std::vector<BasicJet<BasicDual<R>>> seed_phase_point_dual_as(const PhasePoint& p, int order, int direction) {
  check_seed_point(p, order);
  const int n = static_cast<int>(p.x.size());
  if (direction < 0 || direction >= 2 * n) throw DimensionError("dual seed direction out of range");
  std::vector<BasicJet<BasicDual<R>>> seeds;
  seeds.reserve(2 * p.x.size());
  for (int v = 0; v < 2 * n; ++v) {
    const double coord = v < n ? p.x[static_cast<std::size_t>(v)] : p.y[static_cast<std::size_t>(v - n)];
    seeds.push_back(BasicJet<BasicDual<R>>::variable(2 * n, order, v,
                                                     BasicDual<R>(R(coord), R(v == direction ? 1.0 : 0.0))));
  }
  return seeds;
}

}  // namespace finsler
