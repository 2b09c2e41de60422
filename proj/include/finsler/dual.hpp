#pragma once

#include <cmath>
#include <type_traits>
#include <utility>

#include "finsler/scalar.hpp"

namespace finsler {

// First-order dual number v + d·ε with ε² = 0. Used as the coefficient type
// of a jet to carry one extra directional derivative through a whole jet
// computation (see DualLayer in jet.hpp).
template <class R>
struct BasicDual {
  R v = R(0.0);
  R d = R(0.0);

  BasicDual() = default;
  BasicDual(double value) : v(value), d(0.0) {}
  BasicDual(R value, R tangent) : v(std::move(value)), d(std::move(tangent)) {}
  template <class U = R>
    requires(!std::is_same_v<U, double>)
  BasicDual(const R& value) : v(value), d(0.0) {}

  BasicDual& operator+=(const BasicDual& o) {
    v += o.v;
    d += o.d;
    return *this;
  }
  BasicDual& operator-=(const BasicDual& o) {
    v -= o.v;
    d -= o.d;
    return *this;
  }
  BasicDual& operator*=(const BasicDual& o) {
    d = d * o.v + v * o.d;
    v *= o.v;
    return *this;
  }
  BasicDual& operator/=(const BasicDual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v /= o.v;
    return *this;
  }
};

using Dual = BasicDual<double>;
using QuadDual = BasicDual<Quad>;

template <class R>
BasicDual<R> operator-(const BasicDual<R>& a) {
  return {-a.v, -a.d};
}
template <class R>
BasicDual<R> operator+(BasicDual<R> a, const BasicDual<R>& b) {
  return a += b;
}
template <class R>
BasicDual<R> operator-(BasicDual<R> a, const BasicDual<R>& b) {
  return a -= b;
}
template <class R>
BasicDual<R> operator*(BasicDual<R> a, const BasicDual<R>& b) {
  return a *= b;
}
template <class R>
BasicDual<R> operator/(BasicDual<R> a, const BasicDual<R>& b) {
  return a /= b;
}
template <class R>
bool operator==(const BasicDual<R>& a, const BasicDual<R>& b) {
  return a.v == b.v && a.d == b.d;
}

template <class R>
BasicDual<R> sqrt(const BasicDual<R>& a) {
  using std::sqrt;
  const R s = sqrt(a.v);
  return {s, a.d / (R(2.0) * s)};
}
template <class R>
BasicDual<R> log(const BasicDual<R>& a) {
  using std::log;
  return {log(a.v), a.d / a.v};
}
template <class R>
BasicDual<R> exp(const BasicDual<R>& a) {
  using std::exp;
  const R e = exp(a.v);
  return {e, a.d * e};
}
template <class R>
BasicDual<R> pow(const BasicDual<R>& a, double r) {
  using std::pow;
  const R p = pow(a.v, R(r - 1.0));
  return {p * a.v, R(r) * p * a.d};
}

template <class R>
double value_of(const BasicDual<R>& x) {
  return value_of(x.v);
}
template <class R>
bool is_zero(const BasicDual<R>& x) {
  return is_zero(x.v) && is_zero(x.d);
}

}  // namespace finsler
