#pragma once

// Coefficient scalars. The curvature pipeline runs in quadruple precision:
// near the boundary of a bounded domain the jets of F² span many orders of
// magnitude and double precision loses too many digits in the higher
// derivatives.

#include <boost/multiprecision/float128.hpp>

namespace finsler {

using Quad = boost::multiprecision::float128;

constexpr double value_of(double x) { return x; }
inline double value_of(const Quad& x) { return static_cast<double>(x); }
constexpr bool is_zero(double x) { return x == 0.0; }
inline bool is_zero(const Quad& x) { return x == 0; }

}  // namespace finsler
