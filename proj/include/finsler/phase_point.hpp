#pragma once

#include <cstddef>
#include <vector>

namespace finsler {

// A point (x, y) of the slit tangent bundle: x are base coordinates and y
// the fibre (velocity) coordinates. Validity against a metric's domain guard
// is checked by the metric, not here.
struct PhasePoint {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t dimension() const { return x.size(); }
};

}  // namespace finsler
