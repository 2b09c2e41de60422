#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "finsler/metric.hpp"
#include "finsler/tensors.hpp"

namespace support {

inline finsler::MetricSpec catalog(const std::string& name) {
  return finsler::load_metric_file(std::string(FINSLER_METRICS_DIR) + "/" + name + ".cfg");
}

inline const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names{"euclidean3", "funk3", "funk3_expr", "randers3", "sphere2", "warped2"};
  return names;
}

inline double max_abs(const finsler::Matrix& m) {
  double s = 0.0;
  for (double v : m.a) s = std::max(s, std::abs(v));
  return s;
}

inline double max_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s = std::max(s, std::abs(e));
  return s;
}

inline double max_diff(const finsler::Matrix& a, const finsler::Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.a.size(); ++i) s = std::max(s, std::abs(a.a[i] - b.a[i]));
  return s;
}

inline double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

inline finsler::PhasePoint scaled(const finsler::PhasePoint& p, double lambda) {
  finsler::PhasePoint q = p;
  for (double& v : q.y) v *= lambda;
  return q;
}

}  // namespace support
