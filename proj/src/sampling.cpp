#include "finsler/sampling.hpp"

#include <cmath>
#include <random>

namespace finsler {

namespace {

std::vector<double> unit_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  double s = 0.0;
  do {
    s = 0.0;
    for (auto& e : v) {
      e = normal(rng);
      s += e * e;
    }
  } while (s < 1e-20);
  s = std::sqrt(s);
  for (auto& e : v) e /= s;
  return v;
}

}  // namespace

std::vector<PhasePoint> sample_phase_points(const MetricSpec& spec, int count, std::uint64_t seed,
                                            double radius_factor) {
  const int n = spec.dimension;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  const double radius = radius_factor * spec.guard.sampling_radius();
  std::vector<PhasePoint> points;
  points.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) {
    PhasePoint p;
    p.x = unit_vector(n, rng);
    const double r = radius * std::pow(unit(rng), 1.0 / n);
    for (auto& e : p.x) e *= r;
    p.y = unit_vector(n, rng);
    const double s = scale(rng);
    for (auto& e : p.y) e *= s;
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace finsler
