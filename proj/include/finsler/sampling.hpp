#pragma once

#include <cstdint>
#include <vector>

#include "finsler/metric.hpp"

namespace finsler {

// Seeded random phase points: x uniform in the ball of radius
// radius_factor · guard.sampling_radius(), y uniform on the unit sphere scaled
// by a factor uniform in [0.5, 2].
std::vector<PhasePoint> sample_phase_points(const MetricSpec& spec, int count, std::uint64_t seed,
                                            double radius_factor = 1.0);

}  // namespace finsler
