#pragma once

// Geodesic flow of the spray, ẋ = y, ẏ = −2G(x, y), and drift of scalar
// fields along its trajectories.

#include <iosfwd>
#include <string>
#include <vector>

#include "finsler/errors.hpp"
#include "finsler/integrals.hpp"
#include "finsler/metric.hpp"
#include "finsler/tensors.hpp"

namespace finsler {

struct PhaseVelocity {
  Vector dx, dy;
};

// DomainError outside the (effective) domain or for y = 0.
PhaseVelocity geodesic_rhs(const MetricSpec& spec, const PhasePoint& state);

struct IntegratorSettings {
  double rtol = 1e-10;
  double atol = 1e-12;
  // Output cadence. 0 records the end of every accepted step.
  double sample_dt = 0.0;
  // Initial step; 0 picks one automatically.
  double h0 = 0.0;
  // StepFailure once the step falls below min_step_factor·|t|.
  double min_step_factor = 1e-14;
  long max_steps = 1000000;
  // Integrate ż = −f(z): the trajectory traced backwards, parametrised by
  // increasing τ = −t.
  bool backward = false;
};

enum class TrajectoryStatus { completed, domain_exit, step_failure };
std::string_view status_name(TrajectoryStatus s);

struct Sample {
  double t = 0.0;
  PhasePoint state;
};

struct IntegratorStats {
  long steps = 0;
  long rejections = 0;
  long rhs_evaluations = 0;
  double min_step = 0.0;
  double max_step = 0.0;
};

struct Trajectory {
  std::vector<Sample> samples;
  TrajectoryStatus status = TrajectoryStatus::completed;
  std::string exit_reason;  // "guard" or "conditioning" for domain_exit
  IntegratorStats stats;
};

class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, Trajectory partial) : Error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

// Dormand–Prince 5(4) with PI step control and the standard fourth-order
// dense output. Stages are evaluated under the hard guard; the trajectory
// ends with status domain_exit at the first point (located by bisection on
// the dense output) where the effective guard or the metric condition
// ceiling is violated. ConfigError for t_max <= 0 or bad tolerances.
Trajectory integrate(const MetricSpec& spec, const PhasePoint& init, double t_max,
                     const IntegratorSettings& settings = {});

struct FieldDrift {
  std::string id;
  double initial = 0.0;
  double max_abs = 0.0;
  double max_rel = 0.0;  // max |v − v₀| / max(|v₀|, 1e-8); +inf if evaluation failed
  double t_at_max = 0.0;
  bool pass = false;
};

struct DriftReport {
  double tolerance = 0.0;
  std::vector<FieldDrift> fields;
  std::vector<std::vector<double>> values;  // [sample][field], NaN where evaluation failed
  bool pass = false;
};

// UnknownFieldError for unregistered ids.
DriftReport drift(const MetricSpec& spec, const Trajectory& traj, const std::vector<std::string>& fields,
                  double tolerance = 1e-6);

// Header t,x1..xn,y1..yn,<field ids>; 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const DriftReport& report);

}  // namespace finsler
