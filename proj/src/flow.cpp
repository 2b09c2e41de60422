#include "finsler/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>

namespace finsler {

namespace {

using Z = std::vector<double>;

// Dormand–Prince 5(4)
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense output
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

PhasePoint to_point(const Z& z, int n) {
  PhasePoint p;
  p.x.assign(z.begin(), z.begin() + n);
  p.y.assign(z.begin() + n, z.end());
  return p;
}

Z to_z(const PhasePoint& p) {
  Z z = p.x;
  z.insert(z.end(), p.y.begin(), p.y.end());
  return z;
}

// y + h Σ a_k k_k
Z combine(const Z& y, double h, std::initializer_list<std::pair<double, const Z*>> terms) {
  Z r = y;
  for (const auto& [a, k] : terms)
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += h * a * (*k)[i];
  return r;
}

class Integrator {
 public:
  Integrator(const MetricSpec& spec, const IntegratorSettings& s) : spec_(spec), s_(s), n_(spec.dimension) {}

  Z rhs(const Z& z) {
    ++stats.rhs_evaluations;
    const PhasePoint p = to_point(z, n_);
    const Vector G = spray(spec_, p, GuardMode::hard);
    Z f(z.size());
    const double sign = s_.backward ? -1.0 : 1.0;
    for (int i = 0; i < n_; ++i) {
      f[static_cast<std::size_t>(i)] = sign * p.y[static_cast<std::size_t>(i)];
      f[static_cast<std::size_t>(n_ + i)] = -2.0 * sign * G[static_cast<std::size_t>(i)];
    }
    return f;
  }

  // Empty when admissible, else the reason.
  std::optional<std::string> inadmissible(const Z& z) const {
    try {
      const PhasePoint p = to_point(z, n_);
      make_tower(spec_, p, 2, GuardMode::effective).g_inv();
      return std::nullopt;
    } catch (const SingularMetricError&) {
      return "conditioning";
    } catch (const Error&) {
      return "guard";
    }
  }

  double scaled_norm(const Z& v, const Z& ref) const {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double w = s_.atol + s_.rtol * std::abs(ref[i]);
      s += (v[i] / w) * (v[i] / w);
    }
    return std::sqrt(s / static_cast<double>(v.size()));
  }

  double initial_step(const Z& z0, const Z& f0, double t_max) {
    const double d0 = scaled_norm(z0, z0);
    const double d1n = scaled_norm(f0, z0);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, t_max);
    double d2 = 0.0;
    try {
      const Z z1 = combine(z0, h0, {{1.0, &f0}});
      const Z f1 = rhs(z1);
      Z diff(f1.size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = f1[i] - f0[i];
      d2 = scaled_norm(diff, z0) / h0;
    } catch (const Error&) {
      return h0 * 1e-3;
    }
    const double m = std::max(d1n, d2);
    const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    return std::min({100.0 * h0, h1, t_max});
  }

  IntegratorStats stats;

 private:
  const MetricSpec& spec_;
  IntegratorSettings s_;
  int n_;
};

struct Dense {
  Z r1, r2, r3, r4, r5;
  Z at(double theta) const {
    const double t1 = 1.0 - theta;
    Z z(r1.size());
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] = r1[i] + theta * (r2[i] + t1 * (r3[i] + theta * (r4[i] + t1 * r5[i])));
    return z;
  }
};

}  // namespace

std::string_view status_name(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::completed:
      return "completed";
    case TrajectoryStatus::domain_exit:
      return "domain_exit";
    case TrajectoryStatus::step_failure:
      return "step_failure";
  }
  return "unknown";
}

PhaseVelocity geodesic_rhs(const MetricSpec& spec, const PhasePoint& state) {
  const Vector G = spray(spec, state, GuardMode::effective);
  PhaseVelocity v;
  v.dx = state.y;
  for (double g : G) v.dy.push_back(-2.0 * g);
  return v;
}

Trajectory integrate(const MetricSpec& spec, const PhasePoint& init, double t_max,
                     const IntegratorSettings& settings) {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ConfigError("t_max must be a positive finite number");
  if (!(settings.rtol > 0.0) || !(settings.atol >= 0.0)) throw ConfigError("tolerances must be positive");
  if (settings.sample_dt < 0.0) throw ConfigError("sample_dt must be non-negative");
  check_phase_point(spec, init, GuardMode::effective);

  Integrator ig(spec, settings);
  Trajectory traj;
  Z z = to_z(init);
  if (auto why = ig.inadmissible(z)) throw DomainError("initial point is not admissible (" + *why + ")");
  traj.samples.push_back({0.0, init});
  const int n = spec.dimension;

  Z k1 = ig.rhs(z);
  double h = settings.h0 > 0.0 ? std::min(settings.h0, t_max) : ig.initial_step(z, k1, t_max);
  double t = 0.0;
  double err_old = 1e-4;
  long next_sample = 1;
  bool rejected_last = false;
  ig.stats.min_step = std::numeric_limits<double>::infinity();

  const auto fail = [&](const std::string& why) {
    traj.status = TrajectoryStatus::step_failure;
    traj.stats = ig.stats;
    if (!std::isfinite(traj.stats.min_step)) traj.stats.min_step = 0.0;
    throw StepFailure(why, traj);
  };

  while (t < t_max) {
    if (ig.stats.steps + ig.stats.rejections >= settings.max_steps) fail("maximum number of steps exceeded");
    const bool last = t + h >= t_max;
    if (last) h = t_max - t;
    if (h < settings.min_step_factor * std::abs(t) || h < std::numeric_limits<double>::min())
      fail("step size underflow at t = " + std::to_string(t));

    Z k2, k3, k4, k5, k6, k7, z_new;
    bool ok = true;
    try {
      k2 = ig.rhs(combine(z, h, {{a21, &k1}}));
      k3 = ig.rhs(combine(z, h, {{a31, &k1}, {a32, &k2}}));
      k4 = ig.rhs(combine(z, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
      k5 = ig.rhs(combine(z, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
      k6 = ig.rhs(combine(z, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
      z_new = combine(z, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
      k7 = ig.rhs(z_new);
    } catch (const Error&) {
      ok = false;
    }

    double err = std::numeric_limits<double>::infinity();
    if (ok) {
      double s = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double e =
            h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double w = settings.atol + settings.rtol * std::max(std::abs(z[i]), std::abs(z_new[i]));
        s += (e / w) * (e / w);
      }
      err = std::sqrt(s / static_cast<double>(z.size()));
    }

    if (!(err <= 1.0)) {
      ++ig.stats.rejections;
      h *= std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
      rejected_last = true;
      continue;
    }

    Dense dense;
    dense.r1 = z;
    dense.r2.resize(z.size());
    dense.r3.resize(z.size());
    dense.r4.resize(z.size());
    dense.r5.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double diff = z_new[i] - z[i];
      const double bspl = h * k1[i] - diff;
      dense.r2[i] = diff;
      dense.r3[i] = bspl;
      dense.r4[i] = diff - h * k7[i] - bspl;
      dense.r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    }
    const double t_new = last ? t_max : t + h;

    ++ig.stats.steps;
    ig.stats.min_step = std::min(ig.stats.min_step, h);
    ig.stats.max_step = std::max(ig.stats.max_step, h);

    // Output points inside (t, t_new], each checked for admissibility.
    std::vector<double> thetas;
    if (settings.sample_dt > 0.0) {
      while (true) {
        const double ts = static_cast<double>(next_sample) * settings.sample_dt;
        if (ts > t_new || ts > t_max) break;
        thetas.push_back((ts - t) / h);
        ++next_sample;
      }
      if (last && (thetas.empty() || thetas.back() < 1.0)) thetas.push_back(1.0);
    } else {
      thetas.push_back(1.0);
    }
    if (thetas.empty() || thetas.back() < 1.0) thetas.push_back(-1.0);  // step end check only

    double theta_ok = 0.0;
    std::optional<std::string> exit_reason;
    double theta_bad = 1.0;
    for (double th : thetas) {
      const double theta = th < 0.0 ? 1.0 : th;
      const Z zs = theta == 1.0 ? z_new : dense.at(theta);
      if (auto why = ig.inadmissible(zs)) {
        exit_reason = why;
        theta_bad = theta;
        break;
      }
      theta_ok = theta;
      if (th >= 0.0) {
        const double ts = theta == 1.0 ? t_new : t + theta * h;
        traj.samples.push_back({ts, to_point(zs, n)});
      }
    }

    if (exit_reason) {
      double lo = theta_ok, hi = theta_bad;
      for (int it = 0; it < 200 && (hi - lo) * h > 1e-14 * std::max(1.0, std::abs(t)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (auto why = ig.inadmissible(dense.at(mid))) {
          hi = mid;
          exit_reason = why;
        } else {
          lo = mid;
        }
      }
      const double t_exit = t + lo * h;
      if (t_exit > traj.samples.back().t) traj.samples.push_back({t_exit, to_point(dense.at(lo), n)});
      traj.status = TrajectoryStatus::domain_exit;
      traj.exit_reason = *exit_reason;
      break;
    }

    // PI step control
    const double e = std::max(err, 1e-10);
    double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_old, 0.4 / 5.0);
    fac = std::clamp(fac, 0.2, 5.0);
    if (rejected_last) fac = std::min(fac, 1.0);
    err_old = e;
    rejected_last = false;

    t = t_new;
    z = std::move(z_new);
    k1 = std::move(k7);
    h *= fac;
  }

  traj.stats = ig.stats;
  if (!std::isfinite(traj.stats.min_step)) traj.stats.min_step = 0.0;
  return traj;
}

DriftReport drift(const MetricSpec& spec, const Trajectory& traj, const std::vector<std::string>& fields,
                  double tolerance) {
  std::vector<FieldId> ids;
  for (const auto& f : fields) ids.push_back(parse_field(spec, f));
  DriftReport r;
  r.tolerance = tolerance;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : traj.samples) {
    std::vector<double> v;
    try {
      v = evaluate_fields(spec, ids, s.state);
    } catch (const Error&) {
      // evaluate one by one so a single failing field does not hide the rest
      for (const auto& id : ids) {
        try {
          v.push_back(evaluate_fields(spec, {id}, s.state).front());
        } catch (const Error&) {
          v.push_back(nan);
        }
      }
    }
    r.values.push_back(std::move(v));
  }
  r.pass = true;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    FieldDrift d;
    d.id = fields[k];
    if (!r.values.empty()) {
      d.initial = r.values.front()[k];
      const double denom = std::max(std::abs(d.initial), 1e-8);
      for (std::size_t s = 0; s < r.values.size(); ++s) {
        const double v = r.values[s][k];
        const double dev = std::isfinite(v) && std::isfinite(d.initial)
                               ? std::abs(v - d.initial)
                               : std::numeric_limits<double>::infinity();
        if (dev > d.max_abs || (s == 0 && !std::isfinite(dev))) {
          d.max_abs = dev;
          d.t_at_max = traj.samples[s].t;
        }
      }
      d.max_rel = d.max_abs / denom;
    }
    d.pass = d.max_rel <= tolerance;
    r.pass = r.pass && d.pass;
    r.fields.push_back(std::move(d));
  }
  return r;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const DriftReport& report) {
  const std::size_t n = traj.samples.empty() ? 0 : traj.samples.front().state.x.size();
  os << 't';
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  for (std::size_t i = 1; i <= n; ++i) os << ",y" << i;
  for (const auto& f : report.fields) os << ',' << f.id;
  os << '\n';
  char buf[64];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t s = 0; s < traj.samples.size(); ++s) {
    const auto& smp = traj.samples[s];
    put(smp.t);
    for (double v : smp.state.x) os << ',', put(v);
    for (double v : smp.state.y) os << ',', put(v);
    if (s < report.values.size())
      for (double v : report.values[s]) os << ',', put(v);
    os << '\n';
  }
}

}  // namespace finsler
