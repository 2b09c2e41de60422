// Acceptance run: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--known-failure N]...
// Exit status is nonzero when a criterion fails that is not listed as a
// known failure. Known failures still print FAIL.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/flow.hpp"
#include "finsler/integrals.hpp"
#include "finsler/sampling.hpp"
#include "finsler/tensors.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace finsler;
using support::catalog;
using support::catalog_names;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  int id;
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd r(m.n, m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) r(i, j) = m(i, j);
  return r;
}

double max_abs(const Matrix& m) { return support::max_abs(m); }
double max_abs(const std::vector<double>& v) { return support::max_abs(v); }

// Elementary symmetric polynomials of the eigenvalues from the power sums
// by Newton's recursion.
std::vector<double> elementary_from_power_sums(const std::vector<double>& p) {
  std::vector<double> e{1.0};
  for (std::size_t k = 1; k <= p.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 1; i <= k; ++i) s += ((i % 2 == 1) ? 1.0 : -1.0) * e[k - i] * p[i - 1];
    e.push_back(s / static_cast<double>(k));
  }
  return {e.begin() + 1, e.end()};
}

std::vector<std::vector<int>> multi_indices(int dim, int max_order) {
  std::vector<std::vector<int>> out;
  std::vector<int> alpha(static_cast<std::size_t>(dim), 0);
  std::function<void(int, int)> rec = [&](int var, int left) {
    if (var == dim) {
      out.push_back(alpha);
      return;
    }
    for (int a = 0; a <= left; ++a) {
      alpha[static_cast<std::size_t>(var)] = a;
      rec(var + 1, left - a);
    }
    alpha[static_cast<std::size_t>(var)] = 0;
  };
  rec(0, max_order);
  return out;
}

MetricSpec with_sigma(const std::string& name, const std::string& sigma) {
  std::ifstream f(std::string(FINSLER_METRICS_DIR) + "/" + name + ".cfg");
  std::stringstream in;
  in << f.rdbuf();
  std::string text, line;
  while (std::getline(in, line)) {
    text += line + "\n";
    if (line == "[metric]") text += "sigma = " + sigma + "\n";
  }
  return parse_metric(text);
}

// Criteria 1, 2 and the Funk part of 6 share one pass over 200 points.
struct FunkSweep {
  double route = 0.0, chi = 0.0, nabla_E = 0.0, hamel = 0.0, jacobi = 0.0, seconds = 0.0;
  int points = 0, errors = 0;
};

FunkSweep funk_sweep() {
  FunkSweep s;
  const MetricSpec funk = catalog("funk3");
  const auto t0 = Clock::now();
  for (const auto& p : sample_phase_points(funk, 200, 1001)) {
    try {
      const CurvaturePacket c = compute_packet(funk, p);
      const double scale = max_abs(c.E);
      s.route = std::max({s.route, support::max_diff(c.E, c.E_s) / scale, support::max_diff(c.E, c.E_cl) / scale,
                          support::max_diff(c.E_s, c.E_cl) / scale});
      const double normN = frobenius(c.N);
      s.chi = std::max(s.chi, norm(c.chi) / (1 + normN * norm(c.S_y)));
      s.nabla_E = std::max(s.nabla_E, c.nabla_E ? frobenius(*c.nabla_E) / (1 + frobenius(c.E) * normN) : INFINITY);
      s.hamel = std::max(s.hamel, frobenius(c.hamel) / (1 + c.hamel_scale));
      s.jacobi = std::max(s.jacobi, max_abs(c.jacobi) / std::max(normN * normN, 1e-300));
      ++s.points;
    } catch (const Error&) {
      ++s.errors;
    }
  }
  s.seconds = seconds_since(t0);
  return s;
}

Outcome criterion1(const FunkSweep& s) {
  const bool pass = s.errors == 0 && s.points == 200 && s.route <= 1e-7 && s.seconds <= 60.0;
  return {1, pass,
          "three-route E agreement on funk3, " + std::to_string(s.points) + " points: worst relative " + fmt(s.route) +
              " (tol 1e-7), " + fmt(s.seconds) + " s (limit 60 s)"};
}

Outcome criterion2(const FunkSweep& s) {
  const bool pass = s.errors == 0 && s.chi <= 1e-7 && s.nabla_E <= 1e-7 && s.hamel <= 1e-6;
  return {2, pass,
          "funk3, 200 points: chi " + fmt(s.chi) + " (tol 1e-7), nabla E " + fmt(s.nabla_E) + " (tol 1e-7), Hamel " +
              fmt(s.hamel) + " (tol 1e-6)"};
}

struct RadialRun {
  Trajectory traj;
  DriftReport drift;
  double seconds = 0.0;
};

RadialRun radial_run() {
  const MetricSpec funk = catalog("funk3");
  IntegratorSettings s;
  s.rtol = 1e-10;
  s.atol = 1e-30;
  RadialRun r;
  const auto t0 = Clock::now();
  r.traj = integrate(funk, {{0, 0, 0}, {1, 0, 0}}, 1e9, s);
  r.drift = drift(funk, r.traj, {"F", "f1", "f2", "c1", "c2", "g1_paper", "g2_paper"});
  r.seconds = seconds_since(t0);
  return r;
}

Outcome criterion3(const RadialRun& r) {
  double f1 = 0.0, f2 = 0.0, c1 = 0.0, c2 = 0.0;
  const auto& first = r.drift.values.front();
  for (const auto& row : r.drift.values) {
    f1 = std::max(f1, std::abs(row[1] - 8.0) / 8.0);
    f2 = std::max(f2, std::abs(row[2] - 32.0) / 32.0);
    c1 = std::max(c1, std::abs(row[3] - first[3]) / std::abs(first[3]));
    c2 = std::max(c2, std::abs(row[4] - first[4]) / std::abs(first[4]));
  }
  const double x_end = r.traj.samples.back().state.x[0];
  const bool pass = r.traj.status == TrajectoryStatus::domain_exit && f1 <= 1e-6 && f2 <= 1e-6 && c1 <= 1e-6 &&
                    c2 <= 1e-6 && r.seconds <= 30.0;
  return {3, pass,
          "radial funk3 geodesic, " + std::to_string(r.traj.samples.size()) + " samples, " +
              std::string(status_name(r.traj.status)) + " at x1 = " + fmt(1.0 - x_end) + " from the boundary: f1 " +
              fmt(f1) + ", f2 " + fmt(f2) + ", c1 " + fmt(c1) + ", c2 " + fmt(c2) + " (tol 1e-6), " + fmt(r.seconds) +
              " s (limit 30 s)"};
}

Outcome criterion4(const RadialRun& r) {
  const MetricSpec funk = catalog("funk3");
  double at_origin = 0.0;
  for (const auto& p : sample_phase_points(funk, 20, 4004)) {
    const auto v = closed_forms({{0, 0, 0}, p.y});
    at_origin = std::max({at_origin, std::abs(v.g1 + 0.25) / 0.25, std::abs(v.g2 - 1.0)});
  }
  const double d1 = r.drift.fields[5].max_rel, d2 = r.drift.fields[6].max_rel;
  double bracket = 0.0;
  for (const auto& p : sample_phase_points(funk, 50, 4005)) {
    const auto b = poisson_bracket(funk, "g1_paper", "g2_paper", p);
    bracket = std::max(bracket, std::abs(b.value) / std::max(b.scale, 1e-12 / 1e-6));
  }
  const auto& front = r.drift.values.front();
  const auto& back = r.drift.values.back();
  const bool pass = at_origin <= 1e-12 && d1 <= 1e-6 && d2 <= 1e-6 && bracket <= 1e-6;
  return {4, pass,
          "closed forms at x = 0: worst deviation " + fmt(at_origin) + "; drift along the criterion-3 run g1_paper " +
              fmt(d1) + ", g2_paper " + fmt(d2) + " (tol 1e-6); bracket " + fmt(bracket) +
              " (tol 1e-6); comparison (g1_paper, g2_paper | c1, c2) start (" + fmt(front[5]) + ", " + fmt(front[6]) +
              " | " + fmt(front[3]) + ", " + fmt(front[4]) + "), end (" + fmt(back[5]) + ", " + fmt(back[6]) + " | " +
              fmt(back[3]) + ", " + fmt(back[4]) + ")"};
}

Outcome criterion5() {
  double ey = 0.0, energy = 0.0, newton = 0.0, bordered = 0.0, hom = 0.0;
  int errors = 0, points = 0;
  for (const auto& name : catalog_names()) {
    const MetricSpec spec = catalog(name);
    const int n = spec.dimension;
    for (const auto& p : sample_phase_points(spec, 200, 5005)) {
      try {
        const CurvaturePacket c = compute_packet(spec, p, 5);
        const FirstIntegralSet fi = first_integrals(c);
        const Eigen::MatrixXd E = to_eigen(c.E), g = to_eigen(c.g);
        const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(p.y.data(), n);
        ey = std::max(ey, (E * y).cwiseAbs().maxCoeff() / std::max(1e-300, E.cwiseAbs().maxCoeff() * y.norm()) *
                              (E.cwiseAbs().maxCoeff() > 0));
        energy = std::max(energy, std::abs(y.dot(g * y) - c.F * c.F) / (c.F * c.F));

        // Newton: power sums of EE computed here, pushed through the recursion.
        const Eigen::MatrixXd EE = to_eigen(fi.EE);
        std::vector<double> p_sums;
        Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
        for (int a = 1; a < n; ++a) {
          power = power * EE;
          p_sums.push_back(power.trace());
        }
        const auto e = elementary_from_power_sums(p_sums);
        const double nEE = EE.norm();
        for (int a = 0; a < n - 1; ++a)
          newton = std::max(newton, std::abs(fi.c[static_cast<std::size_t>(a)] - e[static_cast<std::size_t>(a)]) /
                                        std::max(1.0, std::pow(nEE, a + 1)));

        Eigen::MatrixXd border = Eigen::MatrixXd::Zero(n + 1, n + 1);
        border.topLeftCorner(n, n) = 2 * c.F * E;
        for (int i = 0; i < n; ++i) border(i, n) = border(n, i) = c.F_y[static_cast<std::size_t>(i)];
        const double bval = -border.determinant() / g.determinant();
        const double cn1 = fi.c.back();
        bordered = std::max(bordered, std::abs(bval - cn1) / std::max(1.0, std::abs(cn1)));

        PhasePoint q = p;
        for (double& v : q.y) v *= 2.0;
        const FirstIntegralSet f2 = first_integrals(compute_packet(spec, q, 5));
        for (std::size_t a = 0; a < fi.f.size(); ++a) {
          hom = std::max(hom, std::abs(f2.f[a] - fi.f[a]) / std::max(1.0, std::abs(fi.f[a])));
          hom = std::max(hom, std::abs(f2.c[a] - fi.c[a]) / std::max(1.0, std::abs(fi.c[a])));
        }
        ++points;
      } catch (const Error&) {
        ++errors;
      }
    }
  }
  const bool pass =
      errors == 0 && ey <= 1e-9 && energy <= 1e-10 && newton <= 1e-9 && bordered <= 1e-8 && hom <= 1e-9;
  return {5, pass,
          std::to_string(points) + " points over " + std::to_string(catalog_names().size()) + " metrics: E y " +
              fmt(ey) + ", g(y,y) - F^2 " + fmt(energy) + ", Newton " + fmt(newton) + " (tol 1e-9), bordered " +
              fmt(bordered) + " (tol 1e-8), y -> 2y " + fmt(hom) + " (tol 1e-9), errors " + std::to_string(errors)};
}

Outcome criterion6(const FunkSweep& s) {
  double degen = 0.0, flag = 0.0;
  bool scalar = true;
  for (const std::string name : {"euclidean3", "sphere2"}) {
    const MetricSpec spec = catalog(name);
    for (const auto& p : sample_phase_points(spec, 50, 6006)) {
      const CurvaturePacket c = compute_packet(spec, p, 5);
      const FirstIntegralSet fi = first_integrals(c);
      degen = std::max({degen, max_abs(c.I), max_abs(c.J), max_abs(c.B), max_abs(c.E), max_abs(fi.f), max_abs(fi.c)});
      if (name == "euclidean3") {
        flag = std::max({flag, c.flag.residual, std::abs(c.flag.kappa)});
        scalar = scalar && c.flag.is_scalar;
      }
    }
  }
  const bool pass = degen <= 1e-10 && flag <= 1e-10 && scalar && s.jacobi <= 1e-8;
  return {6, pass,
          "euclidean3 and sphere2: I, J, B, E, f, c at most " + fmt(degen) + " (tol 1e-10); euclidean flag residual and kappa " +
              fmt(flag) + " (tol 1e-10); funk3 Jacobi " + fmt(s.jacobi) + " (tol 1e-8)"};
}

Outcome criterion7() {
  double dE = 0.0, dchi = 0.0;
  for (const std::string name : {"funk3", "randers3"}) {
    const MetricSpec base = catalog(name);
    const MetricSpec moved = with_sigma(name, "exp(2*(0.6*x1 - 0.4*x2^2 + 0.2*x1*x3))");
    for (const auto& p : sample_phase_points(base, 50, 7007)) {
      const CurvaturePacket a = compute_packet(base, p, 5), b = compute_packet(moved, p, 5);
      dE = std::max(dE, support::max_diff(a.E, b.E) / max_abs(a.E));
      dchi = std::max(dchi, support::max_diff(a.chi, b.chi) / (1 + frobenius(a.N) * norm(a.S_y)));
    }
  }
  const bool pass = dE <= 1e-8 && dchi <= 1e-8;
  return {7, pass, "funk3 and randers3 with sigma = exp(2 phi): E changes by " + fmt(dE) + ", chi by " + fmt(dchi) + " (tol 1e-8)"};
}

Outcome criterion8() {
  double worst = 0.0;
  int checked = 0;
  std::string where;
  for (const auto& name : catalog_names()) {
    const MetricSpec spec = catalog(name);
    const int dim = 2 * spec.dimension;
    const auto indices = multi_indices(dim, 4);
    const oracle::ScalarFn fn = oracle::F2_function(spec);
    for (const auto& p : sample_phase_points(spec, 3, 8008, 0.5)) {
      const Jet f2 = eval_F2(spec, seed_phase_point(p, 4));
      std::vector<double> z = p.x;
      z.insert(z.end(), p.y.begin(), p.y.end());
      for (const auto& alpha : indices) {
        const double jet = f2.partial(std::span<const int>(alpha));
        const double fd = oracle::richardson_partial(fn, z, alpha, 0.05);
        const double rel = std::abs(jet - fd) / std::max(std::abs(jet), 1.0);
        if (rel > worst) {
          worst = rel;
          where = name;
        }
        ++checked;
      }
    }
  }
  return {8, worst <= 1e-5,
          std::to_string(checked) + " partials of F^2 up to order 4 over the catalog: worst relative error " + fmt(worst) +
              " (" + where + ", tol 1e-5)"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome criterion9() {
  const auto dir = std::filesystem::temp_directory_path() / "finsler_acceptance";
  std::filesystem::create_directories(dir);
  const std::string cli = FINSLER_CLI_PATH;
  const std::string funk = std::string(FINSLER_METRICS_DIR) + "/funk3.cfg";
  bool same = true, ran = true;
  std::string sizes;
  for (const std::string cmd : {"verify --samples 20", "inspect --samples 5"}) {
    std::string out[2];
    for (int k = 0; k < 2; ++k) {
      const auto path = dir / ("run" + std::to_string(k) + ".json");
      std::filesystem::remove(path);
      const std::string line = "\"" + cli + "\" " + cmd + " --seed 99 --metric \"" + funk + "\" --out \"" + path.string() + "\"";
      if (std::system(line.c_str()) != 0) ran = false;
      out[k] = slurp(path);
    }
    same = same && !out[0].empty() && out[0] == out[1];
    sizes += (sizes.empty() ? "" : ", ") + cmd.substr(0, cmd.find(' ')) + " " + std::to_string(out[0].size()) + " bytes";
  }
  return {9, ran && same, std::string("two CLI runs with seed 99 ") + (same ? "byte-identical" : "differ") + " (" + sizes + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--known-failure" && i + 1 < argc) {
      known.insert(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--known-failure N]...\n";
      return 2;
    }
  }

  std::vector<Outcome> results;
  const auto guarded = [&](int id, const std::function<Outcome()>& f) {
    try {
      results.push_back(f());
    } catch (const std::exception& e) {
      results.push_back({id, false, std::string("exception: ") + e.what()});
    }
    const auto& r = results.back();
    std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.detail << std::endl;
  };

  FunkSweep sweep;
  RadialRun radial;
  guarded(1, [&] {
    sweep = funk_sweep();
    return criterion1(sweep);
  });
  guarded(2, [&] { return criterion2(sweep); });
  guarded(3, [&] {
    radial = radial_run();
    return criterion3(radial);
  });
  guarded(4, [&] { return criterion4(radial); });
  guarded(5, criterion5);
  guarded(6, [&] { return criterion6(sweep); });
  guarded(7, criterion7);
  guarded(8, criterion8);
  guarded(9, criterion9);

  int unexpected = 0;
  for (const auto& r : results)
    if (!r.pass && !known.count(r.id)) ++unexpected;
  int passed = 0;
  for (const auto& r : results) passed += r.pass;
  std::cout << passed << "/" << results.size() << " criteria pass";
  if (!known.empty()) {
    std::cout << "; known failures:";
    for (int k : known) std::cout << ' ' << k;
  }
  std::cout << std::endl;
  return unexpected == 0 ? 0 : 1;
}
