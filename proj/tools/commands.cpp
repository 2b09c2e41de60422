#include "commands.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "finsler/errors.hpp"
#include "finsler/flow.hpp"
#include "finsler/integrals.hpp"
#include "finsler/sampling.hpp"
#include "finsler/tensors.hpp"

namespace finsler::cli {

namespace {

// ---- JSON helpers -----------------------------------------------------------

Json to_json(const Vector& v) { return Json(v); }

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.n; ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.n; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Row-major flat array of n^depth entries as nested arrays.
Json nested(const std::vector<double>& flat, int n, int depth, std::size_t offset = 0) {
  Json a = Json::array();
  std::size_t stride = 1;
  for (int d = 1; d < depth; ++d) stride *= static_cast<std::size_t>(n);
  for (int i = 0; i < n; ++i) {
    const std::size_t at = offset + static_cast<std::size_t>(i) * stride;
    if (depth == 1)
      a.push_back(flat[at]);
    else
      a.push_back(nested(flat, n, depth - 1, at));
  }
  return a;
}

Json metric_json(const MetricSpec& spec) {
  return Json{{"name", spec.name},
              {"family", std::string(family_name(spec.family))},
              {"dimension", spec.dimension},
              {"guard", spec.guard.describe()}};
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- packet report ---------------------------------------------------------

double contraction(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.a.size(); ++k) s += a.a[k] * b.a[k];
  return s;
}

Json packet_json(const MetricSpec& spec, const PhasePoint& p) {
  const CurvaturePacket c = compute_packet(spec, p);
  const FirstIntegralSet fi = first_integrals(c);
  const int n = c.n;
  Json j;
  j["x"] = p.x;
  j["y"] = p.y;
  j["F"] = c.F;
  j["F_y"] = to_json(c.F_y);
  j["g"] = to_json(c.g);
  j["g_inv"] = to_json(c.g_inv);
  j["h"] = to_json(c.h);
  j["condition"] = c.condition;
  j["G"] = to_json(c.G);
  j["N"] = to_json(c.N);
  j["jacobi"] = to_json(c.jacobi);
  j["R"] = nested(c.R, n, 3);
  j["B"] = nested(c.B, n, 4);
  j["E"] = to_json(c.E);
  j["E_s"] = to_json(c.E_s);
  j["E_cl"] = to_json(c.E_cl);
  j["tau"] = c.tau;
  j["S"] = c.S;
  j["S_y"] = to_json(c.S_y);
  j["chi"] = to_json(c.chi);
  j["hamel"] = to_json(c.hamel);
  j["I"] = to_json(c.I);
  j["J"] = to_json(c.J);
  j["I_hcov"] = to_json(c.I_hcov);
  j["J_vder"] = to_json(c.J_vder);
  j["alpha"] = Json{{"horizontal", to_json(c.alpha_horizontal)}, {"vertical", to_json(c.alpha_vertical)}};
  j["nabla_E"] = c.nabla_E ? to_json(*c.nabla_E) : Json(nullptr);
  j["nabla_g"] = to_json(c.nabla_g);
  j["flag"] = Json{{"is_scalar", c.flag.is_scalar}, {"kappa", c.flag.kappa}, {"residual", c.flag.residual}};
  j["EE"] = to_json(fi.EE);
  j["f"] = to_json(fi.f);
  j["c"] = to_json(fi.c);
  j["newton_residual"] = fi.newton_residual;
  j["bordered_value"] = fi.bordered_value;
  j["f1_cl"] = fi.f1_cl;
  j["s_cl"] = contraction(c.g_inv, c.E_cl);
  if (spec.family == Family::funk_ball_berwald && n == 3) {
    const auto pc = closed_forms(p);
    j["closed_forms"] = Json{{"g1_paper", pc.g1}, {"g2_paper", pc.g2}, {"c1", fi.c[0]}, {"c2", fi.c[1]}};
  }
  return j;
}

// ---- verify suites ---------------------------------------------------------

constexpr double kFloor = 1e-12;

// diff measured against tol·scale with the absolute floor 1e-12.
double ratio(double diff, double scale, double tol) { return diff / std::max(scale, kFloor / tol); }

double max_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s = std::max(s, std::abs(e));
  return s;
}
double max_abs(const Matrix& m) { return max_abs(m.a); }
double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}
double max_diff(const Matrix& a, const Matrix& b) { return max_diff(a.a, b.a); }

struct Suite {
  std::string name;
  std::string description;
  bool asserted = true;
  double tolerance = 0.0;
  double worst = 0.0;
  int worst_point = -1;
  int evaluated = 0;
  int failures = 0;

  void add(int point, double residual) {
    ++evaluated;
    const bool bad = !(residual <= tolerance);
    if (worst_point < 0 || residual > worst || (std::isnan(residual) && !std::isnan(worst))) {
      worst = residual;
      worst_point = point;
    }
    if (bad) ++failures;
  }
  bool pass() const { return !asserted || failures == 0; }
  Json to_json() const {
    return Json{{"name", name},
                {"description", description},
                {"mode", asserted ? "asserted" : "reported"},
                {"tolerance", tolerance},
                {"evaluated", evaluated},
                {"failures", failures},
                {"worst_residual", evaluated ? Json(worst) : Json(nullptr)},
                {"worst_point", worst_point},
                {"status", asserted ? (failures ? "fail" : "pass") : "reported"}};
  }
};

}  // namespace

VerifyResult verify_report(const MetricSpec& spec, int samples, std::uint64_t seed, double tol_scale) {
  const int n = spec.dimension;
  const bool riemannian = spec.family == Family::riemannian || spec.family == Family::euclidean;
  const bool chi_expected = spec.family != Family::custom;
  const auto T = [&](double t) { return t * tol_scale; };

  std::vector<Suite> suites;
  const auto suite = [&](std::string name, std::string description, double tol, bool asserted = true) {
    suites.push_back(Suite{std::move(name), std::move(description), asserted, T(tol)});
    return suites.size() - 1;
  };
  const auto s_sym = suite("metric_symmetry", "g_ij = g_ji", 1e-12);
  const auto s_energy = suite("energy_identity", "g_ij y^i y^j = F^2", 1e-10);
  const auto s_rank = suite("angular_rank", "h_ij has numerical rank n-1", 1e-8);
  const auto s_hom = suite("homogeneity", "F, g, G, N scale with degrees 1, 0, 2, 1 under y -> 2y, y/2", 1e-9);
  const auto s_hom_fi = suite("first_integral_homogeneity", "EE, f_a, c_a invariant under y -> 2y, y/2", 1e-9);
  const auto s_route_s = suite("E_route_S", "E via d2S agrees with E via d3G", 1e-8);
  const auto s_route_cl = suite("E_route_CL", "E via Cartan/Landsberg agrees with E via d3G", 1e-7);
  const auto s_ey = suite("E_annihilates_y", "E_ij y^j = 0 and E symmetric", 1e-9);
  const auto s_alpha = suite("alpha_contractions", "y^i I_i = 0 and y^i J_i = 0", 1e-10);
  const auto s_ng = suite("nabla_g", "dynamical covariant derivative of g vanishes", 1e-9);
  const auto s_chi = suite("chi_vanishing", "chi_i = 0", 1e-7, chi_expected);
  const auto s_hamel = suite("hamel", "S is a Hamel function", 1e-6, chi_expected);
  const auto s_equiv = suite("hamel_chi_equivalence", "chi = 0 exactly where the Hamel residual vanishes", 0.0);
  const auto s_ne = suite("nabla_E", "nabla E = 0 wherever chi = 0", 1e-7);
  const auto s_newton = suite("newton", "c_a = det(M_a)/a! from the traces f_a", 1e-9);
  const auto s_bord = suite("bordered_determinant", "bordered determinant equals c_{n-1}", 1e-8);
  const auto s_c1 = suite("trace_equals_c1", "f_1 = c_1", 1e-15);
  const auto s_f1cl = suite("f1_cl_route", "2F g^ij E^CL_ij = f_1", 1e-7);
  const auto s_det = suite("EE_determinant", "det EE = 0", 1e-8);
  const auto s_jac = suite("jacobi_vanishing", "Jacobi endomorphism vanishes", 1e-8,
                           spec.family == Family::funk_ball_berwald || spec.family == Family::euclidean);
  const bool flag_asserted = spec.family == Family::euclidean;
  const auto s_flag = suite("flag_scalar", "scalar flag curvature residual", flag_asserted ? 1e-10 : 1e-8, flag_asserted);
  std::optional<std::size_t> s_degen;
  if (riemannian) s_degen = suite("riemannian_degeneration", "I = J = B = E = 0 and f = c = 0", 1e-10);

  const auto points = sample_phase_points(spec, samples, seed);
  const int count = static_cast<int>(points.size());
  struct PointResult {
    std::vector<std::optional<double>> residuals;
    std::optional<std::string> error;
  };
  std::vector<PointResult> results(static_cast<std::size_t>(count));

  const auto evaluate = [&](int k) {
    const PhasePoint& p = points[static_cast<std::size_t>(k)];
    PointResult& out = results[static_cast<std::size_t>(k)];
    out.residuals.assign(suites.size(), std::nullopt);
    const auto put = [&](std::size_t s, double r) { out.residuals[s] = r; };
    try {
      const CurvaturePacket c = compute_packet(spec, p);
      const FirstIntegralSet fi = first_integrals(c);
      const double normE = frobenius(c.E), normN = frobenius(c.N), normy = norm(p.y);

      double asym = 0.0, gyy = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          asym = std::max(asym, std::abs(c.g(i, j) - c.g(j, i)));
          gyy += c.g(i, j) * p.y[static_cast<std::size_t>(i)] * p.y[static_cast<std::size_t>(j)];
        }
      put(s_sym, ratio(asym, max_abs(c.g), suites[s_sym].tolerance));
      put(s_energy, std::abs(gyy - c.F * c.F) / (c.F * c.F));

      {
        Eigen::MatrixXd h(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) h(i, j) = c.h(i, j);
        const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(h).singularValues();
        const double smallest = sv(n - 1) / sv(0);
        const double second = n >= 2 ? sv(n - 2) / sv(0) : 1.0;
        put(s_rank, second > suites[s_rank].tolerance ? smallest
                                                                 : std::numeric_limits<double>::infinity());
      }

      double hom = 0.0, hom_fi = 0.0;
      for (double lambda : {2.0, 0.5}) {
        PhasePoint q = p;
        for (double& v : q.y) v *= lambda;
        const CurvaturePacket cq = compute_packet(spec, q, 5);
        const FirstIntegralSet fq = first_integrals(cq);
        const double tol = suites[s_hom].tolerance;
        hom = std::max(hom, std::abs(cq.F - lambda * c.F) / (lambda * c.F));
        hom = std::max(hom, ratio(max_diff(cq.g, c.g), max_abs(c.g), tol));
        Vector G2 = c.G;
        for (double& v : G2) v *= lambda * lambda;
        hom = std::max(hom, ratio(max_diff(cq.G, G2), lambda * lambda * max_abs(c.G), tol));
        Matrix N2 = c.N;
        for (double& v : N2.a) v *= lambda;
        hom = std::max(hom, ratio(max_diff(cq.N, N2), lambda * max_abs(c.N), tol));
        const double tol_fi = suites[s_hom_fi].tolerance;
        hom_fi = std::max(hom_fi, ratio(max_diff(fq.EE, fi.EE), std::max(1.0, frobenius(fi.EE)), tol_fi));
        for (std::size_t a = 0; a < fi.f.size(); ++a) {
          hom_fi = std::max(hom_fi, std::abs(fq.f[a] - fi.f[a]) / std::max(1.0, std::abs(fi.f[a])));
          hom_fi = std::max(hom_fi, std::abs(fq.c[a] - fi.c[a]) / std::max(1.0, std::abs(fi.c[a])));
        }
      }
      put(s_hom, hom);
      put(s_hom_fi, hom_fi);

      const double Escale = max_abs(c.E);
      put(s_route_s, ratio(max_diff(c.E_s, c.E), Escale, suites[s_route_s].tolerance));
      put(s_route_cl, ratio(max_diff(c.E_cl, c.E), Escale, suites[s_route_cl].tolerance));

      double ey = 0.0;
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
          s += c.E(i, j) * p.y[static_cast<std::size_t>(j)];
          ey = std::max(ey, std::abs(c.E(i, j) - c.E(j, i)));
        }
        ey = std::max(ey, std::abs(s));
      }
      put(s_ey, ratio(ey, normE * std::max(1.0, normy), suites[s_ey].tolerance));

      double yi = 0.0, yj = 0.0;
      for (int i = 0; i < n; ++i) {
        yi += p.y[static_cast<std::size_t>(i)] * c.I[static_cast<std::size_t>(i)];
        yj += p.y[static_cast<std::size_t>(i)] * c.J[static_cast<std::size_t>(i)];
      }
      put(s_alpha, std::max(std::abs(yi) / (1 + norm(c.I) * normy), std::abs(yj) / (1 + norm(c.J) * normy)));
      put(s_ng, max_abs(c.nabla_g) / (frobenius(c.g) * (1 + normN)));

      const double chi_res = norm(c.chi) / (1 + normN * norm(c.S_y));
      const double hamel_res = frobenius(c.hamel) / (1 + c.hamel_scale);
      put(s_chi, chi_res);
      put(s_hamel, hamel_res);
      const bool chi_small = chi_res <= suites[s_chi].tolerance;
      const bool hamel_small = hamel_res <= suites[s_hamel].tolerance;
      put(s_equiv, chi_small == hamel_small ? 0.0 : 1.0);
      if (chi_small && c.nabla_E) put(s_ne, frobenius(*c.nabla_E) / (1 + normE * normN));

      put(s_newton, fi.newton_residual);
      const double cn1 = fi.c.empty() ? 0.0 : fi.c.back();
      put(s_bord, std::abs(fi.bordered_value - cn1) / std::max(1.0, std::abs(cn1)));
      if (!fi.f.empty()) {
        put(s_c1, std::abs(fi.f[0] - fi.c[0]) / std::max(1.0, std::abs(fi.c[0])));
        put(s_f1cl, std::abs(fi.f1_cl - fi.f[0]) / std::max(1.0, std::abs(fi.f[0])));
      }
      put(s_det, std::abs(fi.det_EE) / std::max(1.0, std::pow(frobenius(fi.EE), n)));
      put(s_jac, ratio(max_abs(c.jacobi), normN * normN, suites[s_jac].tolerance));
      put(s_flag, flag_asserted ? std::max(c.flag.residual, std::abs(c.flag.kappa)) : c.flag.residual);
      if (s_degen) {
        const double r = std::max({max_abs(c.I), max_abs(c.J), max_abs(c.B), max_abs(c.E), max_abs(fi.f), max_abs(fi.c)});
        put(*s_degen, r);
      }
    } catch (const Error& e) {
      out.error = e.what();
    }
  };

  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int k = next++; k < count; k = next++) evaluate(k);
  };
  const int threads = std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, std::max(1, count));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  Json point_list = Json::array();
  Json errors = Json::array();
  for (int k = 0; k < count; ++k) {
    const PhasePoint& p = points[static_cast<std::size_t>(k)];
    const PointResult& r = results[static_cast<std::size_t>(k)];
    point_list.push_back(Json{{"index", k}, {"x", p.x}, {"y", p.y}});
    if (r.error) errors.push_back(Json{{"index", k}, {"error", *r.error}});
    for (std::size_t s = 0; s < suites.size(); ++s)
      if (r.residuals[s]) suites[s].add(k, *r.residuals[s]);
  }

  VerifyResult r;
  r.pass = errors.empty();
  Json suite_list = Json::array();
  Json failed = Json::array();
  for (const auto& s : suites) {
    suite_list.push_back(s.to_json());
    if (!s.pass()) {
      r.pass = false;
      failed.push_back(s.name);
    }
  }
  r.report = Json{{"schema_version", kSchemaVersion},
                  {"command", "verify"},
                  {"metric", metric_json(spec)},
                  {"samples", samples},
                  {"seed", seed},
                  {"tolerance_scale", tol_scale},
                  {"suites", suite_list},
                  {"errors", errors},
                  {"failed_suites", failed},
                  {"pass", r.pass},
                  {"points", point_list}};
  return r;
}

Json inspect_report(const MetricSpec& spec, const std::vector<PhasePoint>& points) {
  Json list = Json::array();
  for (const auto& p : points) list.push_back(packet_json(spec, p));
  return Json{{"schema_version", kSchemaVersion}, {"command", "inspect"}, {"metric", metric_json(spec)}, {"points", list}};
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw ConfigError("not a real number: '" + cell + "'");
    }
    while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
    if (used != cell.size()) throw ConfigError("not a real number: '" + cell + "'");
    v.push_back(d);
  }
  if (v.empty()) throw ConfigError("empty list of reals");
  return v;
}

PhasePoint parse_point(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("phase point must be written x1,..,xn:y1,..,yn");
  PhasePoint p;
  p.x = parse_reals(text.substr(0, colon));
  p.y = parse_reals(text.substr(colon + 1));
  if (p.x.size() != p.y.size()) throw ConfigError("x and y of a phase point differ in length");
  return p;
}

namespace {

// ---- CLI wiring --------------------------------------------------------------

struct Common {
  std::string metric;
  std::uint64_t seed = 1;
  std::optional<double> tol;
  std::string format = "json";
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--metric", c.metric, "metric config file")->required();
  app->add_option("--seed", c.seed, "random seed for sampled phase points");
  app->add_option("--tol", c.tol, "tolerance (command specific)");
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--out", c.out, "output path (default: standard output)");
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string inspect_csv(const Json& report) {
  std::ostringstream os;
  const int n = report["metric"]["dimension"].get<int>();
  os << "index";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= n; ++i) os << ",y" << i;
  os << ",F";
  for (int a = 1; a < n; ++a) os << ",f" << a;
  for (int a = 1; a < n; ++a) os << ",c" << a;
  os << ",newton_residual,bordered_value,f1_cl,kappa,flag_residual\n";
  int k = 0;
  for (const auto& p : report["points"]) {
    os << k++;
    for (const auto& v : p["x"]) os << ',' << format_real(v.get<double>());
    for (const auto& v : p["y"]) os << ',' << format_real(v.get<double>());
    os << ',' << format_real(p["F"].get<double>());
    for (const auto& v : p["f"]) os << ',' << format_real(v.get<double>());
    for (const auto& v : p["c"]) os << ',' << format_real(v.get<double>());
    os << ',' << format_real(p["newton_residual"].get<double>()) << ',' << format_real(p["bordered_value"].get<double>())
       << ',' << format_real(p["f1_cl"].get<double>()) << ',' << format_real(p["flag"]["kappa"].get<double>()) << ','
       << format_real(p["flag"]["residual"].get<double>()) << '\n';
  }
  return os.str();
}

std::string verify_csv(const Json& report) {
  std::ostringstream os;
  os << "suite,mode,status,tolerance,worst_residual,worst_point,evaluated,failures\n";
  for (const auto& s : report["suites"]) {
    os << s["name"].get<std::string>() << ',' << s["mode"].get<std::string>() << ',' << s["status"].get<std::string>()
       << ',' << format_real(s["tolerance"].get<double>()) << ','
       << (s["worst_residual"].is_null() ? std::string() : format_real(s["worst_residual"].get<double>())) << ','
       << s["worst_point"].get<int>() << ',' << s["evaluated"].get<int>() << ',' << s["failures"].get<int>() << '\n';
  }
  return os.str();
}

Json drift_json(const DriftReport& d, const Trajectory& tr) {
  Json fields = Json::array();
  for (std::size_t k = 0; k < d.fields.size(); ++k) {
    const auto& f = d.fields[k];
    const double last = d.values.empty() ? std::numeric_limits<double>::quiet_NaN() : d.values.back()[k];
    fields.push_back(Json{{"id", f.id},
                          {"initial", f.initial},
                          {"final", last},
                          {"max_abs_drift", f.max_abs},
                          {"max_rel_drift", f.max_rel},
                          {"t_at_max", f.t_at_max},
                          {"pass", f.pass}});
  }
  const auto& end = tr.samples.back();
  return Json{{"status", std::string(status_name(tr.status))},
              {"exit_reason", tr.exit_reason},
              {"stats",
               {{"steps", tr.stats.steps},
                {"rejections", tr.stats.rejections},
                {"rhs_evaluations", tr.stats.rhs_evaluations},
                {"min_step", tr.stats.min_step},
                {"max_step", tr.stats.max_step}}},
              {"final", {{"t", end.t}, {"x", end.state.x}, {"y", end.state.y}}},
              {"samples", tr.samples.size()},
              {"tolerance", d.tolerance},
              {"fields", fields},
              {"pass", d.pass}};
}

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> ids;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(' '));
    cell.erase(cell.find_last_not_of(' ') + 1);
    if (!cell.empty()) ids.push_back(cell);
  }
  return ids;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Curvature tower, first integrals and invariant checks for Finsler metrics", "finsler"};
  app.require_subcommand(1);

  Common c_inspect, c_verify, c_flow, c_bracket;

  auto* inspect = app.add_subcommand("inspect", "curvature packet and first integrals at phase points");
  add_common(inspect, c_inspect);
  std::vector<std::string> points;
  int inspect_samples = 0;
  inspect->add_option("--point", points, "phase point x1,..,xn:y1,..,yn (repeatable)");
  inspect->add_option("--samples", inspect_samples, "additional seeded random points")->check(CLI::NonNegativeNumber);

  auto* verify = app.add_subcommand("verify", "run the invariant suites at seeded random points");
  add_common(verify, c_verify);
  int verify_samples = 100;
  verify->add_option("--samples", verify_samples, "number of random points")->check(CLI::PositiveNumber);

  auto* flow = app.add_subcommand("flow", "integrate a geodesic and report drift of watched fields");
  add_common(flow, c_flow);
  std::string x0, y0, watch, csv_path, report_path;
  IntegratorSettings settings;
  double t_max = 10.0;
  flow->add_option("--x0", x0, "initial base point")->required();
  flow->add_option("--y0", y0, "initial velocity")->required();
  flow->add_option("--tmax", t_max, "integration time");
  flow->add_option("--rtol", settings.rtol, "relative tolerance");
  flow->add_option("--atol", settings.atol, "absolute tolerance");
  flow->add_option("--sample-dt", settings.sample_dt, "output cadence (0: every step)");
  flow->add_option("--watch", watch, "comma-separated field ids");
  flow->add_option("--csv", csv_path, "also write the trajectory CSV here (json format)");
  flow->add_option("--report", report_path, "also write the drift JSON here (csv format)");

  auto* bracket = app.add_subcommand("bracket", "Poisson bracket of two fields at seeded random points");
  add_common(bracket, c_bracket);
  std::string bracket_fields;
  int bracket_samples = 50;
  bool assert_zero = false;
  bracket->add_option("--fields", bracket_fields, "two field ids, comma separated")->required();
  bracket->add_option("--samples", bracket_samples, "number of random points")->check(CLI::PositiveNumber);
  bracket->add_flag("--assert-zero", assert_zero, "fail unless every bracket is below tolerance");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kSetupError;
  }

  try {
    if (inspect->parsed()) {
      const MetricSpec spec = load_metric_file(c_inspect.metric);
      std::vector<PhasePoint> pts;
      for (const auto& s : points) {
        PhasePoint p = parse_point(s);
        check_phase_point(spec, p);
        pts.push_back(std::move(p));
      }
      for (auto& p : sample_phase_points(spec, inspect_samples, c_inspect.seed)) pts.push_back(std::move(p));
      if (pts.empty()) throw ConfigError("inspect needs --point or --samples");
      const Json report = inspect_report(spec, pts);
      emit(c_inspect.format == "csv" ? inspect_csv(report) : dump(report), c_inspect.out, out);
      return kOk;
    }

    if (verify->parsed()) {
      const MetricSpec spec = load_metric_file(c_verify.metric);
      const double scale = c_verify.tol.value_or(1.0);
      if (!(scale > 0.0)) throw ConfigError("--tol must be positive");
      const VerifyResult r = verify_report(spec, verify_samples, c_verify.seed, scale);
      emit(c_verify.format == "csv" ? verify_csv(r.report) : dump(r.report), c_verify.out, out);
      if (!r.pass) err << "verify: invariant failures in " << r.report["failed_suites"].dump() << "\n";
      return r.pass ? kOk : kCheckFailed;
    }

    if (flow->parsed()) {
      const MetricSpec spec = load_metric_file(c_flow.metric);
      PhasePoint init{parse_reals(x0), parse_reals(y0)};
      std::vector<std::string> ids = split_ids(watch);
      if (watch.empty()) {
        ids = {"F"};
        for (int a = 1; a < spec.dimension; ++a) ids.push_back("f" + std::to_string(a));
        for (int a = 1; a < spec.dimension; ++a) ids.push_back("c" + std::to_string(a));
      }
      for (const auto& id : ids) parse_field(spec, id);
      const double tol = c_flow.tol.value_or(1e-6);
      Json head{{"schema_version", kSchemaVersion},
                {"command", "flow"},
                {"metric", metric_json(spec)},
                {"init", {{"x", init.x}, {"y", init.y}}},
                {"t_max", t_max},
                {"settings", {{"rtol", settings.rtol}, {"atol", settings.atol}, {"sample_dt", settings.sample_dt}}}};
      Trajectory tr;
      int code = kOk;
      try {
        tr = integrate(spec, init, t_max, settings);
      } catch (const StepFailure& e) {
        err << "flow: " << e.what() << "\n";
        tr = e.partial();
        code = kStepFailure;
      }
      const DriftReport d = drift(spec, tr, ids, tol);
      Json report = head;
      const Json tail = drift_json(d, tr);
      for (const auto& [k, v] : tail.items()) report[k] = v;
      std::ostringstream csv;
      write_trajectory_csv(csv, tr, d);
      if (c_flow.format == "csv") {
        emit(csv.str(), c_flow.out, out);
        if (!report_path.empty()) emit(dump(report), report_path, out);
      } else {
        emit(dump(report), c_flow.out, out);
        if (!csv_path.empty()) emit(csv.str(), csv_path, out);
      }
      if (code != kOk) return code;
      if (!d.pass) err << "flow: drift beyond tolerance\n";
      return d.pass ? kOk : kCheckFailed;
    }

    if (bracket->parsed()) {
      const MetricSpec spec = load_metric_file(c_bracket.metric);
      const auto ids = split_ids(bracket_fields);
      if (ids.size() != 2) throw ConfigError("--fields needs exactly two ids");
      parse_field(spec, ids[0]);
      parse_field(spec, ids[1]);
      const double tol = c_bracket.tol.value_or(1e-6);
      const bool closed = ids[0].ends_with("_paper") || ids[1].ends_with("_paper");
      std::vector<FieldId> compare;
      if (closed)
        for (const char* id : {"g1_paper", "g2_paper", "c1", "c2"}) compare.push_back(parse_field(spec, id));

      Json pts = Json::array(), comparison = Json::array();
      double max_abs_value = 0.0, max_rel = 0.0;
      bool pass = true;
      std::ostringstream csv;
      csv << "index,value,scale,relative\n";
      const auto sampled = sample_phase_points(spec, bracket_samples, c_bracket.seed);
      for (int k = 0; k < static_cast<int>(sampled.size()); ++k) {
        const auto& p = sampled[static_cast<std::size_t>(k)];
        const BracketResult b = poisson_bracket(spec, ids[0], ids[1], p);
        const double relative = std::abs(b.value) / std::max(b.scale, kFloor / tol);
        max_abs_value = std::max(max_abs_value, std::abs(b.value));
        max_rel = std::max(max_rel, relative);
        if (!(relative <= tol)) pass = false;
        pts.push_back(Json{{"index", k}, {"x", p.x}, {"y", p.y}, {"value", b.value}, {"scale", b.scale}, {"relative", relative}});
        csv << k << ',' << format_real(b.value) << ',' << format_real(b.scale) << ',' << format_real(relative) << '\n';
        if (closed) {
          const auto v = evaluate_fields(spec, compare, p);
          comparison.push_back(Json{{"index", k}, {"g1_paper", v[0]}, {"g2_paper", v[1]}, {"c1", v[2]}, {"c2", v[3]}});
        }
      }
      Json report{{"schema_version", kSchemaVersion},
                  {"command", "bracket"},
                  {"metric", metric_json(spec)},
                  {"fields", ids},
                  {"samples", bracket_samples},
                  {"seed", c_bracket.seed},
                  {"tolerance", tol},
                  {"assert_zero", assert_zero},
                  {"max_abs", max_abs_value},
                  {"max_relative", max_rel},
                  {"within_tolerance", pass},
                  {"points", pts}};
      if (closed) report["closed_form_comparison"] = comparison;
      emit(c_bracket.format == "csv" ? csv.str() : dump(report), c_bracket.out, out);
      if (assert_zero && !pass) {
        err << "bracket: |{" << ids[0] << ", " << ids[1] << "}| exceeds tolerance (max relative " << max_rel << ")\n";
        return kCheckFailed;
      }
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kSetupError;
  }
  return kSetupError;
}

}  // namespace finsler::cli
