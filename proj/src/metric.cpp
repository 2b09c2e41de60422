#include "finsler/metric.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace finsler {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::euclidean: return "euclidean";
    case Family::riemannian: return "riemannian";
    case Family::funk_ball_berwald: return "funk_ball_berwald";
    case Family::custom: return "custom";
  }
  return "?";
}

Family family_from_name(std::string_view name) {
  if (name == "euclidean") return Family::euclidean;
  if (name == "riemannian") return Family::riemannian;
  if (name == "funk_ball_berwald") return Family::funk_ball_berwald;
  if (name == "custom") return Family::custom;
  throw ConfigError("unknown metric family '" + std::string(name) + "'");
}

namespace {

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace

bool DomainGuard::contains(std::span<const double> x) const {
  if (kind == Kind::none) return true;
  const double r = radius - margin;
  return norm2(x) <= r * r;
}

bool DomainGuard::contains_hard(std::span<const double> x) const {
  if (kind == Kind::none) return true;
  return norm2(x) < radius * radius;
}

double DomainGuard::sampling_radius() const { return kind == Kind::none ? 1.0 : radius - margin; }

std::string DomainGuard::describe() const {
  if (kind == Kind::none) return "none";
  std::ostringstream os;
  os.precision(17);
  os << "ball " << radius;
  return os.str();
}

const Expr& MetricSpec::component(int i, int j) const {
  const auto n = static_cast<std::size_t>(dimension);
  const auto& a = components.at(static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j));
  if (a) return *a;
  const auto& b = components.at(static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i));
  if (!b) throw ConfigError("missing metric component");
  return *b;
}

void check_phase_point(const MetricSpec& spec, const PhasePoint& p, GuardMode mode) {
  const auto n = static_cast<std::size_t>(spec.dimension);
  if (p.x.size() != n || p.y.size() != n)
    throw DimensionError("phase point has dimension " + std::to_string(p.x.size()) + ", metric has " +
                         std::to_string(n));
  if (std::all_of(p.y.begin(), p.y.end(), [](double v) { return v == 0.0; }))
    throw DomainError("y = 0 is outside the slit tangent bundle");
  for (double v : p.x)
    if (!std::isfinite(v)) throw DomainError("non-finite base coordinate");
  for (double v : p.y)
    if (!std::isfinite(v)) throw DomainError("non-finite fibre coordinate");
  const bool inside = mode == GuardMode::effective ? spec.guard.contains(p.x) : spec.guard.contains_hard(p.x);
  if (!inside) throw DomainError("x lies outside the domain guard (" + spec.guard.describe() + ")");
}

namespace {

template <class S>
struct Coordinates {
  std::vector<S> xs;
  std::vector<S> ys;
};

template <class T>
Coordinates<BasicJet<T>> split(const MetricSpec& spec, const std::vector<BasicJet<T>>& seeds) {
  const auto n = static_cast<std::size_t>(spec.dimension);
  if (seeds.size() != 2 * n)
    throw DimensionError("expected " + std::to_string(2 * n) + " seed jets, got " + std::to_string(seeds.size()));
  Coordinates<BasicJet<T>> c;
  c.xs.assign(seeds.begin(), seeds.begin() + static_cast<std::ptrdiff_t>(n));
  c.ys.assign(seeds.begin() + static_cast<std::ptrdiff_t>(n), seeds.end());
  return c;
}

template <class T>
PhasePoint values_of(const Coordinates<BasicJet<T>>& c) {
  PhasePoint p;
  for (const auto& j : c.xs) p.x.push_back(value_of(j.value()));
  for (const auto& j : c.ys) p.y.push_back(value_of(j.value()));
  return p;
}

// Pieces of the Funk-type Berwald metric on the unit ball:
//   Q = |y|² - (|x|²|y|² - <x,y>²) = |y|²(1 - |x|²) + <x,y>²
//   P = (√Q + <x,y>) / (1 - |x|²)
//   F = (√Q + <x,y>)² / ((1 - |x|²)² √Q)
// For <x,y> < 0 the sum √Q + <x,y> is evaluated as |y|²(1 - |x|²)/(√Q - <x,y>).
template <class S>
struct FunkPieces {
  S root_q;
  S root_q_plus_xy;
  S one_minus_xx;
};

double head(double v) { return v; }
template <class T>
double head(const BasicJet<T>& j) {
  return value_of(j.value());
}

template <class S>
FunkPieces<S> funk_pieces(const std::vector<S>& xs, const std::vector<S>& ys, const S& one) {
  using scalar_ops::checked_div;
  using scalar_ops::checked_sqrt;
  S xx = one * 0.0, yy = one * 0.0, xy = one * 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xx = xx + xs[i] * xs[i];
    yy = yy + ys[i] * ys[i];
    xy = xy + xs[i] * ys[i];
  }
  S omx = one - xx;
  S root_q = checked_sqrt(yy * omx + xy * xy);
  S sum = head(xy) >= 0.0 ? root_q + xy : checked_div(yy * omx, root_q - xy);
  return {root_q, sum, omx};
}

template <class S>
S funk_F2(const std::vector<S>& xs, const std::vector<S>& ys, const S& one) {
  using scalar_ops::checked_div;
  const auto fp = funk_pieces(xs, ys, one);
  S num = fp.root_q_plus_xy * fp.root_q_plus_xy;
  S den = fp.one_minus_xx * fp.one_minus_xx * fp.root_q;
  S f = checked_div(num, den);
  return f * f;
}

template <class S>
S generic_F2(const MetricSpec& spec, const std::vector<S>& xs, const std::vector<S>& ys, const S& one) {
  switch (spec.family) {
    case Family::euclidean: {
      S acc = one * 0.0;
      for (const auto& y : ys) acc = acc + y * y;
      return acc;
    }
    case Family::riemannian: {
      S acc = one * 0.0;
      for (int i = 0; i < spec.dimension; ++i) {
        for (int j = 0; j < spec.dimension; ++j) {
          S gij = evaluate(spec.component(i, j), xs, ys, one);
          acc = acc + gij * ys[static_cast<std::size_t>(i)] * ys[static_cast<std::size_t>(j)];
        }
      }
      return acc;
    }
    case Family::funk_ball_berwald: return funk_F2(xs, ys, one);
    case Family::custom: return evaluate(*spec.expression, xs, ys, one);
  }
  throw Error("unreachable family");
}

double rel_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Deterministic sample points used by the load-time checks.
std::vector<PhasePoint> validation_points(const MetricSpec& spec, int count) {
  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  const auto n = static_cast<std::size_t>(spec.dimension);
  const double radius = 0.9 * spec.guard.sampling_radius();
  std::vector<PhasePoint> pts;
  for (int k = 0; k < count; ++k) {
    PhasePoint p;
    p.x.resize(n);
    p.y.resize(n);
    for (auto& v : p.x) v = normal(rng);
    const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(n)) / std::sqrt(norm2(p.x));
    for (auto& v : p.x) v *= r;
    for (auto& v : p.y) v = normal(rng);
    pts.push_back(std::move(p));
  }
  return pts;
}

void check_variables(const MetricSpec& spec, const Expr& e, const std::string& what, bool allow_y) {
  const auto u = variable_usage(e);
  if (u.max_x > spec.dimension || u.max_y > spec.dimension)
    throw DimensionError(what + " uses a variable index beyond dimension " + std::to_string(spec.dimension));
  if (!allow_y && (u.max_y > 0 || u.uses_y_reducer)) throw ConfigError(what + " must depend on x only");
}

void validate(const MetricSpec& spec) {
  if (spec.dimension < 2 || spec.dimension > kMaxJetDim / 2)
    throw ConfigError("dimension must be between 2 and " + std::to_string(kMaxJetDim / 2));
  if (spec.guard.kind == DomainGuard::Kind::ball && !(spec.guard.radius > spec.guard.margin))
    throw ConfigError("guard ball radius must exceed its margin");

  check_variables(spec, *spec.sigma, "sigma", false);
  if (spec.family == Family::custom) check_variables(spec, *spec.expression, "expression", true);
  if (spec.family == Family::riemannian) {
    for (int i = 0; i < spec.dimension; ++i) {
      for (int j = 0; j < spec.dimension; ++j) {
        const Expr& e = spec.component(i, j);
        check_variables(spec, e, "component g" + std::to_string(i + 1) + std::to_string(j + 1), false);
      }
    }
  }

  const auto n = static_cast<std::size_t>(spec.dimension);
  const auto pts = validation_points(spec, 24);
  const double one = 1.0;
  int sigma_ok = 0;
  int homogeneity_ok = 0;
  for (const auto& p : pts) {
    try {
      const double s = evaluate(*spec.sigma, p.x, p.y, one);
      if (!(s > 0.0)) throw ConfigError("sigma must be positive on the domain");
      ++sigma_ok;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error&) {
    }

    if (spec.family == Family::riemannian) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          const auto& a = spec.components[i * n + j];
          const auto& b = spec.components[j * n + i];
          if (!a || !b) continue;
          const double va = evaluate(*a, p.x, p.y, one);
          const double vb = evaluate(*b, p.x, p.y, one);
          if (rel_gap(va, vb) > 1e-12)
            throw ConfigError("components g" + std::to_string(i + 1) + std::to_string(j + 1) + " and g" +
                              std::to_string(j + 1) + std::to_string(i + 1) + " disagree");
        }
      }
    }

    if (spec.family == Family::custom) {
      try {
        const double base = evaluate(*spec.expression, p.x, p.y, one);
        for (double lambda : {2.0, 3.0}) {
          std::vector<double> scaled = p.y;
          for (auto& v : scaled) v *= lambda;
          const double s = evaluate(*spec.expression, p.x, scaled, one);
          if (rel_gap(s, lambda * lambda * base) > 1e-10)
            throw HomogeneityError("F² expression is not positively 2-homogeneous in y (F²(x, " +
                                   std::to_string(static_cast<int>(lambda)) + "y) != " +
                                   std::to_string(static_cast<int>(lambda * lambda)) + "F²(x, y))");
        }
        ++homogeneity_ok;
      } catch (const HomogeneityError&) {
        throw;
      } catch (const Error&) {
      }
    }
  }
  if (sigma_ok == 0) throw ConfigError("sigma could not be evaluated on the domain");
  if (spec.family == Family::custom && homogeneity_ok == 0)
    throw ConfigError("F² expression could not be evaluated at any sample point");
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

struct Entry {
  std::string value;
  int line;
  int value_column;
};

DomainGuard parse_guard(const Entry& e) {
  std::istringstream is(e.value);
  std::string kind;
  is >> kind;
  DomainGuard g;
  if (kind == "none") {
    g.kind = DomainGuard::Kind::none;
  } else if (kind == "ball") {
    g.kind = DomainGuard::Kind::ball;
    std::string r;
    is >> r;
    auto [ptr, ec] = std::from_chars(r.data(), r.data() + r.size(), g.radius);
    if (r.empty() || ec != std::errc() || ptr != r.data() + r.size() || !(g.radius > 0.0))
      throw SyntaxError("guard 'ball' needs a positive radius", e.line, e.value_column);
  } else {
    throw SyntaxError("guard must be 'none' or 'ball <radius>'", e.line, e.value_column);
  }
  std::string rest;
  if (is >> rest) throw SyntaxError("trailing text after guard", e.line, e.value_column);
  return g;
}

}  // namespace

MetricSpec parse_metric(std::string_view text) {
  std::map<std::string, Entry> metric_keys;
  std::map<std::string, Entry> component_keys;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const int indent = static_cast<int>(line.find_first_not_of(" \t")) + 1;
    if (t.front() == '[') {
      if (t.back() != ']') throw SyntaxError("unterminated section header", line_no, indent);
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (section != "metric" && section != "components")
        throw SyntaxError("unknown section [" + section + "]", line_no, indent);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw SyntaxError("expected 'key = value'", line_no, indent);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw SyntaxError("empty key", line_no, indent);
    std::string_view raw = line.substr(eq + 1);
    const std::size_t lead = raw.find_first_not_of(" \t");
    const int value_column = static_cast<int>(eq) + 2 + (lead == std::string_view::npos ? 0 : static_cast<int>(lead));
    Entry entry{trim(raw), line_no, value_column};
    if (section.empty()) throw SyntaxError("key outside of a section", line_no, indent);
    auto& dest = section == "metric" ? metric_keys : component_keys;
    if (dest.count(key)) throw SyntaxError("duplicate key '" + key + "'", line_no, indent);
    dest.emplace(key, std::move(entry));
  }

  static const std::vector<std::string> known = {"name", "dimension", "family", "expression", "sigma", "guard"};
  for (const auto& [key, e] : metric_keys)
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw SyntaxError("unknown key '" + key + "'", e.line, 1);

  auto require = [&](const std::string& key) -> const Entry& {
    auto it = metric_keys.find(key);
    if (it == metric_keys.end()) throw ConfigError("missing required key '" + key + "' in [metric]");
    return it->second;
  };

  MetricSpec spec;
  spec.name = metric_keys.count("name") ? metric_keys.at("name").value : std::string("unnamed");
  {
    const Entry& e = require("dimension");
    int d = 0;
    auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), d);
    if (e.value.empty() || ec != std::errc() || ptr != e.value.data() + e.value.size())
      throw SyntaxError("dimension must be an integer", e.line, e.value_column);
    spec.dimension = d;
  }
  spec.family = family_from_name(require("family").value);
  if (spec.dimension < 2 || spec.dimension > kMaxJetDim / 2)
    throw ConfigError("dimension must be between 2 and " + std::to_string(kMaxJetDim / 2));

  if (auto it = metric_keys.find("sigma"); it != metric_keys.end()) {
    spec.sigma = parse_expression(it->second.value, it->second.line, it->second.value_column);
  } else {
    spec.sigma = make_number(1.0);
  }

  if (auto it = metric_keys.find("guard"); it != metric_keys.end()) spec.guard = parse_guard(it->second);

  const bool has_expression = metric_keys.count("expression") > 0;
  if (spec.family == Family::custom) {
    const Entry& e = require("expression");
    spec.expression = parse_expression(e.value, e.line, e.value_column);
  } else if (has_expression) {
    throw ConfigError("key 'expression' is only valid for family = custom");
  }

  if (spec.family == Family::funk_ball_berwald) {
    if (metric_keys.count("guard") &&
        (spec.guard.kind != DomainGuard::Kind::ball || spec.guard.radius != 1.0))
      throw ConfigError("funk_ball_berwald is defined on the unit ball; guard must be 'ball 1'");
    spec.guard = DomainGuard{DomainGuard::Kind::ball, 1.0, 1e-6};
  }

  const auto n = static_cast<std::size_t>(spec.dimension);
  if (spec.family == Family::riemannian) {
    spec.components.assign(n * n, nullptr);
    for (const auto& [key, e] : component_keys) {
      if (key.size() != 3 || key[0] != 'g' || !std::isdigit(static_cast<unsigned char>(key[1])) ||
          !std::isdigit(static_cast<unsigned char>(key[2])))
        throw SyntaxError("component keys look like g12", e.line, 1);
      const int i = key[1] - '0';
      const int j = key[2] - '0';
      if (i < 1 || j < 1 || i > spec.dimension || j > spec.dimension)
        throw DimensionError("component " + key + " outside dimension " + std::to_string(spec.dimension));
      spec.components[static_cast<std::size_t>(i - 1) * n + static_cast<std::size_t>(j - 1)] =
          parse_expression(e.value, e.line, e.value_column);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        if (!spec.components[i * n + j] && !spec.components[j * n + i])
          throw ConfigError("missing component g" + std::to_string(i + 1) + std::to_string(j + 1));
  } else if (!component_keys.empty()) {
    throw ConfigError("[components] is only valid for family = riemannian");
  }

  validate(spec);
  return spec;
}

MetricSpec load_metric_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open metric file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_metric(ss.str());
}

std::string print_metric(const MetricSpec& spec) {
  std::ostringstream os;
  os << "[metric]\n";
  os << "name = " << spec.name << "\n";
  os << "dimension = " << spec.dimension << "\n";
  os << "family = " << family_name(spec.family) << "\n";
  if (spec.family == Family::custom) os << "expression = " << print_expression(*spec.expression) << "\n";
  os << "sigma = " << print_expression(*spec.sigma) << "\n";
  os << "guard = " << spec.guard.describe() << "\n";
  if (spec.family == Family::riemannian) {
    os << "\n[components]\n";
    const auto n = static_cast<std::size_t>(spec.dimension);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (const auto& c = spec.components[i * n + j])
          os << "g" << i + 1 << j + 1 << " = " << print_expression(*c) << "\n";
  }
  return os.str();
}

bool structurally_equal(const MetricSpec& a, const MetricSpec& b) {
  auto same = [](const ExprPtr& p, const ExprPtr& q) {
    if (!p || !q) return !p && !q;
    return structurally_equal(*p, *q);
  };
  if (a.name != b.name || a.dimension != b.dimension || a.family != b.family) return false;
  if (a.guard.kind != b.guard.kind || a.guard.radius != b.guard.radius) return false;
  if (!same(a.expression, b.expression) || !same(a.sigma, b.sigma)) return false;
  if (a.components.size() != b.components.size()) return false;
  for (std::size_t i = 0; i < a.components.size(); ++i)
    if (!same(a.components[i], b.components[i])) return false;
  return true;
}

MetricSpec euclidean_metric(int dimension) {
  return parse_metric("[metric]\nname = euclidean" + std::to_string(dimension) +
                      "\ndimension = " + std::to_string(dimension) + "\nfamily = euclidean\n");
}

MetricSpec funk_ball_berwald_metric(int dimension) {
  return parse_metric("[metric]\nname = funk_ball_berwald" + std::to_string(dimension) +
                      "\ndimension = " + std::to_string(dimension) + "\nfamily = funk_ball_berwald\n");
}

MetricSpec with_sigma(const MetricSpec& spec, ExprPtr sigma) {
  MetricSpec copy = spec;
  copy.sigma = std::move(sigma);
  validate(copy);
  return copy;
}

template <class T>
BasicJet<T> eval_F2(const MetricSpec& spec, const std::vector<BasicJet<T>>& seeds, GuardMode mode) {
  const auto c = split(spec, seeds);
  check_phase_point(spec, values_of(c), mode);
  const auto one = BasicJet<T>::constant(seeds.front().dim(), seeds.front().order(), T(1.0));
  BasicJet<T> f2 = generic_F2(spec, c.xs, c.ys, one);
  if (!(value_of(f2.value()) > 0.0)) throw DomainError("F² is not positive at this point");
  return f2;
}

double eval_F2_value(const MetricSpec& spec, const PhasePoint& p, GuardMode mode) {
  check_phase_point(spec, p, mode);
  const double f2 = generic_F2(spec, p.x, p.y, 1.0);
  if (!(f2 > 0.0)) throw DomainError("F² is not positive at this point");
  return f2;
}

template <class T>
BasicJet<T> eval_sigma(const MetricSpec& spec, const std::vector<BasicJet<T>>& seeds) {
  const auto c = split(spec, seeds);
  const auto one = BasicJet<T>::constant(seeds.front().dim(), seeds.front().order(), T(1.0));
  BasicJet<T> s = evaluate(*spec.sigma, c.xs, c.ys, one);
  if (!(value_of(s.value()) > 0.0)) throw DomainError("sigma is not positive at this point");
  return s;
}

template <class T>
BasicJet<T> eval_projective_factor(const MetricSpec& spec, const std::vector<BasicJet<T>>& seeds) {
  if (spec.family != Family::funk_ball_berwald)
    throw FamilyError("the projective factor is only defined for funk_ball_berwald");
  const auto c = split(spec, seeds);
  check_phase_point(spec, values_of(c));
  const auto one = BasicJet<T>::constant(seeds.front().dim(), seeds.front().order(), T(1.0));
  const auto fp = funk_pieces(c.xs, c.ys, one);
  return fp.root_q_plus_xy / fp.one_minus_xx;
}

template BasicJet<double> eval_F2(const MetricSpec&, const std::vector<BasicJet<double>>&, GuardMode);
template BasicJet<Dual> eval_F2(const MetricSpec&, const std::vector<BasicJet<Dual>>&, GuardMode);
template BasicJet<double> eval_sigma(const MetricSpec&, const std::vector<BasicJet<double>>&);
template BasicJet<Dual> eval_sigma(const MetricSpec&, const std::vector<BasicJet<Dual>>&);
template BasicJet<double> eval_projective_factor(const MetricSpec&, const std::vector<BasicJet<double>>&);
template BasicJet<Dual> eval_projective_factor(const MetricSpec&, const std::vector<BasicJet<Dual>>&);
template BasicJet<Quad> eval_F2(const MetricSpec&, const std::vector<BasicJet<Quad>>&, GuardMode);
template BasicJet<QuadDual> eval_F2(const MetricSpec&, const std::vector<BasicJet<QuadDual>>&, GuardMode);
template BasicJet<Quad> eval_sigma(const MetricSpec&, const std::vector<BasicJet<Quad>>&);
template BasicJet<QuadDual> eval_sigma(const MetricSpec&, const std::vector<BasicJet<QuadDual>>&);
template BasicJet<Quad> eval_projective_factor(const MetricSpec&, const std::vector<BasicJet<Quad>>&);
template BasicJet<QuadDual> eval_projective_factor(const MetricSpec&, const std::vector<BasicJet<QuadDual>>&);

}  // namespace finsler
