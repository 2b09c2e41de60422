#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finsler/expression.hpp"
#include "finsler/jet.hpp"
#include "finsler/phase_point.hpp"

namespace finsler {

enum class Family { euclidean, riemannian, funk_ball_berwald, custom };

std::string_view family_name(Family f);
Family family_from_name(std::string_view name);  // throws ConfigError

// Where on the base the metric may be evaluated.
//   none: all of R^n.
//   ball: the open ball |x| < radius. The effective guard used for phase
//         points and trajectories is |x| <= radius - margin, which keeps
//         evaluation away from metrics that blow up at the boundary.
struct DomainGuard {
  enum class Kind { none, ball };
  Kind kind = Kind::none;
  double radius = 0.0;
  double margin = 1e-6;

  bool contains(std::span<const double> x) const;
  bool contains_hard(std::span<const double> x) const;
  // Effective radius for sampling; 1 for an unbounded domain.
  double sampling_radius() const;
  std::string describe() const;
};

enum class GuardMode { effective, hard };

// Validated description of a Finsler metric. Immutable once loaded; obtain
// instances through parse_metric / load_metric_file / the catalog helpers.
struct MetricSpec {
  std::string name;
  int dimension = 0;
  Family family = Family::euclidean;
  ExprPtr expression;               // custom: F²
  std::vector<ExprPtr> components;  // riemannian: n×n row-major; nullptr where not given
  ExprPtr sigma;                    // reference volume density σ(x)
  DomainGuard guard;

  // Component (i, j) of a riemannian metric, falling back to (j, i).
  const Expr& component(int i, int j) const;
};

// Config file format (UTF-8, '#' starts a comment):
//
//   [metric]
//   name = funk3
//   dimension = 3
//   family = funk_ball_berwald      # euclidean | riemannian | funk_ball_berwald | custom
//   expression = normy2             # custom only: F² in terms of x1.., y1..
//   sigma = 1                       # optional, expression in x only
//   guard = ball 1                  # optional: none | ball <radius>
//
//   [components]                    # riemannian only
//   g11 = 4/(1 + normx2)^2
//   g12 = 0
//   g22 = 4/(1 + normx2)^2
//
// Every unordered pair (i, j) must be given as gij or gji; when both are
// given they must agree numerically. All load-time checks (variable ranges,
// 2-homogeneity of a custom F², σ > 0, component symmetry) run here.
MetricSpec parse_metric(std::string_view config_text);
MetricSpec load_metric_file(const std::string& path);

// Canonical config text; parse_metric(print_metric(s)) reproduces s.
std::string print_metric(const MetricSpec& spec);

bool structurally_equal(const MetricSpec& a, const MetricSpec& b);

MetricSpec euclidean_metric(int dimension);
MetricSpec funk_ball_berwald_metric(int dimension = 3);
MetricSpec with_sigma(const MetricSpec& spec, ExprPtr sigma);

// Throws DomainError unless p lies in the guard region with y != 0.
void check_phase_point(const MetricSpec& spec, const PhasePoint& p, GuardMode mode = GuardMode::effective);

// F²(x, y) as a jet; seeds are the 2n coordinate jets (x then y). The value
// part is checked to be strictly positive.
template <class T>
BasicJet<T> eval_F2(const MetricSpec& spec, const std::vector<BasicJet<T>>& seeds,
                    GuardMode mode = GuardMode::effective);

// F²(x, y) at a point, without derivatives.
double eval_F2_value(const MetricSpec& spec, const PhasePoint& p, GuardMode mode = GuardMode::effective);

// σ(x) as a jet over the same 2n variables; must be positive.
template <class T>
BasicJet<T> eval_sigma(const MetricSpec& spec, const std::vector<BasicJet<T>>& seeds);

// Projective factor P of the funk_ball_berwald metric, whose spray is
// G^i = P·y^i. FamilyError for other families.
template <class T>
BasicJet<T> eval_projective_factor(const MetricSpec& spec, const std::vector<BasicJet<T>>& seeds);

}  // namespace finsler
