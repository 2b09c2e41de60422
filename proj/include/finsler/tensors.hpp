#pragma once

// Curvature pipeline at one phase point.
//
// Every geometric object is computed as a jet: starting from an order-K jet
// of F² in the 2n phase variables, each derivative consumes one order. The
// stages and the jet order they carry are
//
//   F², F                          K
//   g_ij, g^ij, det g, G^i, τ      K-2
//   N^i_j, S, I_k                  K-3
//   Jacobi R^i_j, R^i_jk, J_i      K-4
//   E_ij (three routes), χ_i, H_ij K-5
//   ∇E_ij                          K-6
//
// so K = 6 yields everything; K = 5 everything but ∇E. A stage requested
// beyond the available order raises OrderError.

#include <functional>
#include <optional>
#include <vector>

#include "finsler/jet.hpp"
#include "finsler/metric.hpp"

namespace finsler {

// Small dense square matrix, row-major.
template <class T>
struct Mat {
  int n = 0;
  std::vector<T> a;

  Mat() = default;
  explicit Mat(int size) : n(size), a(static_cast<std::size_t>(size) * size, T{}) {}
  Mat(int size, T fill) : n(size), a(static_cast<std::size_t>(size) * size, fill) {}

  T& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  const T& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

using Matrix = Mat<double>;
using Vector = std::vector<double>;

double frobenius(const Matrix& m);
double norm(const Vector& v);

// Condition-number ceiling for g_ij; beyond it SingularMetricError (not
// enforced on towers built with GuardMode::hard).
inline constexpr double kMaxMetricCondition = 1e10;

// Condition number used to monitor g_ij: that of the diagonally equilibrated
// matrix D^{-1/2} g D^{-1/2}, D = diag(g).
double equilibrated_condition(const Matrix& g);

template <class T>
class Tower {
 public:
  using J = BasicJet<T>;
  using JetVec = std::vector<J>;
  using JetMat = Mat<J>;

  Tower(const MetricSpec& spec, std::vector<J> seeds, GuardMode mode = GuardMode::effective);

  int n() const { return n_; }
  int order() const { return order_; }
  const MetricSpec& spec() const { return *spec_; }
  const JetVec& seeds() const { return seeds_; }

  const J& F2() const;
  const J& F() const;
  const JetMat& g() const;
  const JetMat& g_inv() const;
  const J& det_g() const;
  const JetVec& spray() const;    // G^i
  const JetMat& N() const;        // N^i_j = ∂G^i/∂y^j
  const JetMat& jacobi() const;   // R^i_j
  const std::vector<J>& curvature() const;  // R^i_jk at [(i*n + j)*n + k]
  const JetMat& E_berwald() const;
  const J& tau() const;
  const J& S() const;
  const JetVec& S_y() const;      // ∂S/∂y^i
  const JetMat& E_s() const;
  const JetVec& chi() const;
  const JetMat& hamel() const;    // δ(∂S/∂y^j)/δx^i − δ(∂S/∂y^i)/δx^j
  const JetVec& I() const;        // mean Cartan torsion ∂τ/∂y^k
  const JetVec& J_landsberg() const;  // mean Landsberg curvature ∇I_i
  const JetMat& I_hcov() const;   // (i, j) -> I_{j;i}
  const JetMat& J_vder() const;   // (i, j) -> J_{i·j}
  const JetMat& E_cl() const;

  // ∂/∂x^k, ∂/∂y^k.
  J dx(const J& f, int k) const { return f.derivative(k); }
  J dy(const J& f, int k) const { return f.derivative(n_ + k); }
  // Spray derivative G(f) = y^k ∂f/∂x^k − 2G^k ∂f/∂y^k.
  J spray_derivative(const J& f) const;
  // δf/δx^i = ∂f/∂x^i − N^j_i ∂f/∂y^j.
  J horizontal(const J& f, int i) const;
  // (∇T)_ij = G(T_ij) − T_kj N^k_i − T_ik N^k_j.
  JetMat nabla2(const JetMat& t) const;

  double condition() const;

 private:
  const MetricSpec* spec_;
  int n_;
  int order_;
  GuardMode mode_;
  JetVec seeds_;

  mutable std::optional<J> F2_, F_, det_g_, tau_, S_;
  mutable std::optional<JetVec> dyF2_, spray_, S_y_, chi_, I_, J_;
  mutable std::optional<JetMat> g_, g_inv_, N_, jacobi_, E_b_, E_s_, hamel_, I_hcov_, J_vder_, E_cl_;
  mutable std::optional<std::vector<J>> curvature_;
  mutable double condition_ = 0.0;
};

template <class T>
Mat<T> values(const Mat<BasicJet<T>>& m) {
  Mat<T> r(m.n);
  for (std::size_t i = 0; i < m.a.size(); ++i) r.a[i] = m.a[i].value();
  return r;
}

template <class T>
std::vector<T> values(const std::vector<BasicJet<T>>& v) {
  std::vector<T> r;
  r.reserve(v.size());
  for (const auto& j : v) r.push_back(j.value());
  return r;
}

template <class T>
Matrix to_double(const Mat<T>& m) {
  Matrix r(m.n);
  for (std::size_t i = 0; i < m.a.size(); ++i) r.a[i] = value_of(m.a[i]);
  return r;
}

template <class T>
Vector to_double(const std::vector<T>& v) {
  Vector r;
  r.reserve(v.size());
  for (const auto& e : v) r.push_back(value_of(e));
  return r;
}

// The tower every public operation evaluates on.
using PipelineTower = Tower<Quad>;

// Seeds `spec` at p with the requested jet order, after checking p against
// the metric's domain guard.
PipelineTower make_tower(const MetricSpec& spec, const PhasePoint& p, int order,
                         GuardMode mode = GuardMode::effective);

struct FlagData {
  bool is_scalar = false;
  double kappa = 0.0;
  double residual = 0.0;
};

// Everything computed at one phase point.
struct CurvaturePacket {
  PhasePoint point;
  int n = 0;
  int order = 0;
  double F = 0.0;
  Vector F_y;
  Matrix g, g_inv, h;
  double condition = 0.0;
  Vector G;
  Matrix N;
  Matrix jacobi;
  std::vector<double> R;  // R^i_jk at [(i*n + j)*n + k]
  std::vector<double> B;  // B^i_jkl at [((i*n + j)*n + k)*n + l]
  Matrix E;               // mean Berwald curvature via ∂³G
  Matrix E_s;             // via ∂²S
  Matrix E_cl;            // via mean Cartan / Landsberg
  double tau = 0.0;
  double S = 0.0;
  Vector S_y;
  Vector chi;
  Matrix hamel;
  // Largest |∂S_j/∂x^i| + Σ_k|N^k_i ∂S_j/∂y^k| + (i ↔ j): size of the terms that cancel in H_ij.
  double hamel_scale = 0.0;
  Vector I, J;
  Matrix I_hcov, J_vder;
  Vector alpha_horizontal;  // J_k
  Vector alpha_vertical;    // −I_k
  std::optional<Matrix> nabla_E;  // present when order >= 6
  Matrix nabla_g;
  FlagData flag;
};

CurvaturePacket compute_packet(const MetricSpec& spec, const PhasePoint& p, int order = 6);

struct MetricTensorResult {
  Matrix g, g_inv, h;
  double F = 0.0;
};
MetricTensorResult metric_tensor(const MetricSpec& spec, const PhasePoint& p);

Vector spray(const MetricSpec& spec, const PhasePoint& p, GuardMode mode = GuardMode::effective);

struct ConnectionResult {
  Matrix N;
  Matrix jacobi;
  std::vector<double> R;
};
ConnectionResult connection(const MetricSpec& spec, const PhasePoint& p);

FlagData flag_curvature(const MetricSpec& spec, const PhasePoint& p);
FlagData flag_from(const Matrix& jacobi, const Matrix& g, const Vector& y, double F);

struct BerwaldResult {
  std::vector<double> B;
  Matrix E;
};
BerwaldResult berwald(const MetricSpec& spec, const PhasePoint& p);

struct SFunctionResult {
  double tau = 0.0;
  double S = 0.0;
  Matrix E;
};
SFunctionResult s_function(const MetricSpec& spec, const PhasePoint& p);

Vector chi(const MetricSpec& spec, const PhasePoint& p);

struct CartanLandsbergResult {
  Vector I, J;
  Matrix I_hcov, J_vder;
  Matrix E;
  Vector alpha_horizontal, alpha_vertical;
};
CartanLandsbergResult cartan_landsberg(const MetricSpec& spec, const PhasePoint& p);

// A (0,2) tensor field given as jets on a tower; must carry order >= 1.
using TensorFieldEvaluator = std::function<Mat<QuadJet>(const PipelineTower&)>;
TensorFieldEvaluator metric_tensor_field();
TensorFieldEvaluator mean_berwald_field();

// (∇T)_ij at p, with T evaluated on a tower of base order `order`.
Matrix nabla_covariant2(const MetricSpec& spec, const PhasePoint& p, const TensorFieldEvaluator& field,
                        int order = 6);

Matrix hamel_check(const MetricSpec& spec, const PhasePoint& p);

}  // namespace finsler
