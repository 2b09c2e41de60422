#include "finsler/tensors.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

namespace finsler {

double frobenius(const Matrix& m) {
  double s = 0.0;
  for (double v : m.a) s += v * v;
  return std::sqrt(s);
}

double norm(const Vector& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

double equilibrated_condition(const Matrix& g) {
  const int n = g.n;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    if (!(g(i, i) > 0.0)) return std::numeric_limits<double>::infinity();
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(i, j) / std::sqrt(g(i, i) * g(j, j));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (!(s(n - 1) > 0.0)) return std::numeric_limits<double>::infinity();
  return s(0) / s(n - 1);
}

namespace {

template <class T>
BasicJet<T> lower(const BasicJet<T>& j, int order) {
  return j.truncated(order);
}

template <class T>
Mat<BasicJet<T>> gauss_jordan(Mat<BasicJet<T>> a, BasicJet<T>& det) {
  const int n = a.n;
  const int dim = a(0, 0).dim();
  const int order = a(0, 0).order();
  Mat<BasicJet<T>> inv(n, BasicJet<T>(dim, order));
  for (int i = 0; i < n; ++i) inv(i, i) = BasicJet<T>::constant(dim, order, T(1.0));
  det = BasicJet<T>::constant(dim, order, T(1.0));

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(value_of(a(col, col).value()));
    for (int r = col + 1; r < n; ++r) {
      const double v = std::abs(value_of(a(r, col).value()));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) throw SingularMetricError("metric tensor is singular");
    if (pivot != col) {
      for (int k = 0; k < n; ++k) {
        std::swap(a(pivot, k), a(col, k));
        std::swap(inv(pivot, k), inv(col, k));
      }
      det = -det;
    }
    const BasicJet<T> piv = a(col, col);
    det = det * piv;
    const BasicJet<T> r = reciprocal(piv);
    for (int k = 0; k < n; ++k) {
      a(col, k) = a(col, k) * r;
      inv(col, k) = inv(col, k) * r;
    }
    for (int row = 0; row < n; ++row) {
      if (row == col) continue;
      const BasicJet<T> f = a(row, col);
      for (int k = 0; k < n; ++k) {
        a(row, k) -= f * a(col, k);
        inv(row, k) -= f * inv(col, k);
      }
    }
  }
  return inv;
}

}  // namespace

template <class T>
Tower<T>::Tower(const MetricSpec& spec, std::vector<J> seeds, GuardMode mode)
    : spec_(&spec), n_(spec.dimension), mode_(mode), seeds_(std::move(seeds)) {
  if (static_cast<int>(seeds_.size()) != 2 * n_)
    throw DimensionError("expected " + std::to_string(2 * n_) + " seed jets, got " +
                         std::to_string(seeds_.size()));
  order_ = seeds_.front().order();
  if (order_ < 2) throw OrderError("the curvature pipeline needs jet order >= 2");
}

template <class T>
const BasicJet<T>& Tower<T>::F2() const {
  if (!F2_) F2_ = eval_F2(*spec_, seeds_, mode_);
  return *F2_;
}

template <class T>
const BasicJet<T>& Tower<T>::F() const {
  if (!F_) F_ = sqrt(F2());
  return *F_;
}

template <class T>
const Mat<BasicJet<T>>& Tower<T>::g() const {
  if (!g_) {
    if (!dyF2_) {
      dyF2_.emplace();
      for (int i = 0; i < n_; ++i) dyF2_->push_back(dy(F2(), i));
    }
    JetMat m(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) {
        m(i, j) = dy((*dyF2_)[static_cast<std::size_t>(i)], j) * T(0.5);
        m(j, i) = m(i, j);
      }
    g_ = std::move(m);
  }
  return *g_;
}

template <class T>
const Mat<BasicJet<T>>& Tower<T>::g_inv() const {
  if (!g_inv_) {
    const JetMat& m = g();
    Matrix v(n_);
    for (std::size_t i = 0; i < m.a.size(); ++i) v.a[i] = value_of(m.a[i].value());
    condition_ = equilibrated_condition(v);
    if (mode_ == GuardMode::effective && !(condition_ <= kMaxMetricCondition))
      throw SingularMetricError("metric tensor is numerically singular (condition " +
                                std::to_string(condition_) + ")");
    J det;
    g_inv_ = gauss_jordan(m, det);
    det_g_ = std::move(det);
  }
  return *g_inv_;
}

template <class T>
double Tower<T>::condition() const {
  g_inv();
  return condition_;
}

template <class T>
const BasicJet<T>& Tower<T>::det_g() const {
  g_inv();
  return *det_g_;
}

template <class T>
const std::vector<BasicJet<T>>& Tower<T>::spray() const {
  if (!spray_) {
    const JetMat& inv = g_inv();
    const int m = order_ - 2;
    JetVec w;
    for (int j = 0; j < n_; ++j) {
      J s = lower(dx(F2(), j), m) * T(-1.0);
      for (int k = 0; k < n_; ++k)
        s += dx((*dyF2_)[static_cast<std::size_t>(j)], k) * lower(seeds_[static_cast<std::size_t>(n_ + k)], m);
      w.push_back(std::move(s));
    }
    JetVec G;
    for (int i = 0; i < n_; ++i) {
      J s(2 * n_, m);
      for (int j = 0; j < n_; ++j) s += inv(i, j) * w[static_cast<std::size_t>(j)];
      G.push_back(s * T(0.25));
    }
    spray_ = std::move(G);
  }
  return *spray_;
}

template <class T>
BasicJet<T> Tower<T>::spray_derivative(const J& f) const {
  const int m = f.order() - 1;
  const JetVec& G = spray();
  J r(2 * n_, m);
  for (int k = 0; k < n_; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    r += lower(seeds_[static_cast<std::size_t>(n_ + k)], m) * dx(f, k);
    r -= lower(G[uk], m) * dy(f, k) * T(2.0);
  }
  return r;
}

template <class T>
BasicJet<T> Tower<T>::horizontal(const J& f, int i) const {
  const int m = f.order() - 1;
  const JetMat& nn = N();
  J r = dx(f, i);
  for (int j = 0; j < n_; ++j) r -= lower(nn(j, i), m) * dy(f, j);
  return r;
}

template <class T>
Mat<BasicJet<T>> Tower<T>::nabla2(const JetMat& t) const {
  const JetMat& nn = N();
  const int m = t(0, 0).order() - 1;
  JetMat low_n(n_), low_t(n_);
  for (std::size_t i = 0; i < nn.a.size(); ++i) {
    low_n.a[i] = lower(nn.a[i], m);
    low_t.a[i] = lower(t.a[i], m);
  }
  JetMat r(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      J s = spray_derivative(t(i, j));
      for (int k = 0; k < n_; ++k) {
        s -= low_t(k, j) * low_n(k, i);
        s -= low_t(i, k) * low_n(k, j);
      }
      r(i, j) = std::move(s);
    }
  return r;
}

template <class T>
const Mat<BasicJet<T>>& Tower<T>::N() const {
  if (!N_) {
    const JetVec& G = spray();
    JetMat m(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = dy(G[static_cast<std::size_t>(i)], j);
    N_ = std::move(m);
  }
  return *N_;
}

template <class T>
const Mat<BasicJet<T>>& Tower<T>::jacobi() const {
  if (!jacobi_) {
    const JetVec& G = spray();
    const JetMat& nn = N();
    const int m = order_ - 4;
    if (m < 0) throw OrderError("the Jacobi endomorphism needs jet order >= 4");
    JetMat r(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        J s = lower(dx(G[static_cast<std::size_t>(i)], j), m) * T(2.0);
        s -= spray_derivative(nn(i, j));
        for (int k = 0; k < n_; ++k) s -= lower(nn(i, k), m) * lower(nn(k, j), m);
        r(i, j) = std::move(s);
      }
    jacobi_ = std::move(r);
  }
  return *jacobi_;
}

template <class T>
const std::vector<BasicJet<T>>& Tower<T>::curvature() const {
  if (!curvature_) {
    const JetMat& nn = N();
    if (order_ < 4) throw OrderError("the curvature R^i_jk needs jet order >= 4");
    std::vector<J> r(static_cast<std::size_t>(n_ * n_ * n_));
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
          r[static_cast<std::size_t>((i * n_ + j) * n_ + k)] = horizontal(nn(i, j), k) - horizontal(nn(i, k), j);
    curvature_ = std::move(r);
  }
  return *curvature_;
}

template <class T>
const Mat<BasicJet<T>>& Tower<T>::E_berwald() const {
  if (!E_b_) {
    if (order_ < 5) throw OrderError("the mean Berwald curvature needs jet order >= 5");
    const JetMat& nn = N();
    J trace = nn(0, 0);
    for (int k = 1; k < n_; ++k) trace += nn(k, k);
    JetMat e(n_);
    for (int i = 0; i < n_; ++i) {
      const J d = dy(trace, i);
      for (int j = i; j < n_; ++j) {
        e(i, j) = dy(d, j) * T(0.5);
        e(j, i) = e(i, j);
      }
    }
    E_b_ = std::move(e);
  }
  return *E_b_;
}

template <class T>
const BasicJet<T>& Tower<T>::tau() const {
  if (!tau_) {
    const J& det = det_g();
    const J sigma = lower(eval_sigma(*spec_, seeds_), det.order());
    tau_ = log(det / sigma) * T(0.5);
  }
  return *tau_;
}

template <class T>
const BasicJet<T>& Tower<T>::S() const {
  if (!S_) S_ = spray_derivative(tau());
  return *S_;
}

template <class T>
const std::vector<BasicJet<T>>& Tower<T>::S_y() const {
  if (!S_y_) {
    JetVec v;
    for (int i = 0; i < n_; ++i) v.push_back(dy(S(), i));
    S_y_ = std::move(v);
  }
  return *S_y_;
}

template <class T>
const Mat<BasicJet<T>>& Tower<T>::E_s() const {
  if (!E_s_) {
    const JetVec& sy = S_y();
    JetMat e(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = i; j < n_; ++j) {
        e(i, j) = dy(sy[static_cast<std::size_t>(i)], j) * T(0.5);
        e(j, i) = e(i, j);
      }
    E_s_ = std::move(e);
  }
  return *E_s_;
}

template <class T>
const std::vector<BasicJet<T>>& Tower<T>::chi() const {
  if (!chi_) {
    const JetVec& sy = S_y();
    const int m = order_ - 5;
    if (m < 0) throw OrderError("the χ-curvature needs jet order >= 5");
    JetVec c;
    for (int i = 0; i < n_; ++i) {
      J v = spray_derivative(sy[static_cast<std::size_t>(i)]) - lower(dx(S(), i), m);
      c.push_back(v * T(0.5));
    }
    chi_ = std::move(c);
  }
  return *chi_;
}

template <class T>
const Mat<BasicJet<T>>& Tower<T>::hamel() const {
  if (!hamel_) {
    const JetVec& sy = S_y();
    if (order_ < 5) throw OrderError("the Hamel residual needs jet order >= 5");
    JetMat h(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        h(i, j) = horizontal(sy[static_cast<std::size_t>(j)], i) - horizontal(sy[static_cast<std::size_t>(i)], j);
    hamel_ = std::move(h);
  }
  return *hamel_;
}

template <class T>
const std::vector<BasicJet<T>>& Tower<T>::I() const {
  if (!I_) {
    JetVec v;
    for (int k = 0; k < n_; ++k) v.push_back(dy(tau(), k));
    I_ = std::move(v);
  }
  return *I_;
}

template <class T>
const std::vector<BasicJet<T>>& Tower<T>::J_landsberg() const {
  if (!J_) {
    const JetVec& ii = I();
    const JetMat& nn = N();
    const int m = order_ - 4;
    if (m < 0) throw OrderError("the mean Landsberg curvature needs jet order >= 4");
    JetVec v;
    for (int i = 0; i < n_; ++i) {
      J s = spray_derivative(ii[static_cast<std::size_t>(i)]);
      for (int k = 0; k < n_; ++k) s -= lower(ii[static_cast<std::size_t>(k)], m) * lower(nn(k, i), m);
      v.push_back(std::move(s));
    }
    J_ = std::move(v);
  }
  return *J_;
}

template <class T>
const Mat<BasicJet<T>>& Tower<T>::I_hcov() const {
  if (!I_hcov_) {
    const JetVec& ii = I();
    const JetMat& nn = N();
    const int m = order_ - 4;
    if (m < 0) throw OrderError("the covariant derivative of I needs jet order >= 4");
    JetMat r(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        J s = horizontal(ii[static_cast<std::size_t>(j)], i);
        for (int l = 0; l < n_; ++l) s -= lower(ii[static_cast<std::size_t>(l)], m) * dy(nn(l, i), j);
        r(i, j) = std::move(s);
      }
    I_hcov_ = std::move(r);
  }
  return *I_hcov_;
}

template <class T>
const Mat<BasicJet<T>>& Tower<T>::J_vder() const {
  if (!J_vder_) {
    const JetVec& jj = J_landsberg();
    if (order_ < 5) throw OrderError("the vertical derivative of J needs jet order >= 5");
    JetMat r(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) r(i, j) = dy(jj[static_cast<std::size_t>(i)], j);
    J_vder_ = std::move(r);
  }
  return *J_vder_;
}

template <class T>
const Mat<BasicJet<T>>& Tower<T>::E_cl() const {
  if (!E_cl_) {
    const JetMat& ih = I_hcov();
    const JetMat& jv = J_vder();
    const int m = order_ - 5;
    JetMat e(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) e(i, j) = (lower(ih(i, j), m) + jv(i, j)) * T(0.5);
    E_cl_ = std::move(e);
  }
  return *E_cl_;
}

template class Tower<double>;
template class Tower<Quad>;
template class Tower<QuadDual>;

PipelineTower make_tower(const MetricSpec& spec, const PhasePoint& p, int order, GuardMode mode) {
  if (static_cast<int>(p.x.size()) != spec.dimension || static_cast<int>(p.y.size()) != spec.dimension)
    throw DimensionError("phase point dimension does not match the metric (" + std::to_string(spec.dimension) +
                         ")");
  check_phase_point(spec, p, mode);
  return PipelineTower(spec, seed_phase_point_as<Quad>(p, order), mode);
}

namespace {

Vector F_y_of(const PipelineTower& t) {
  Vector v;
  for (int i = 0; i < t.n(); ++i) v.push_back(value_of(t.dy(t.F(), i).value()));
  return v;
}

Matrix angular(const Matrix& g, const Vector& fy) {
  Matrix h = g;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) h(i, j) -= fy[static_cast<std::size_t>(i)] * fy[static_cast<std::size_t>(j)];
  return h;
}

std::vector<double> berwald_values(const PipelineTower& t) {
  const int n = t.n();
  if (t.order() < 5) throw OrderError("the Berwald curvature needs jet order >= 5");
  const auto& G = t.spray();
  std::vector<double> b(static_cast<std::size_t>(n * n * n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          b[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)] =
              value_of(G[static_cast<std::size_t>(i)].partial({n + j, n + k, n + l}));
  return b;
}

}  // namespace

FlagData flag_from(const Matrix& jacobi, const Matrix& g, const Vector& y, double F) {
  const int n = g.n;
  FlagData f;
  double trace = 0.0;
  for (int i = 0; i < n; ++i) trace += jacobi(i, i);
  const double F2 = F * F;
  f.kappa = trace / ((n - 1) * F2);
  Vector y_low(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) y_low[static_cast<std::size_t>(j)] += g(j, l) * y[static_cast<std::size_t>(l)];
  Matrix d(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      d(i, j) = jacobi(i, j) -
                f.kappa * ((i == j ? F2 : 0.0) - y[static_cast<std::size_t>(i)] * y_low[static_cast<std::size_t>(j)]);
  f.residual = frobenius(d) / std::max(1.0, frobenius(jacobi));
  f.is_scalar = f.residual < 1e-8;
  return f;
}

CurvaturePacket compute_packet(const MetricSpec& spec, const PhasePoint& p, int order) {
  if (order < 5) throw OrderError("a full curvature packet needs jet order >= 5");
  const PipelineTower t = make_tower(spec, p, order);
  const int n = t.n();
  CurvaturePacket c;
  c.point = p;
  c.n = n;
  c.order = order;
  c.F = value_of(t.F().value());
  c.F_y = F_y_of(t);
  c.g = to_double(values(t.g()));
  c.g_inv = to_double(values(t.g_inv()));
  c.condition = t.condition();
  c.h = angular(c.g, c.F_y);
  c.G = to_double(values(t.spray()));
  c.N = to_double(values(t.N()));
  c.jacobi = to_double(values(t.jacobi()));
  c.R = to_double(values(t.curvature()));
  c.B = berwald_values(t);
  c.E = to_double(values(t.E_berwald()));
  c.E_s = to_double(values(t.E_s()));
  c.E_cl = to_double(values(t.E_cl()));
  c.tau = value_of(t.tau().value());
  c.S = value_of(t.S().value());
  c.S_y = to_double(values(t.S_y()));
  c.chi = to_double(values(t.chi()));
  c.hamel = to_double(values(t.hamel()));
  {
    const auto& sy = t.S_y();
    const auto& N = t.N();
    const auto term = [&](int i, int j) {
      double v = std::abs(value_of(t.dx(sy[static_cast<std::size_t>(j)], i).value()));
      for (int k = 0; k < n; ++k)
        v += std::abs(value_of(N(k, i).value()) * value_of(t.dy(sy[static_cast<std::size_t>(j)], k).value()));
      return v;
    };
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c.hamel_scale = std::max(c.hamel_scale, term(i, j) + term(j, i));
  }
  c.I = to_double(values(t.I()));
  c.J = to_double(values(t.J_landsberg()));
  c.I_hcov = to_double(values(t.I_hcov()));
  c.J_vder = to_double(values(t.J_vder()));
  c.alpha_horizontal = c.J;
  for (double v : c.I) c.alpha_vertical.push_back(-v);
  if (order >= 6) c.nabla_E = to_double(values(t.nabla2(t.E_berwald())));
  c.nabla_g = to_double(values(t.nabla2(t.g())));
  c.flag = flag_from(c.jacobi, c.g, p.y, c.F);
  return c;
}

MetricTensorResult metric_tensor(const MetricSpec& spec, const PhasePoint& p) {
  const PipelineTower t = make_tower(spec, p, 2);
  MetricTensorResult r;
  r.F = value_of(t.F().value());
  r.g = to_double(values(t.g()));
  r.g_inv = to_double(values(t.g_inv()));
  r.h = angular(r.g, F_y_of(t));
  return r;
}

Vector spray(const MetricSpec& spec, const PhasePoint& p, GuardMode mode) {
  return to_double(values(make_tower(spec, p, 2, mode).spray()));
}

ConnectionResult connection(const MetricSpec& spec, const PhasePoint& p) {
  const PipelineTower t = make_tower(spec, p, 4);
  return {to_double(values(t.N())), to_double(values(t.jacobi())), to_double(values(t.curvature()))};
}

FlagData flag_curvature(const MetricSpec& spec, const PhasePoint& p) {
  const PipelineTower t = make_tower(spec, p, 4);
  return flag_from(to_double(values(t.jacobi())), to_double(values(t.g())), p.y, value_of(t.F().value()));
}

BerwaldResult berwald(const MetricSpec& spec, const PhasePoint& p) {
  const PipelineTower t = make_tower(spec, p, 5);
  return {berwald_values(t), to_double(values(t.E_berwald()))};
}

SFunctionResult s_function(const MetricSpec& spec, const PhasePoint& p) {
  const PipelineTower t = make_tower(spec, p, 5);
  return {value_of(t.tau().value()), value_of(t.S().value()), to_double(values(t.E_s()))};
}

Vector chi(const MetricSpec& spec, const PhasePoint& p) { return to_double(values(make_tower(spec, p, 5).chi())); }

CartanLandsbergResult cartan_landsberg(const MetricSpec& spec, const PhasePoint& p) {
  const PipelineTower t = make_tower(spec, p, 5);
  CartanLandsbergResult r;
  r.I = to_double(values(t.I()));
  r.J = to_double(values(t.J_landsberg()));
  r.I_hcov = to_double(values(t.I_hcov()));
  r.J_vder = to_double(values(t.J_vder()));
  r.E = to_double(values(t.E_cl()));
  r.alpha_horizontal = r.J;
  for (double v : r.I) r.alpha_vertical.push_back(-v);
  return r;
}

TensorFieldEvaluator metric_tensor_field() {
  return [](const PipelineTower& t) { return t.g(); };
}

TensorFieldEvaluator mean_berwald_field() {
  return [](const PipelineTower& t) { return t.E_berwald(); };
}

Matrix nabla_covariant2(const MetricSpec& spec, const PhasePoint& p, const TensorFieldEvaluator& field,
                        int order) {
  const PipelineTower t = make_tower(spec, p, order);
  const Mat<QuadJet> f = field(t);
  if (f.n != t.n()) throw DimensionError("tensor field has the wrong size");
  if (f(0, 0).order() < 1) throw OrderError("∇ needs the tensor field at jet order >= 1");
  return to_double(values(t.nabla2(f)));
}

Matrix hamel_check(const MetricSpec& spec, const PhasePoint& p) { return to_double(values(make_tower(spec, p, 5).hamel())); }

}  // namespace finsler
