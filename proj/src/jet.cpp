#include "finsler/jet.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <utility>

namespace finsler {

namespace {

constexpr int kBitsPerVar = 4;

// Exponent tuples of total degree `degree` over `dim` variables, in
// descending lexicographic order.
void enumerate_degree(int dim, int degree, std::vector<std::uint8_t>& current, int var,
                      std::vector<std::uint8_t>& out) {
  if (var == dim - 1) {
    current[static_cast<std::size_t>(var)] = static_cast<std::uint8_t>(degree);
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int e = degree; e >= 0; --e) {
    current[static_cast<std::size_t>(var)] = static_cast<std::uint8_t>(e);
    enumerate_degree(dim, degree - e, current, var + 1, out);
  }
}

std::uint64_t pack(std::span<const std::uint8_t> alpha) {
  std::uint64_t key = 0;
  for (std::size_t v = 0; v < alpha.size(); ++v) key |= std::uint64_t{alpha[v]} << (kBitsPerVar * v);
  return key;
}

}  // namespace

Layout::Layout(int dim, int order) : dim_(dim), order_(order) {
  if (dim < 1 || dim > kMaxJetDim) throw DimensionError("jet dimension must be in [1, 12]");
  if (order < 0 || order > kMaxJetOrder) throw OrderError("jet order must be in [0, 10]");

  const auto d = static_cast<std::size_t>(dim);
  std::vector<std::uint8_t> current(d, 0);
  offsets_.push_back(0);
  for (int k = 0; k <= order; ++k) {
    enumerate_degree(dim, k, current, 0, exponents_);
    offsets_.push_back(exponents_.size() / d);
  }
  const std::size_t n = exponents_.size() / d;
  degree_.resize(n);
  keys_.resize(n);
  for (int k = 0; k <= order; ++k)
    for (std::size_t i = offsets_[static_cast<std::size_t>(k)]; i < offsets_[static_cast<std::size_t>(k) + 1]; ++i)
      degree_[i] = k;
  for (std::size_t i = 0; i < n; ++i) keys_[i] = pack(exponents(i));

  sorted_by_key_.resize(n);
  std::iota(sorted_by_key_.begin(), sorted_by_key_.end(), 0u);
  std::sort(sorted_by_key_.begin(), sorted_by_key_.end(),
            [&](std::uint32_t a, std::uint32_t b) { return keys_[a] < keys_[b]; });

  // Exponent fields never overflow: every sum has degree ≤ order ≤ 10 < 16.
  product_offsets_.reserve(n + 1);
  product_offsets_.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t limit = size_up_to(order - degree_[i]);
    for (std::size_t j = 0; j < limit; ++j)
      products_.push_back({static_cast<std::uint32_t>(j),
                           static_cast<std::uint32_t>(find_key(keys_[i] + keys_[j]))});
    product_offsets_.push_back(products_.size());
  }

  derivatives_.resize(d);
  if (order >= 1) {
    for (int v = 0; v < dim; ++v) {
      const std::uint64_t unit = std::uint64_t{1} << (kBitsPerVar * v);
      for (std::size_t i = 1; i < n; ++i) {
        const int e = exponents(i)[static_cast<std::size_t>(v)];
        if (e == 0) continue;
        derivatives_[static_cast<std::size_t>(v)].push_back(
            {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(find_key(keys_[i] - unit)),
             static_cast<double>(e)});
      }
    }
  }
}

std::size_t Layout::find_key(std::uint64_t key) const {
  auto it = std::lower_bound(sorted_by_key_.begin(), sorted_by_key_.end(), key,
                             [&](std::uint32_t idx, std::uint64_t k) { return keys_[idx] < k; });
  if (it == sorted_by_key_.end() || keys_[*it] != key) throw OrderError("multi-index outside jet layout");
  return *it;
}

std::size_t Layout::index_of(std::span<const int> alpha) const {
  if (alpha.size() != static_cast<std::size_t>(dim_))
    throw DimensionError("multi-index has " + std::to_string(alpha.size()) + " entries, jet has " +
                         std::to_string(dim_) + " variables");
  int total = 0;
  std::uint64_t key = 0;
  for (std::size_t v = 0; v < alpha.size(); ++v) {
    if (alpha[v] < 0) throw DimensionError("negative multi-index entry");
    total += alpha[v];
    if (total > order_)
      throw OrderError("derivative of total order beyond retained order " + std::to_string(order_));
    key |= static_cast<std::uint64_t>(alpha[v]) << (kBitsPerVar * v);
  }
  return find_key(key);
}

std::shared_ptr<const Layout> Layout::get(int dim, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const Layout>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{dim, order}];
  if (!slot) slot = std::make_shared<const Layout>(dim, order);
  return slot;
}

std::vector<int> multi_index(int dim, std::initializer_list<int> vars) {
  std::vector<int> alpha(static_cast<std::size_t>(dim), 0);
  for (int v : vars) {
    if (v < 0 || v >= dim) throw DimensionError("variable index out of range");
    ++alpha[static_cast<std::size_t>(v)];
  }
  return alpha;
}

DualLayer make_dual_layer(const Jet& value, const Jet& tangent) {
  value.check_signature(tangent);
  DualLayer d(value.dim(), value.order());
  auto out = d.coefficients();
  auto v = value.coefficients();
  auto t = tangent.coefficients();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Dual(v[i], t[i]);
  return d;
}

Jet value_part(const DualLayer& d) {
  Jet j(d.dim(), d.order());
  auto out = j.coefficients();
  auto in = d.coefficients();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i].v;
  return j;
}

Jet tangent_part(const DualLayer& d) {
  Jet j(d.dim(), d.order());
  auto out = j.coefficients();
  auto in = d.coefficients();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i].d;
  return j;
}

void check_seed_point(const PhasePoint& p, int order) {
  if (order < 1) throw OrderError("phase-point seeding needs order >= 1");
  if (p.x.size() != p.y.size() || p.x.empty())
    throw DimensionError("phase point x and y must have the same nonzero length");
  if (std::all_of(p.y.begin(), p.y.end(), [](double v) { return v == 0.0; }))
    throw DomainError("y = 0 is outside the slit tangent bundle");
}

std::vector<Jet> seed_phase_point(const PhasePoint& p, int order) { return seed_phase_point_as<double>(p, order); }

std::vector<DualLayer> seed_phase_point_dual(const PhasePoint& p, int order, int direction) {
  return seed_phase_point_dual_as<double>(p, order, direction);
}

}  // namespace finsler
