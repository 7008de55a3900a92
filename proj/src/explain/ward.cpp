#include <cmath>
#include <limits>

#include "odrop/error.hpp"
#include "odrop/explain.hpp"
#include "odrop/simd/kernels.hpp"

namespace odrop::explain {
namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Condensed upper-triangular storage of the slot distances.
class DistanceTable {
 public:
  explicit DistanceTable(std::size_t n) : n_(n), d_(n * (n - 1) / 2) {}
  double& at(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return d_[i * n_ - i * (i + 1) / 2 + (j - i - 1)];
  }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

}  // namespace

Dendrogram ward_cluster(const Matrix& points) {
  const std::size_t n = points.rows();
  if (n < 2) throw InvalidArgument("clustering needs at least two rows");
  for (double v : points.values()) {
    if (!std::isfinite(v)) throw InvalidArgument("clustering input has a non-finite entry");
  }
  const auto& kernels = simd::active();
  DistanceTable dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist.at(i, j) = kernels.squared_distance(points.row(i).data(), points.row(j).data(), points.cols());
    }
  }

  std::vector<bool> active(n, true);
  std::vector<std::size_t> size(n, 1), id(n);
  for (std::size_t i = 0; i < n; ++i) id[i] = i;
  // Nearest active slot with a larger index, ties to the smaller index.
  std::vector<std::size_t> nearest(n, kNone);
  std::vector<double> nearest_d(n, std::numeric_limits<double>::infinity());
  auto refresh = [&](std::size_t i) {
    nearest[i] = kNone;
    nearest_d[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j) {
      if (active[j] && dist.at(i, j) < nearest_d[i]) {
        nearest_d[i] = dist.at(i, j);
        nearest[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  Dendrogram out;
  out.n_leaves = n;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t i = kNone;
    for (std::size_t k = 0; k < n; ++k) {
      if (active[k] && nearest[k] != kNone && (i == kNone || nearest_d[k] < nearest_d[i])) i = k;
    }
    const std::size_t j = nearest[i];
    const double d_ij = nearest_d[i];
    const double ni = static_cast<double>(size[i]), nj = static_cast<double>(size[j]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == i || k == j) continue;
      const double nk = static_cast<double>(size[k]);
      const double updated = ((ni + nk) * dist.at(k, i) + (nj + nk) * dist.at(k, j) - nk * d_ij) / (ni + nj + nk);
      // Rounding can push a tiny value below zero.
      dist.at(k, i) = std::max(0.0, updated);
    }
    out.merges.push_back({std::min(id[i], id[j]), std::max(id[i], id[j]), std::sqrt(d_ij), size[i] + size[j]});
    active[j] = false;
    size[i] += size[j];
    id[i] = n + step;

    for (std::size_t k = 0; k < i; ++k) {
      if (!active[k]) continue;
      if (nearest[k] == i || nearest[k] == j) {
        refresh(k);
      } else if (dist.at(k, i) < nearest_d[k] || (dist.at(k, i) == nearest_d[k] && i < nearest[k])) {
        nearest_d[k] = dist.at(k, i);
        nearest[k] = i;
      }
    }
    refresh(i);
    for (std::size_t k = i + 1; k < n; ++k) {
      if (active[k] && nearest[k] == j) refresh(k);
    }
  }

  // Leaf order: depth-first from the root, the child with the smaller id
  // first.
  std::vector<std::size_t> stack{2 * n - 2};
  while (!stack.empty()) {
    const std::size_t c = stack.back();
    stack.pop_back();
    if (c < n) {
      out.leaf_order.push_back(c);
      continue;
    }
    const Merge& m = out.merges[c - n];
    stack.push_back(m.b);
    stack.push_back(m.a);
  }
  return out;
}

nlohmann::json Dendrogram::to_json() const {
  nlohmann::json doc;
  doc["n_leaves"] = n_leaves;
  auto& list = doc["merges"] = nlohmann::json::array();
  for (const auto& m : merges) list.push_back({m.a, m.b, m.distance, m.size});
  doc["leaf_order"] = leaf_order;
  return doc;
}

}  // namespace odrop::explain
