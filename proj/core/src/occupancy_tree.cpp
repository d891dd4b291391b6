#include "npr/occupancy_tree.hpp"

#include <algorithm>
#include <cmath>

namespace npr {

namespace {

inline double sq_dist(const float* p, const Vec3& q) {
  const double dx = static_cast<double>(p[0]) - q.x();
  const double dy = static_cast<double>(p[1]) - q.y();
  const double dz = static_cast<double>(p[2]) - q.z();
  return dx * dx + dy * dy + dz * dz;
}

// Strict total order used for the k-best set and the tie rule.
inline bool better(double d_sq, int idx, const Neighbor& worst) {
  const double w_sq = worst.distance * worst.distance;
  if (d_sq != w_sq) return d_sq < w_sq;
  return idx < worst.index;
}

}  // namespace

std::uint64_t OccupancyTree::cell_key(std::int64_t ix, std::int64_t iy, std::int64_t iz) const {
  // 21 bits per axis, offset to stay positive
  const std::uint64_t bias = 1ull << 20;
  return ((static_cast<std::uint64_t>(ix) + bias) << 42) |
         ((static_cast<std::uint64_t>(iy) + bias) << 21) |
         (static_cast<std::uint64_t>(iz) + bias);
}

OccupancyTree OccupancyTree::build(std::span<const float> positions, int leaf_size,
                                   double cell_size) {
  if (positions.empty()) raise(Errc::empty_cloud, "cannot build a tree over zero points");
  if (positions.size() % 3 != 0) raise(Errc::dimension_mismatch, "positions must be 3N floats");
  OccupancyTree t;
  t.points_.assign(positions.begin(), positions.end());
  t.leaf_size_ = std::max(1, leaf_size);
  t.cell_size_ = cell_size;
  const int n = static_cast<int>(t.size());
  t.order_.resize(n);
  for (int i = 0; i < n; ++i) t.order_[i] = i;
  t.nodes_.reserve(2 * n / t.leaf_size_ + 2);
  t.root_ = t.build_node(0, n);

  for (int i = 0; i < n; ++i) {
    const float* p = &t.points_[3 * i];
    t.occupied_.insert(t.cell_key(static_cast<std::int64_t>(std::floor(p[0] / cell_size)),
                                  static_cast<std::int64_t>(std::floor(p[1] / cell_size)),
                                  static_cast<std::int64_t>(std::floor(p[2] / cell_size))));
  }
  return t;
}

int OccupancyTree::build_node(int begin, int end) {
  Node node;
  node.begin = begin;
  node.end = end;
  if (end - begin <= leaf_size_) {
    // keep leaf contents in index order for a deterministic layout
    std::sort(order_.begin() + begin, order_.begin() + end);
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  // split the widest axis at the median point
  double lo[3] = {1e300, 1e300, 1e300};
  double hi[3] = {-1e300, -1e300, -1e300};
  for (int i = begin; i < end; ++i) {
    const float* p = &points_[3 * order_[i]];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], static_cast<double>(p[a]));
      hi[a] = std::max(hi[a], static_cast<double>(p[a]));
    }
  }
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  }
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const float va = points_[3 * a + axis];
                     const float vb = points_[3 * b + axis];
                     if (va != vb) return va < vb;
                     return a < b;
                   });
  node.axis = axis;
  node.split = points_[3 * order_[mid] + axis];

  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  const int left = build_node(begin, mid);
  const int right = build_node(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

void OccupancyTree::query_node(int node_idx, const Vec3& q, int k, double radius_sq,
                               std::vector<Neighbor>& best) const {
  const Node& node = nodes_[node_idx];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[i];
      const double d_sq = sq_dist(&points_[3 * idx], q);
      if (d_sq > radius_sq) continue;
      if (static_cast<int>(best.size()) == k && !better(d_sq, idx, best.back())) continue;
      const Neighbor cand{idx, std::sqrt(d_sq)};
      auto pos = std::upper_bound(best.begin(), best.end(), cand, [](const Neighbor& a,
                                                                     const Neighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.index < b.index;
      });
      best.insert(pos, cand);
      if (static_cast<int>(best.size()) > k) best.pop_back();
    }
    return;
  }

  const double delta = q[node.axis] - node.split;
  const int near = delta < 0.0 ? node.left : node.right;
  const int far = delta < 0.0 ? node.right : node.left;
  query_node(near, q, k, radius_sq, best);

  double bound_sq = radius_sq;
  if (static_cast<int>(best.size()) == k) {
    bound_sq = std::min(bound_sq, best.back().distance * best.back().distance);
  }
  // equal plane distance may still hide an equal-distance lower index
  if (delta * delta <= bound_sq) query_node(far, q, k, radius_sq, best);
}

std::vector<Neighbor> OccupancyTree::knn(const Vec3& query, int k, double radius) const {
  std::vector<Neighbor> best;
  knn(query, k, radius, best);
  return best;
}

void OccupancyTree::knn(const Vec3& query, int k, double radius,
                        std::vector<Neighbor>& out) const {
  out.clear();
  if (k < 1) return;
  out.reserve(k + 1);
  query_node(root_, query, k, radius * radius, out);
}

double OccupancyTree::occupancy_sqdist(const Vec3& p) const {
  const std::int64_t cx = static_cast<std::int64_t>(std::floor(p.x() / cell_size_));
  const std::int64_t cy = static_cast<std::int64_t>(std::floor(p.y() / cell_size_));
  const std::int64_t cz = static_cast<std::int64_t>(std::floor(p.z() / cell_size_));
  double best = 1e300;
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        if (!occupied_.count(cell_key(cx + dx, cy + dy, cz + dz))) continue;
        const double ccx = (cx + dx + 0.5) * cell_size_;
        const double ccy = (cy + dy + 0.5) * cell_size_;
        const double ccz = (cz + dz + 0.5) * cell_size_;
        const double d_sq = (p.x() - ccx) * (p.x() - ccx) + (p.y() - ccy) * (p.y() - ccy) +
                            (p.z() - ccz) * (p.z() - ccz);
        best = std::min(best, d_sq);
      }
    }
  }
  return best;
}

}  // namespace npr
