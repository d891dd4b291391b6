#pragma once

#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "npr/geometry.hpp"

namespace npr {

struct Neighbor {
  int index = -1;
  double distance = 0.0;
};

/// Exact balanced KD-tree over 3D positions plus a coarse occupancy
/// grid. Queries are exact; ties resolve by (distance, index) so results
/// are reproducible against an exhaustive scan.
class OccupancyTree {
 public:
  static constexpr int kDefaultLeafSize = 16;
  static constexpr double kDefaultCellSize = 0.1;  // meters

  /// positions is a flat x,y,z array; throws EmptyCloud when empty.
  static OccupancyTree build(std::span<const float> positions, int leaf_size = kDefaultLeafSize,
                             double cell_size = kDefaultCellSize);

  size_t size() const { return points_.size() / 3; }

  /// Up to k hits with distance <= radius, ascending (distance, index).
  std::vector<Neighbor> knn(const Vec3& query, int k, double radius) const;

  /// Allocation-free variant reusing the caller's buffer.
  void knn(const Vec3& query, int k, double radius, std::vector<Neighbor>& out) const;

  /// Squared distance from p to the nearest occupied coarse-grid cell
  /// center, scanning the 27-cell neighborhood.
  double occupancy_sqdist(const Vec3& p) const;

  double cell_size() const { return cell_size_; }

 private:
  struct Node {
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    int begin = 0;        // leaf range into order_
    int end = 0;
  };

  int build_node(int begin, int end);
  void query_node(int node, const Vec3& q, int k, double radius_sq,
                  std::vector<Neighbor>& best) const;

  std::vector<float> points_;   // 3N copy of the snapshot
  std::vector<int> order_;      // permutation, leaves own contiguous ranges
  std::vector<Node> nodes_;
  int root_ = -1;
  int leaf_size_ = kDefaultLeafSize;

  double cell_size_ = kDefaultCellSize;
  std::unordered_set<std::uint64_t> occupied_;

  std::uint64_t cell_key(std::int64_t ix, std::int64_t iy, std::int64_t iz) const;
};

}  // namespace npr
