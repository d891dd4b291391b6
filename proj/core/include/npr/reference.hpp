#pragma once

#include <vector>

#include "npr/clouds.hpp"
#include "npr/nets.hpp"
#include "npr/occupancy_tree.hpp"
#include "npr/stq.hpp"

// Reference implementations kept deliberately naive and independent of
// the production code paths they check: exhaustive scans and explicit
// scalar loops only.
namespace npr::reference {

/// Exhaustive k-nearest scan under the (distance, index) tie rule.
std::vector<Neighbor> knn_bruteforce(std::span<const float> positions, const Vec3& query, int k,
                                     double radius);

/// Re-derives the survivor fixpoint of the density selection with plain
/// scans (no tree).
std::vector<int> density_select_bruteforce(const PointCloudB& cloud, const SamplingConfig& cfg);

/// Plain nested-loop MLP evaluation.
std::vector<double> mlp_naive(const MlpWeights& w, std::span<const double> x);

/// Per-head scalar-loop attention.
std::vector<double> attention_naive(const AttentionWeights& w, std::span<const double> queries,
                                    int n, std::span<const double> keys_values, int m);

/// Projection through an explicitly assembled 4x4 world-to-camera matrix
/// followed by the K matrix.
bool matrix_projection_oracle(const CameraIntrinsics& intr, const Pose& pose, const Vec3& p_world,
                              PixelCoord& pixel_out, double& depth_out);

/// Central-difference Jacobian of the pixel projection wrt the world
/// point, as a 2x3 matrix (row-major).
std::vector<double> numeric_projection_jacobian(const CameraIntrinsics& intr, const Pose& pose,
                                                const Vec3& p_world, double h = 1e-5);

/// Scalar-loop cross entropy with an explicit log-sum-exp.
double nav_ce_naive(std::span<const double> scores, std::span<const double> target,
                    std::span<const char> mask);

/// Naive inverse-distance feature aggregation (no tree; neighbors given).
std::vector<double> aggregate_naive(const Vec3& q, const FeatureCloudM& cloud,
                                    const std::vector<int>& neighbor_indices,
                                    const MlpWeights& phi1);

}  // namespace npr::reference
