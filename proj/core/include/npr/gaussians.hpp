#pragma once

#include <span>
#include <utility>
#include <vector>

#include "npr/geometry.hpp"
#include "npr/nets.hpp"
#include "npr/stq.hpp"

namespace npr {

/// A set of 3D Gaussian primitives sharing geometry (rotation, scale,
/// opacity, position) with a per-primitive payload: colors for the image
/// set, descriptors for the feature set.
struct GaussianSet {
  std::vector<float> positions;   // 3M
  std::vector<double> rotations;  // 4M, (w,x,y,z) unit quaternions
  std::vector<double> scales;     // 3M, meters
  std::vector<double> opacities;  // M, in (0,1]
  int payload_dim = 0;
  std::vector<float> payload;     // M x payload_dim

  size_t size() const { return opacities.size(); }
};

/// Regresses the property heads per selected point and assembles the
/// image set (color payload) and feature set (descriptor payload). The
/// geometry arrays of the two sets are bit-identical.
std::pair<GaussianSet, GaussianSet> make_gaussians(const SelectedPoints& sel,
                                                   std::span<const double> descriptors,
                                                   const GaussianHeads& heads);

/// Sigma = R * diag(s^2) * R^T (symmetric positive definite).
Mat3 covariance3d(const Quat& q, const Vec3& scales);

/// EWA projection to screen space: Sigma' = J W Sigma W^T J^T with W the
/// camera-from-world rotation and J the pinhole Jacobian at the mean.
/// `dilation` (px^2) is added to the diagonal; pass 0 to disable.
Eigen::Matrix2d project_covariance(const Mat3& sigma, const Pose& pose,
                                   const CameraIntrinsics& intr, const Vec3& mean,
                                   double dilation = 0.3);

}  // namespace npr
