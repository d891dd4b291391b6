#pragma once

#include <optional>
#include <string>
#include <vector>

#include "npr/geometry.hpp"
#include "npr/image.hpp"

namespace npr {

constexpr int kPanoramaViews = 12;
constexpr double kPanoramaStepRad = 30.0 * M_PI / 180.0;
constexpr double kDefaultFarPlane = 10.0;  // meters, matches the ray extent

/// One panoramic observation step: 12 posed RGB-D views, 30 degrees of
/// yaw apart, plus optional per-view feature grids.
struct StepObservation {
  std::vector<Image> rgb;    // 12 x (H x W x 3), values in [0,1]
  std::vector<Image> depth;  // 12 x (H x W x 1), meters, z-depth
  std::vector<Pose> poses;   // 12, one per view
  std::optional<std::vector<Image>> features;  // 12 x (H' x W' x D')

  void validate() const;
};

/// Appearance store: world positions P and colors C, append-only.
struct PointCloudB {
  std::vector<float> positions;  // 3N
  std::vector<float> colors;     // 3N

  size_t size() const { return positions.size() / 3; }
};

/// Semantic store: world positions Q, grid features H, horizontal
/// orientations theta and metric scales s, append-only.
struct FeatureCloudM {
  int dim = 0;
  std::vector<float> positions;   // 3U
  std::vector<float> features;    // U*dim
  std::vector<float> directions;  // U, radians in [-pi, pi)
  std::vector<float> scales;      // U, meters, > 0

  size_t size() const { return positions.size() / 3; }
};

/// Unprojects every valid depth pixel of every view and appends one
/// (position, color) pair each. Pixels with depth <= 0 or > far are
/// skipped. Existing entries are never touched.
void integrate_step_points(PointCloudB& cloud, const StepObservation& obs,
                           const CameraIntrinsics& intr, double far = kDefaultFarPlane);

/// Metric footprint of one feature-grid cell at the given depth:
/// (1/W') * tan(hfov/2) * depth.
double feature_scale(const CameraIntrinsics& intr, double depth, int grid_width);

/// Appends one entry per feature-grid cell per view: position from the
/// patch-center pixel at the mean valid patch depth, the grid feature,
/// the view yaw, and the feature scale. Cells whose patch has no valid
/// depth are skipped.
void integrate_step_features(FeatureCloudM& cloud, const StepObservation& obs,
                             const CameraIntrinsics& intr, double far = kDefaultFarPlane);

// NPCD binary format, little-endian: magic "NPCD", u32 version=1,
// u8 kind (0=point, 1=feature), u32 D, u64 N, then contiguous f32
// arrays in field order. Counts are validated against file length.
void save_cloud(const std::string& path, const PointCloudB& cloud);
void save_cloud(const std::string& path, const FeatureCloudM& cloud);
PointCloudB load_point_cloud(const std::string& path);
FeatureCloudM load_feature_cloud(const std::string& path);

}  // namespace npr
