#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "npr/error.hpp"

namespace npr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Pinhole camera intrinsics. Continuous image coordinates run over
/// [0, width] x [0, height]; the center of integer pixel (h, w) sits at
/// (h + 0.5, w + 0.5).
struct CameraIntrinsics {
  int width = 0;
  int height = 0;
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double hfov = 0.0;  // radians

  static CameraIntrinsics from_hfov(int width, int height, double hfov_rad);
  static CameraIntrinsics explicit_kmatrix(int width, int height, double fx, double fy,
                                           double cx, double cy);

  void validate() const;

  static CameraIntrinsics from_json(const std::string& text);
  std::string to_json() const;
};

/// Rigid pose, world-from-camera: x_world = R * x_camera + t.
/// Camera frame is right-handed, +z forward, +x right, +y down.
struct Pose {
  Quat rotation{1.0, 0.0, 0.0, 0.0};
  Vec3 translation{0.0, 0.0, 0.0};

  Pose() = default;
  Pose(const Quat& q, const Vec3& t);

  Mat3 matrix() const { return rotation.toRotationMatrix(); }
  Vec3 camera_from_world(const Vec3& p_world) const;
  Vec3 world_from_camera(const Vec3& p_camera) const;

  /// Horizontal orientation of the camera forward axis, atan2(f.x, f.z),
  /// in [-pi, pi).
  double yaw() const;

  /// Pose at `position` looking along yaw (rotation about the +y axis),
  /// level horizon.
  static Pose from_position_yaw(const Vec3& position, double yaw);

  static Pose from_json(const std::string& text);
  std::string to_json() const;
};

struct Ray {
  Vec3 origin{0.0, 0.0, 0.0};
  Vec3 direction{0.0, 0.0, 1.0};  // unit length
};

/// Continuous pixel coordinate in (row, column) order.
struct PixelCoord {
  double h = 0.0;
  double w = 0.0;
};

struct Projection {
  PixelCoord pixel;
  double depth = 0.0;  // camera-frame forward (z) distance
};

constexpr double kDefaultNearPlane = 0.01;  // meters

/// Maps a continuous pixel coordinate plus z-depth to a world point.
/// Callers iterating integer pixel indices pass (h + 0.5, w + 0.5).
Vec3 unproject_pixel(const CameraIntrinsics& intr, const Pose& pose, PixelCoord pixel,
                     double depth);

/// Inverse of unproject_pixel. The returned pixel may lie outside the
/// image bounds; callers clip. Throws BehindCamera for z <= near.
Projection project_point(const CameraIntrinsics& intr, const Pose& pose, const Vec3& p_world,
                         double near = kDefaultNearPlane);

/// Non-throwing projection for hot loops; returns false for z <= near.
bool try_project_point(const CameraIntrinsics& intr, const Pose& pose, const Vec3& p_world,
                       Projection& out, double near = kDefaultNearPlane);

struct RayGrid {
  int height = 0;
  int width = 0;
  std::vector<Ray> rays;  // row-major

  const Ray& at(int h, int w) const { return rays[static_cast<size_t>(h) * width + w]; }
};

/// One ray per pixel through the (h + 0.5, w + 0.5) pixel center,
/// directions unit-normalized in world space.
RayGrid camera_rays(const CameraIntrinsics& intr, const Pose& pose);

/// Single ray through an arbitrary continuous pixel coordinate.
Ray pixel_ray(const CameraIntrinsics& intr, const Pose& pose, PixelCoord pixel);

/// Rotation matrix from quaternion components (w, x, y, z); normalizes
/// internally, throws ZeroQuaternion when the norm is below 1e-12.
Mat3 quat_to_matrix(double w, double x, double y, double z);

/// Wraps an angle to [-pi, pi).
double wrap_angle(double a);

}  // namespace npr
