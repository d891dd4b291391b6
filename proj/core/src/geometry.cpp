#include "npr/geometry.hpp"

#include <cmath>

#include <json.hpp>

namespace npr {

using nlohmann::json;

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

CameraIntrinsics CameraIntrinsics::from_hfov(int width, int height, double hfov_rad) {
  CameraIntrinsics k;
  k.width = width;
  k.height = height;
  k.hfov = hfov_rad;
  k.fx = (width / 2.0) / std::tan(hfov_rad / 2.0);
  k.fy = k.fx;  // square pixels
  k.cx = width / 2.0;
  k.cy = height / 2.0;
  k.validate();
  return k;
}

CameraIntrinsics CameraIntrinsics::explicit_kmatrix(int width, int height, double fx, double fy,
                                                    double cx, double cy) {
  CameraIntrinsics k;
  k.width = width;
  k.height = height;
  k.fx = fx;
  k.fy = fy;
  k.cx = cx;
  k.cy = cy;
  k.hfov = 2.0 * std::atan((width / 2.0) / fx);
  k.validate();
  return k;
}

void CameraIntrinsics::validate() const {
  if (width < 1 || height < 1) raise(Errc::invalid_spec, "image dimensions must be >= 1");
  if (!(fx > 0.0) || !(fy > 0.0)) raise(Errc::invalid_spec, "focal lengths must be positive");
  if (!(hfov > 0.0) || !(hfov < M_PI)) raise(Errc::invalid_spec, "hfov must lie in (0, pi)");
}

CameraIntrinsics CameraIntrinsics::from_json(const std::string& text) {
  json j = json::parse(text);
  const int w = j.at("w").get<int>();
  const int h = j.at("h").get<int>();
  if (j.contains("hfov_deg")) {
    return from_hfov(w, h, j.at("hfov_deg").get<double>() * M_PI / 180.0);
  }
  return explicit_kmatrix(w, h, j.at("fx").get<double>(), j.at("fy").get<double>(),
                          j.at("cx").get<double>(), j.at("cy").get<double>());
}

std::string CameraIntrinsics::to_json() const {
  json j{{"w", width}, {"h", height}, {"fx", fx}, {"fy", fy}, {"cx", cx}, {"cy", cy}};
  return j.dump();
}

Pose::Pose(const Quat& q, const Vec3& t) : rotation(q), translation(t) {
  const double n = rotation.norm();
  if (n < 1e-12) raise(Errc::zero_quaternion, "pose rotation has zero norm");
  rotation.normalize();
}

Vec3 Pose::camera_from_world(const Vec3& p_world) const {
  return rotation.conjugate() * (p_world - translation);
}

Vec3 Pose::world_from_camera(const Vec3& p_camera) const {
  return rotation * p_camera + translation;
}

double Pose::yaw() const {
  const Vec3 f = rotation * Vec3(0.0, 0.0, 1.0);
  return wrap_angle(std::atan2(f.x(), f.z()));
}

Pose Pose::from_position_yaw(const Vec3& position, double yaw) {
  const Quat q(Eigen::AngleAxisd(yaw, Vec3::UnitY()));
  return Pose(q, position);
}

Pose Pose::from_json(const std::string& text) {
  json j = json::parse(text);
  const auto q = j.at("q");
  const auto t = j.at("t");
  if (q.size() != 4 || t.size() != 3) raise(Errc::invalid_spec, "pose json needs q[4], t[3]");
  return Pose(Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()),
              Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>()));
}

std::string Pose::to_json() const {
  json j{{"q", {rotation.w(), rotation.x(), rotation.y(), rotation.z()}},
         {"t", {translation.x(), translation.y(), translation.z()}}};
  return j.dump();
}

Vec3 unproject_pixel(const CameraIntrinsics& intr, const Pose& pose, PixelCoord pixel,
                     double depth) {
  if (!(depth > 0.0)) raise(Errc::non_positive_depth, "depth must be > 0");
  if (pixel.w < 0.0 || pixel.w > intr.width || pixel.h < 0.0 || pixel.h > intr.height) {
    raise(Errc::pixel_out_of_bounds, "pixel outside image bounds");
  }
  const Vec3 p_cam(depth * (pixel.w - intr.cx) / intr.fx, depth * (pixel.h - intr.cy) / intr.fy,
                   depth);
  return pose.world_from_camera(p_cam);
}

bool try_project_point(const CameraIntrinsics& intr, const Pose& pose, const Vec3& p_world,
                       Projection& out, double near) {
  const Vec3 p_cam = pose.camera_from_world(p_world);
  if (p_cam.z() <= near) return false;
  out.pixel.w = intr.fx * p_cam.x() / p_cam.z() + intr.cx;
  out.pixel.h = intr.fy * p_cam.y() / p_cam.z() + intr.cy;
  out.depth = p_cam.z();
  return true;
}

Projection project_point(const CameraIntrinsics& intr, const Pose& pose, const Vec3& p_world,
                         double near) {
  Projection out;
  if (!try_project_point(intr, pose, p_world, out, near)) {
    raise(Errc::behind_camera, "point at or behind the near plane");
  }
  return out;
}

Ray pixel_ray(const CameraIntrinsics& intr, const Pose& pose, PixelCoord pixel) {
  const Vec3 d_cam((pixel.w - intr.cx) / intr.fx, (pixel.h - intr.cy) / intr.fy, 1.0);
  Ray r;
  r.origin = pose.translation;
  r.direction = (pose.rotation * d_cam).normalized();
  return r;
}

RayGrid camera_rays(const CameraIntrinsics& intr, const Pose& pose) {
  RayGrid grid;
  grid.height = intr.height;
  grid.width = intr.width;
  grid.rays.resize(static_cast<size_t>(intr.height) * intr.width);
  for (int i = 0; i < intr.height; ++i) {
    for (int j = 0; j < intr.width; ++j) {
      grid.rays[static_cast<size_t>(i) * intr.width + j] =
          pixel_ray(intr, pose, {i + 0.5, j + 0.5});
    }
  }
  return grid;
}

Mat3 quat_to_matrix(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (n < 1e-12) raise(Errc::zero_quaternion, "quaternion norm below 1e-12");
  return Quat(w / n, x / n, y / n, z / n).toRotationMatrix();
}

}  // namespace npr
