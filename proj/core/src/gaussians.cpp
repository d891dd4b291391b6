#include "npr/gaussians.hpp"

namespace npr {

std::pair<GaussianSet, GaussianSet> make_gaussians(const SelectedPoints& sel,
                                                   std::span<const double> descriptors,
                                                   const GaussianHeads& heads) {
  heads.validate();
  const size_t m = sel.size();
  const int desc_dim = heads.rotation.in_dim();
  if (descriptors.size() != m * static_cast<size_t>(desc_dim)) {
    raise(Errc::count_mismatch, "descriptor count does not match selected points");
  }

  GaussianSet image;
  image.positions = sel.positions;
  image.rotations.resize(4 * m);
  image.scales.resize(3 * m);
  image.opacities.resize(m);
  image.payload_dim = 3;
  image.payload = sel.colors;

  for (size_t i = 0; i < m; ++i) {
    const HeadsOutput h =
        gaussian_heads(descriptors.subspan(i * desc_dim, desc_dim), heads);
    image.rotations[4 * i] = h.rotation.w();
    image.rotations[4 * i + 1] = h.rotation.x();
    image.rotations[4 * i + 2] = h.rotation.y();
    image.rotations[4 * i + 3] = h.rotation.z();
    for (int c = 0; c < 3; ++c) image.scales[3 * i + c] = h.scales[c];
    image.opacities[i] = h.opacity;
  }

  GaussianSet feature;
  feature.positions = image.positions;
  feature.rotations = image.rotations;
  feature.scales = image.scales;
  feature.opacities = image.opacities;
  feature.payload_dim = desc_dim;
  feature.payload.resize(m * static_cast<size_t>(desc_dim));
  for (size_t i = 0; i < descriptors.size(); ++i) {
    feature.payload[i] = static_cast<float>(descriptors[i]);
  }
  return {std::move(image), std::move(feature)};
}

Mat3 covariance3d(const Quat& q, const Vec3& scales) {
  const Mat3 r = q.normalized().toRotationMatrix();
  const Mat3 s2 = Vec3(scales.array().square()).asDiagonal();
  return r * s2 * r.transpose();
}

Eigen::Matrix2d project_covariance(const Mat3& sigma, const Pose& pose,
                                   const CameraIntrinsics& intr, const Vec3& mean,
                                   double dilation) {
  const Vec3 p_cam = pose.camera_from_world(mean);
  if (p_cam.z() <= kDefaultNearPlane) {
    raise(Errc::behind_camera, "gaussian mean at or behind the near plane");
  }
  const double x = p_cam.x(), y = p_cam.y(), z = p_cam.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << intr.fx / z, 0.0, -intr.fx * x / (z * z),
         0.0, intr.fy / z, -intr.fy * y / (z * z);
  const Mat3 w = pose.rotation.conjugate().toRotationMatrix();
  Eigen::Matrix2d out = jac * w * sigma * w.transpose() * jac.transpose();
  out(0, 0) += dilation;
  out(1, 1) += dilation;
  return out;
}

}  // namespace npr
