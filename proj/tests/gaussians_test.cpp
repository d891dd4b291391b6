#include <doctest.h>

#include <random>

#include "npr/gaussians.hpp"

using namespace npr;

TEST_CASE("make_gaussians shares geometry and validates counts") {
  SelectedPoints sel;
  sel.positions = {1, 2, 3, 4, 5, 6};
  sel.colors = {0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f};
  sel.source_indices = {0, 1};

  GaussianHeads heads;
  heads.rotation = make_random_mlp(81, {4, 4}, {Activation::none});
  heads.scale = make_random_mlp(82, {4, 3}, {Activation::none});
  heads.opacity = make_random_mlp(83, {4, 1}, {Activation::none});

  std::vector<double> desc(2 * 4, 0.3);
  const auto [img, feat] = make_gaussians(sel, desc, heads);
  CHECK(img.size() == 2);
  CHECK(img.payload_dim == 3);
  CHECK(feat.payload_dim == 4);
  CHECK(img.positions == feat.positions);
  CHECK(img.rotations == feat.rotations);
  CHECK(img.scales == feat.scales);
  CHECK(img.opacities == feat.opacities);
  CHECK(img.payload == sel.colors);

  std::vector<double> wrong(3 * 4, 0.3);
  CHECK_THROWS_AS(make_gaussians(sel, wrong, heads), Error);
}

TEST_CASE("covariance3d hand cases") {
  const Mat3 diag = covariance3d(Quat(1, 0, 0, 0), Vec3(1, 2, 3));
  CHECK(diag(0, 0) == doctest::Approx(1.0));
  CHECK(diag(1, 1) == doctest::Approx(4.0));
  CHECK(diag(2, 2) == doctest::Approx(9.0));

  const double s = std::sqrt(0.5);
  const Mat3 swapped = covariance3d(Quat(s, 0, 0, s), Vec3(1, 2, 1));
  CHECK(swapped(0, 0) == doctest::Approx(4.0));
  CHECK(swapped(1, 1) == doctest::Approx(1.0));
  CHECK(swapped(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("project_covariance behavior") {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(64, 64, M_PI / 2.0);
  const Mat3 cov = covariance3d(Quat(1, 0, 0, 0), Vec3(0.2, 0.2, 0.2));
  CHECK_THROWS_AS(project_covariance(cov, Pose{}, intr, Vec3(0, 0, -1.0)), Error);

  const Eigen::Matrix2d plain = project_covariance(cov, Pose{}, intr, Vec3(0, 0, 2.0), 0.0);
  const Eigen::Matrix2d dilated = project_covariance(cov, Pose{}, intr, Vec3(0, 0, 2.0), 0.3);
  CHECK(dilated(0, 0) == doctest::Approx(plain(0, 0) + 0.3));
  CHECK(dilated(1, 1) == doctest::Approx(plain(1, 1) + 0.3));
  CHECK(dilated(0, 1) == doctest::Approx(plain(0, 1)));
  CHECK(plain(0, 0) == doctest::Approx(std::pow(intr.fx * 0.2 / 2.0, 2)).epsilon(1e-9));

  // symmetric result off-axis under a rotated pose
  const Pose pose = Pose::from_position_yaw(Vec3(0.5, -0.2, 0.1), 0.4);
  const Vec3 mean = pose.world_from_camera(Vec3(0.7, -0.4, 3.0));
  const Eigen::Matrix2d off = project_covariance(cov, pose, intr, mean);
  CHECK(off(0, 1) == doctest::Approx(off(1, 0)).epsilon(1e-12));
  CHECK(off.determinant() > 0.0);
}
