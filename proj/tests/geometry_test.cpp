#include <doctest.h>

#include <cmath>
#include <random>

#include "npr/geometry.hpp"

using namespace npr;

TEST_CASE("intrinsics from hfov") {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(224, 224, M_PI / 2.0);
  CHECK(intr.fx == doctest::Approx(112.0).epsilon(1e-12));
  CHECK(intr.fy == intr.fx);
  CHECK(intr.cx == 112.0);
  CHECK_THROWS_AS(CameraIntrinsics::from_hfov(0, 10, 1.0), Error);
  CHECK_THROWS_AS(CameraIntrinsics::from_hfov(10, 10, 0.0), Error);
  CHECK_THROWS_AS(CameraIntrinsics::from_hfov(10, 10, M_PI), Error);
}

TEST_CASE("intrinsics json both forms") {
  const CameraIntrinsics a = CameraIntrinsics::from_json(R"({"w":224,"h":224,"hfov_deg":90})");
  CHECK(a.fx == doctest::Approx(112.0));
  const CameraIntrinsics b =
      CameraIntrinsics::from_json(R"({"w":64,"h":48,"fx":60,"fy":61,"cx":31.5,"cy":24.5})");
  CHECK(b.fy == 61.0);
  const CameraIntrinsics c = CameraIntrinsics::from_json(b.to_json());
  CHECK(c.fx == b.fx);
  CHECK(c.cy == b.cy);
}

TEST_CASE("unproject validates inputs") {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(32, 32, M_PI / 2.0);
  CHECK_THROWS_AS(unproject_pixel(intr, Pose{}, {5.0, 5.0}, 0.0), Error);
  CHECK_THROWS_AS(unproject_pixel(intr, Pose{}, {5.0, 5.0}, -1.0), Error);
  CHECK_THROWS_AS(unproject_pixel(intr, Pose{}, {-0.1, 5.0}, 1.0), Error);
  CHECK_THROWS_AS(unproject_pixel(intr, Pose{}, {5.0, 33.0}, 1.0), Error);
  try {
    unproject_pixel(intr, Pose{}, {5.0, 5.0}, -1.0);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_positive_depth);
  }
}

TEST_CASE("optical axis and behind camera") {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(64, 64, M_PI / 2.0);
  const Projection p = project_point(intr, Pose{}, Vec3(0, 0, 5));
  CHECK(p.pixel.h == doctest::Approx(intr.cy));
  CHECK(p.pixel.w == doctest::Approx(intr.cx));
  CHECK(p.depth == doctest::Approx(5.0));
  CHECK_THROWS_AS(project_point(intr, Pose{}, Vec3(0, 0, -1)), Error);
  try {
    project_point(intr, Pose{}, Vec3(0, 0, -1));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::behind_camera);
  }
}

TEST_CASE("projection round trip under random poses") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> up(0.0, 64.0);
  std::uniform_real_distribution<double> ud(0.1, 9.0);
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(64, 64, 1.4);
  for (int i = 0; i < 1000; ++i) {
    const Pose pose(Quat(n(rng), n(rng), n(rng), n(rng)), Vec3(n(rng), n(rng), n(rng)));
    const PixelCoord px{up(rng), up(rng)};
    const double d = ud(rng);
    const Projection back = project_point(intr, pose, unproject_pixel(intr, pose, px, d));
    CHECK(std::abs(back.pixel.h - px.h) < 1e-6);
    CHECK(std::abs(back.pixel.w - px.w) < 1e-6);
    CHECK(std::abs(back.depth - d) < 1e-9);
  }
}

TEST_CASE("camera rays through pixel centers") {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(9, 7, M_PI / 2.0);
  const RayGrid rays = camera_rays(intr, Pose{});
  CHECK(rays.rays.size() == 63);
  // center pixel of an odd grid is the principal point
  const Ray center = rays.at(3, 4);
  CHECK(center.direction.z() == doctest::Approx(1.0).epsilon(1e-12));
  for (const Ray& r : rays.rays) CHECK(std::abs(r.direction.norm() - 1.0) < 1e-9);
}

TEST_CASE("quaternion to matrix") {
  const Mat3 identity = quat_to_matrix(1, 0, 0, 0);
  CHECK((identity - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);

  // 90 degrees about z maps x to y
  const double s = std::sqrt(0.5);
  const Mat3 rz = quat_to_matrix(s, 0, 0, s);
  CHECK((rz * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() < 1e-12);

  CHECK_THROWS_AS(quat_to_matrix(0, 0, 0, 0), Error);
  // unnormalized input is normalized internally
  const Mat3 scaled = quat_to_matrix(2, 0, 0, 0);
  CHECK((scaled - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pose json and yaw") {
  const Pose p = Pose::from_position_yaw(Vec3(1, 2, 3), 0.7);
  CHECK(p.yaw() == doctest::Approx(0.7));
  const Pose back = Pose::from_json(p.to_json());
  CHECK((back.translation - p.translation).norm() == 0.0);
  CHECK(std::abs(back.rotation.dot(p.rotation)) == doctest::Approx(1.0));

  CHECK_THROWS_AS(Pose::from_json(R"({"q":[0,0,0,0],"t":[0,0,0]})"), Error);
  CHECK_THROWS_AS(Pose::from_json(R"({"q":[1,0,0],"t":[0,0,0]})"), Error);
}

TEST_CASE("wrap angle range") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(M_PI) == doctest::Approx(-M_PI));
  CHECK(wrap_angle(3 * M_PI + 0.1) == doctest::Approx(-M_PI + 0.1));
}
