#include <doctest.h>

#include <random>

#include "npr/raster.hpp"

using namespace npr;

namespace {

GaussianSet random_set(std::uint64_t seed, int m) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-1.2, 1.2);
  std::uniform_real_distribution<double> uz(2.0, 5.0);
  std::uniform_real_distribution<double> us(0.05, 0.35);
  std::uniform_real_distribution<double> ua(0.1, 0.9);
  std::normal_distribution<double> n(0.0, 1.0);
  GaussianSet set;
  set.payload_dim = 3;
  for (int i = 0; i < m; ++i) {
    set.positions.insert(set.positions.end(),
                         {static_cast<float>(ux(rng)), static_cast<float>(ux(rng)),
                          static_cast<float>(uz(rng))});
    Quat q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    set.rotations.insert(set.rotations.end(), {q.w(), q.x(), q.y(), q.z()});
    for (int c = 0; c < 3; ++c) set.scales.push_back(us(rng));
    set.opacities.push_back(ua(rng));
    for (int c = 0; c < 3; ++c) set.payload.push_back(static_cast<float>(ua(rng)));
  }
  return set;
}

}  // namespace

TEST_CASE("empty set renders background") {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(16, 16, M_PI / 2.0);
  GaussianSet empty;
  empty.payload_dim = 2;
  const std::vector<float> bg = {0.6f, 0.1f};
  const RenderedView v = rasterize(empty, Pose{}, intr, bg);
  CHECK(v.pixels.channels == 2);
  for (int h = 0; h < 16; ++h) {
    for (int w = 0; w < 16; ++w) {
      CHECK(v.pixels.at(h, w, 0) == 0.6f);
      CHECK(v.pixels.at(h, w, 1) == 0.1f);
      CHECK(v.alpha.at(h, w) == 0.0f);
    }
  }
}

TEST_CASE("background dim mismatch") {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(8, 8, M_PI / 2.0);
  const GaussianSet set = random_set(1, 3);
  const std::vector<float> bg = {0.0f};  // payload is 3-channel
  CHECK_THROWS_AS(rasterize(set, Pose{}, intr, bg), Error);
  CHECK_THROWS_AS(naive_rasterize(set, Pose{}, intr, bg), Error);
}

TEST_CASE("tile rasterizer equals the naive oracle") {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(48, 48, M_PI / 2.0);
  const GaussianSet set = random_set(2, 40);
  const std::vector<float> bg = {0.2f, 0.3f, 0.4f};

  SUBCASE("exact mode is bit-identical") {
    const RasterOptions exact = RasterOptions::exact_oracle();
    const RenderedView a = rasterize(set, Pose{}, intr, bg, exact);
    const RenderedView b = naive_rasterize(set, Pose{}, intr, bg, exact);
    CHECK(a.pixels.data == b.pixels.data);
    CHECK(a.alpha.data == b.alpha.data);
  }

  SUBCASE("default mode stays within 1e-5") {
    const RenderedView a = rasterize(set, Pose{}, intr, bg);
    const RenderedView b = naive_rasterize(set, Pose{}, intr, bg);
    double worst = 0.0;
    for (size_t i = 0; i < a.pixels.data.size(); ++i) {
      worst = std::max(worst, std::abs(static_cast<double>(a.pixels.data[i]) -
                                       b.pixels.data[i]));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("thread count does not change the output") {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(32, 32, M_PI / 2.0);
  const GaussianSet set = random_set(3, 25);
  const std::vector<float> bg = {0.1f, 0.1f, 0.1f};
  RasterOptions one;
  one.threads = 1;
  RasterOptions four;
  four.threads = 4;
  const RenderedView a = rasterize(set, Pose{}, intr, bg, one);
  const RenderedView b = rasterize(set, Pose{}, intr, bg, four);
  CHECK(a.pixels.data == b.pixels.data);
  CHECK(a.alpha.data == b.alpha.data);
  CHECK(a.depth_hint.data == b.depth_hint.data);
}

TEST_CASE("behind-camera and far off-frustum primitives are dropped") {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(32, 32, M_PI / 2.0);
  GaussianSet set;
  set.payload_dim = 1;
  // one behind, one 88 degrees off axis, one in view
  const float xs[3] = {0.0f, 60.0f, 0.0f};
  const float zs[3] = {-3.0f, 2.0f, 3.0f};
  for (int i = 0; i < 3; ++i) {
    set.positions.insert(set.positions.end(), {xs[i], 0.0f, zs[i]});
    set.rotations.insert(set.rotations.end(), {1, 0, 0, 0});
    set.scales.insert(set.scales.end(), {0.1, 0.1, 0.1});
    set.opacities.push_back(0.8);
    set.payload.push_back(1.0f);
  }
  const auto prims = project_gaussians(set, Pose{}, intr, RasterOptions{});
  REQUIRE(prims.size() == 1);
  CHECK(prims[0].index == 2);
}

TEST_CASE("singular screen covariances are skipped and counted") {
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(32, 32, M_PI / 2.0);
  GaussianSet set;
  set.payload_dim = 1;
  set.positions = {0, 0, 3};
  set.rotations = {1, 0, 0, 0};
  set.scales = {1e-9, 10.0, 10.0};  // condition number far beyond 1e12
  set.opacities = {0.9};
  set.payload = {1.0f};
  const RasterOptions exact = RasterOptions::exact_oracle();  // no dilation to mask it
  int skipped = 0;
  const auto prims = project_gaussians(set, Pose{}, intr, exact, &skipped);
  CHECK(prims.empty());
  CHECK(skipped == 1);
  const std::vector<float> bg = {0.5f};
  const RenderedView v = rasterize(set, Pose{}, intr, bg, exact);
  CHECK(v.skipped_singular == 1);
  CHECK(v.pixels.at(16, 16) == 0.5f);
}

TEST_CASE("depth hint tracks blend-weighted depth") {
  const CameraIntrinsics intr = CameraIntrinsics::explicit_kmatrix(17, 17, 17, 17, 8.5, 8.5);
  GaussianSet set;
  set.payload_dim = 1;
  set.positions = {0, 0, 2};
  set.rotations = {1, 0, 0, 0};
  set.scales = {0.5, 0.5, 0.5};
  set.opacities = {1.0};
  set.payload = {1.0f};
  const std::vector<float> bg = {0.0f};
  const RenderedView v = rasterize(set, Pose{}, intr, bg, RasterOptions::exact_oracle());
  CHECK(v.depth_hint.at(8, 8) == doctest::Approx(2.0));
}
