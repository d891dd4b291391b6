#include <doctest.h>

#include <random>

#include "npr/reference.hpp"
#include "npr/stq.hpp"

using namespace npr;

TEST_CASE("config validation") {
  SamplingConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  SamplingConfig bad = cfg;
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.ray_far = bad.ray_near;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.samples_per_ray = 1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = cfg;
  bad.tau = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("ray sampling midpoints") {
  SamplingConfig cfg;
  Ray ray{Vec3(1, 2, 3), Vec3(0, 1, 0)};
  const RaySamples s = sample_ray_points(ray, cfg);
  CHECK(s.t.size() == 256);
  CHECK(s.t.front() == 10.0 / 512.0);
  CHECK(s.delta == doctest::Approx(10.0 / 256.0));
  double sum = 0.0;
  for (size_t i = 0; i < s.t.size(); ++i) sum += s.delta;
  CHECK(sum == doctest::Approx(10.0).epsilon(1e-12));
  CHECK((s.positions[0] - (ray.origin + s.t[0] * ray.direction)).norm() == 0.0);

  cfg.samples_per_ray = 2;
  const RaySamples two = sample_ray_points(ray, cfg);
  CHECK(two.t[0] == 2.5);
  CHECK(two.t[1] == 7.5);
}

TEST_CASE("selection edge cases") {
  SamplingConfig cfg;
  CHECK_THROWS_AS(density_peak_select(PointCloudB{}, cfg), Error);

  // fewer points than K: selection stays nonempty
  PointCloudB sparse;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int i = 0; i < 5; ++i) {
    for (int c = 0; c < 3; ++c) {
      sparse.positions.push_back(static_cast<float>(u(rng)));
      sparse.colors.push_back(0.5f);
    }
  }
  const SelectedPoints sel = density_peak_select(sparse, cfg);
  CHECK(sel.size() >= 1);
  for (size_t i = 1; i < sel.size(); ++i) {
    CHECK(sel.source_indices[i - 1] < sel.source_indices[i]);
  }
  // selected rows mirror the source cloud
  for (size_t i = 0; i < sel.size(); ++i) {
    const int src = sel.source_indices[i];
    for (int c = 0; c < 3; ++c) {
      CHECK(sel.positions[3 * i + c] == sparse.positions[3 * src + c]);
      CHECK(sel.colors[3 * i + c] == sparse.colors[3 * src + c]);
    }
  }
}

TEST_CASE("selection matches the naive reimplementation") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  SamplingConfig cfg;
  cfg.radius = 0.5;
  cfg.k = 6;
  for (int trial = 0; trial < 3; ++trial) {
    PointCloudB cloud;
    for (int i = 0; i < 90; ++i) {
      for (int c = 0; c < 3; ++c) {
        cloud.positions.push_back(static_cast<float>(u(rng)));
        cloud.colors.push_back(0.5f);
      }
    }
    CHECK(density_peak_select(cloud, cfg).source_indices ==
          reference::density_select_bruteforce(cloud, cfg));
  }
}

TEST_CASE("selection is a fixpoint") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  SamplingConfig cfg;
  PointCloudB cloud;
  for (int i = 0; i < 250; ++i) {
    for (int c = 0; c < 3; ++c) {
      cloud.positions.push_back(static_cast<float>(u(rng)));
      cloud.colors.push_back(0.5f);
    }
  }
  const SelectedPoints first = density_peak_select(cloud, cfg);
  PointCloudB again{first.positions, first.colors};
  const SelectedPoints second = density_peak_select(again, cfg);
  REQUIRE(second.size() == first.size());
  for (size_t i = 0; i < second.size(); ++i) {
    CHECK(second.source_indices[i] == static_cast<int>(i));
  }
}

namespace {

FeatureCloudM two_point_cloud(int dim) {
  FeatureCloudM cloud;
  cloud.dim = dim;
  cloud.positions = {0.3f, 0, 0, -0.6f, 0, 0};
  for (int i = 0; i < 2; ++i) {
    for (int c = 0; c < dim; ++c) cloud.features.push_back(i == 0 ? 1.0f : 0.0f);
  }
  cloud.directions = {0.0f, 0.0f};
  cloud.scales = {2.0f, 1.0f};
  return cloud;
}

}  // namespace

TEST_CASE("aggregation single neighbor scales the identity") {
  // single neighbor: the normalized weight is 1 and f' = s * phi1(...)
  FeatureCloudM cloud;
  cloud.dim = 2;
  cloud.positions = {0.4f, 0, 0};
  cloud.features = {0.7f, -0.2f};
  cloud.directions = {0.0f};
  cloud.scales = {3.0f};
  const OccupancyTree tree = OccupancyTree::build(cloud.positions);
  // phi1 projects the base feature straight through
  MlpWeights phi1;
  MlpLayer l;
  l.in_dim = 5;
  l.out_dim = 2;
  l.act = Activation::none;
  l.weight = {1, 0, 0, 0, 0, 0, 1, 0, 0, 0};
  l.bias = {0, 0};
  phi1.layers.push_back(l);

  SamplingConfig cfg;
  const AggregatedFeature agg = aggregate_point_feature(Vec3(0, 0, 0), cloud, tree, cfg, phi1);
  REQUIRE(!agg.empty);
  REQUIRE(agg.weights.size() == 1);
  CHECK(agg.weights[0] == 1.0);
  CHECK(agg.value[0] == doctest::Approx(3.0 * 0.7).epsilon(1e-6));
  CHECK(agg.value[1] == doctest::Approx(3.0 * -0.2).epsilon(1e-6));
}

TEST_CASE("aggregation weight ratio and empty neighborhood") {
  const FeatureCloudM cloud = two_point_cloud(3);
  const OccupancyTree tree = OccupancyTree::build(cloud.positions);
  const MlpWeights phi1 = make_random_mlp(51, {6, 3}, {Activation::none});
  SamplingConfig cfg;
  const AggregatedFeature agg = aggregate_point_feature(Vec3(0, 0, 0), cloud, tree, cfg, phi1);
  REQUIRE(agg.weights.size() == 2);
  CHECK(agg.weights[0] / agg.weights[1] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(agg.weights[0] + agg.weights[1] == doctest::Approx(1.0).epsilon(1e-12));

  const AggregatedFeature far =
      aggregate_point_feature(Vec3(50, 50, 50), cloud, tree, cfg, phi1);
  CHECK(far.empty);
  for (double v : far.value) CHECK(v == 0.0);

  CHECK_THROWS_AS(aggregate_point_feature(Vec3(0, 0, 0), cloud, tree, cfg, MlpWeights{}), Error);
}

TEST_CASE("density regression contract") {
  const FeatureCloudM cloud = two_point_cloud(3);
  const OccupancyTree tree = OccupancyTree::build(cloud.positions);
  const MlpWeights phi1 = make_random_mlp(53, {6, 3}, {Activation::none});
  const MlpWeights phi2 = make_random_mlp(54, {5, 4}, {Activation::none});
  const MlpWeights phi3_good = make_random_mlp(55, {3, 1}, {Activation::softplus});
  MlpWeights phi3_bad = make_random_mlp(56, {3, 1}, {Activation::none});

  SamplingConfig cfg;
  const AggregatedFeature agg = aggregate_point_feature(Vec3(0, 0, 0), cloud, tree, cfg, phi1);
  const RadianceDensity rd = regress_radiance_density(agg, 0.3, phi2, phi3_good);
  CHECK(rd.sigma >= 0.0);
  CHECK(rd.radiance.size() == 4);

  CHECK_THROWS_AS(regress_radiance_density(agg, 0.3, phi2, phi3_bad), Error);
  CHECK_THROWS_AS(regress_radiance_density(agg, 0.3, MlpWeights{}, phi3_good), Error);

  AggregatedFeature vacuum;
  vacuum.value.assign(3, 0.0);
  const RadianceDensity zero = regress_radiance_density(vacuum, 0.0, phi2, phi3_good);
  CHECK(zero.sigma == 0.0);
  for (double v : zero.radiance) CHECK(v == 0.0);
}

TEST_CASE("translation leaves selection indices unchanged") {
  std::mt19937_64 rng(57);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  SamplingConfig cfg;
  PointCloudB cloud;
  for (int i = 0; i < 150; ++i) {
    for (int c = 0; c < 3; ++c) {
      // grid-aligned so the f32 translation below is exact
      cloud.positions.push_back(static_cast<float>(std::round(u(rng) * 4096.0) / 4096.0));
      cloud.colors.push_back(0.25f);
    }
  }
  PointCloudB moved = cloud;
  for (size_t i = 0; i < moved.positions.size(); i += 3) {
    moved.positions[i] += 32.0f;
    moved.positions[i + 1] -= 16.0f;
    moved.positions[i + 2] += 8.0f;
  }
  CHECK(density_peak_select(cloud, cfg).source_indices ==
        density_peak_select(moved, cfg).source_indices);
}
