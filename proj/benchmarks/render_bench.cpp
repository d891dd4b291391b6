#include <benchmark/benchmark.h>

#include <random>

#include "npr/pipeline.hpp"
#include "npr/raster.hpp"
#include "npr/stq.hpp"
#include "npr/volume.hpp"

using namespace npr;

namespace {

GaussianSet make_primitives(int m) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> ux(-1.5, 1.5);
  std::uniform_real_distribution<double> uz(1.5, 6.0);
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
    for (int c = 0; c < 3; ++c) set.scales.push_back(0.02 + 0.02 * (i % 5));
    set.opacities.push_back(0.9);
    for (int c = 0; c < 3; ++c) set.payload.push_back(0.5f);
  }
  return set;
}

std::vector<float> make_points(int n, double extent) {
  std::mt19937_64 rng(405);
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<float> pts(3 * n);
  for (float& v : pts) v = static_cast<float>(u(rng));
  return pts;
}

}  // namespace

static void BM_KnnQuery(benchmark::State& state) {
  const std::vector<float> pts = make_points(static_cast<int>(state.range(0)), 4.0);
  const OccupancyTree tree = OccupancyTree::build(pts);
  std::mt19937_64 rng(406);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (auto _ : state) {
    const auto hits = tree.knn(Vec3(u(rng), u(rng), u(rng)), 16, 1.0);
    benchmark::DoNotOptimize(hits);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_KnnQuery)->Arg(10000)->Arg(100000);

static void BM_TreeBuild(benchmark::State& state) {
  const std::vector<float> pts = make_points(static_cast<int>(state.range(0)), 4.0);
  for (auto _ : state) {
    const OccupancyTree tree = OccupancyTree::build(pts);
    benchmark::DoNotOptimize(tree);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TreeBuild)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_Rasterize(benchmark::State& state) {
  const GaussianSet set = make_primitives(static_cast<int>(state.range(0)));
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(224, 224, M_PI / 2.0);
  const std::vector<float> bg = {0, 0, 0};
  for (auto _ : state) {
    const RenderedView v = rasterize(set, Pose{}, intr, bg);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rasterize)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond)->UseRealTime();

static void BM_NaiveRasterize(benchmark::State& state) {
  const GaussianSet set = make_primitives(static_cast<int>(state.range(0)));
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(64, 64, M_PI / 2.0);
  const std::vector<float> bg = {0, 0, 0};
  for (auto _ : state) {
    const RenderedView v = naive_rasterize(set, Pose{}, intr, bg);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_NaiveRasterize)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_VolumeRay(benchmark::State& state) {
  const SceneSpec scene = make_default_scene(7, 1, 32);
  EngineConfig cfg;
  const IngestResult in = ingest_scene(scene, cfg);
  const PipelineWeights weights = default_render_weights(cfg, scene, 0.3);
  const VolumeNets nets = volume_nets(weights);
  const OccupancyTree tree = OccupancyTree::build(in.features.positions);
  std::mt19937_64 rng(407);
  std::uniform_real_distribution<double> yaw(-M_PI, M_PI);
  for (auto _ : state) {
    const double a = yaw(rng);
    const Ray ray{scene.trajectory[0].position, Vec3(std::sin(a), 0.0, std::cos(a))};
    const auto f = render_feature_ray(ray, in.features, tree, cfg.sampling, nets);
    benchmark::DoNotOptimize(f);
  }
  state.SetItemsProcessed(state.iterations() * cfg.sampling.samples_per_ray);
}
BENCHMARK(BM_VolumeRay);

static void BM_DensitySelect(benchmark::State& state) {
  std::mt19937_64 rng(408);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  PointCloudB cloud;
  for (int i = 0; i < state.range(0); ++i) {
    for (int c = 0; c < 3; ++c) {
      cloud.positions.push_back(static_cast<float>(u(rng)));
      cloud.colors.push_back(0.5f);
    }
  }
  SamplingConfig cfg;
  for (auto _ : state) {
    const SelectedPoints sel = density_peak_select(cloud, cfg);
    benchmark::DoNotOptimize(sel);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DensitySelect)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
