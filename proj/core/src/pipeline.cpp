#include "npr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "npr/gaussians.hpp"
#include "npr/raster.hpp"
#include "npr/stq.hpp"
#include "npr/volume.hpp"

namespace npr {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

SpacingEstimate estimate_spacing(const SceneSpec& scene) {
  const CameraIntrinsics intr =
      CameraIntrinsics::from_hfov(scene.resolution, scene.resolution, M_PI / 2.0);
  std::vector<double> depths;
  Image rgb, depth;
  for (int v = 0; v < kPanoramaViews; ++v) {
    const Pose pose = Pose::from_position_yaw(
        scene.trajectory[0].position, scene.trajectory[0].base_yaw + v * kPanoramaStepRad);
    render_ground_truth(scene, intr, pose, rgb, depth);
    for (float d : depth.data) {
      if (d > 0.0f) depths.push_back(d);
    }
  }
  SpacingEstimate est;
  if (depths.empty()) return est;
  std::sort(depths.begin(), depths.end());
  est.near = depths[depths.size() / 20] / intr.fx;
  double sum = 0.0;
  for (double d : depths) sum += d;
  est.mean = sum / depths.size() / intr.fx;
  return est;
}

IngestResult ingest_scene(const SceneSpec& scene, const EngineConfig& cfg) {
  const auto start = Clock::now();
  const CameraIntrinsics intr = CameraIntrinsics::from_hfov(scene.resolution, scene.resolution,
                                                            cfg.hfov_deg * M_PI / 180.0);
  const GridFeatureEncoder enc = GridFeatureEncoder::make(scene.seed, cfg.feature_dim);
  IngestResult out;
  for (const TrajectoryStep& step : scene.trajectory) {
    const StepObservation obs = make_step_observation(scene, intr, step, &enc);
    integrate_step_points(out.points, obs, intr, cfg.sampling.ray_far);
    integrate_step_features(out.features, obs, intr, cfg.sampling.ray_far);
  }
  out.millis = ms_since(start);
  return out;
}

PipelineWeights default_render_weights(const EngineConfig& cfg, const SceneSpec& scene,
                                       double gauss_scale) {
  Vec3 centroid(0, 0, 0);
  for (const TrajectoryStep& s : scene.trajectory) centroid += s.position;
  centroid /= static_cast<double>(scene.trajectory.size());
  const double fx = (scene.resolution / 2.0) / std::tan(M_PI / 4.0);
  // footprint tracks the ingest spacing but never drops below the
  // selection resampling radius
  const double floor_s = 0.8 * cfg.sampling.radius;
  const double s0 = std::max(gauss_scale * 1.0 / fx, floor_s);
  const double s1 = std::max(gauss_scale * 3.0 / fx, floor_s + 1e-6);
  // the model sees L1 distances, roughly 1.27x the euclidean ones
  const double l1 = 1.27;
  const DistanceScaleModel model =
      DistanceScaleModel::fit(centroid, 1.0 * l1, s0, 3.0 * l1, s1, 4.5 * l1);
  PipelineWeights w = make_adaptive_render_weights(cfg.seed, cfg.feature_dim, cfg.descriptor_dim,
                                                   cfg.embed_dim, model, 0.995, cfg.patch);
  // surfaces are opaque: rays terminate within a few samples of entry
  w.phi3 = make_bias_mlp(cfg.feature_dim, {200.0}, Activation::softplus);
  return w;
}

void tune_selection(EngineConfig& cfg, const SceneSpec& scene) {
  cfg.sampling.radius = 1.2 * estimate_spacing(scene).near;
  cfg.sampling.tau = 1.0;
}

std::string BenchReport::to_json() const {
  nlohmann::json j{{"primitives", primitives},
                   {"feature_entries", feature_entries},
                   {"samples_per_ray", samples_per_ray},
                   {"resolution", {width, height}},
                   {"warmup_runs", warmup_runs},
                   {"measured_runs", measured_runs},
                   {"splat_ms_median", splat_ms_median},
                   {"volume_ms_median", volume_ms_median},
                   {"speed_ratio", speed_ratio},
                   {"splat_ms_all", splat_ms},
                   {"volume_ms_all", volume_ms}};
  return j.dump(2);
}

BenchReport run_render_benchmark(const EngineConfig& cfg_in, const SceneSpec& scene) {
  EngineConfig cfg = cfg_in;
  cfg.bench_runs = std::max(cfg.bench_runs, 10);
  cfg.bench_warmup = std::max(cfg.bench_warmup, 3);
  cfg.raster.threads = cfg.threads;

  const IngestResult in = ingest_scene(scene, cfg);
  EngineConfig weights_cfg = cfg;
  weights_cfg.sampling.radius = 1.2 * estimate_spacing(scene).near;
  const PipelineWeights weights = default_render_weights(weights_cfg, scene, 0.6);

  // every ingested point becomes a primitive
  SelectedPoints all;
  all.positions = in.points.positions;
  all.colors = in.points.colors;
  all.source_indices.resize(in.points.size());
  for (size_t i = 0; i < in.points.size(); ++i) all.source_indices[i] = static_cast<int>(i);
  const std::vector<double> desc = point_descriptor(all.positions, all.colors, weights.descriptor);
  const auto [img_set, feat_set] = make_gaussians(all, desc, weights.heads);

  const CameraIntrinsics intr = cfg.intrinsics();
  const Pose pose = Pose::from_position_yaw(scene.trajectory[0].position,
                                            scene.trajectory[0].base_yaw);
  const std::vector<float> bg(3, 0.0f);

  BenchReport report;
  report.primitives = img_set.size();
  report.feature_entries = in.features.size();
  report.samples_per_ray = cfg.sampling.samples_per_ray;
  report.width = cfg.width;
  report.height = cfg.height;
  report.warmup_runs = cfg.bench_warmup;
  report.measured_runs = cfg.bench_runs;

  for (int i = 0; i < cfg.bench_warmup; ++i) rasterize(img_set, pose, intr, bg, cfg.raster);
  for (int i = 0; i < cfg.bench_runs; ++i) {
    const auto t = Clock::now();
    rasterize(img_set, pose, intr, bg, cfg.raster);
    report.splat_ms.push_back(ms_since(t));
  }

  const VolumeNets nets = volume_nets(weights);
  for (int i = 0; i < cfg.bench_warmup; ++i) {
    render_feature_view(pose, intr, in.features, cfg.sampling, nets, cfg.threads);
  }
  for (int i = 0; i < cfg.bench_runs; ++i) {
    const auto t = Clock::now();
    render_feature_view(pose, intr, in.features, cfg.sampling, nets, cfg.threads);
    report.volume_ms.push_back(ms_since(t));
  }

  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  report.splat_ms_median = median_of(report.splat_ms);
  report.volume_ms_median = median_of(report.volume_ms);
  report.speed_ratio = report.volume_ms_median / report.splat_ms_median;
  return report;
}

}  // namespace npr
