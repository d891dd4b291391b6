#pragma once

#include <string>

#include "npr/config.hpp"
#include "npr/scene.hpp"
#include "npr/weights_io.hpp"

// End-to-end plumbing shared by the CLI and the acceptance suite.
namespace npr {

struct SpacingEstimate {
  double near = 0.05;  // 5th-percentile ingest point spacing, meters
  double mean = 0.08;
};

/// Spacing statistics from the first step's panorama depths.
SpacingEstimate estimate_spacing(const SceneSpec& scene);

struct IngestResult {
  PointCloudB points;
  FeatureCloudM features;
  double millis = 0.0;
};

/// Ray-casts every trajectory step and integrates both clouds.
IngestResult ingest_scene(const SceneSpec& scene, const EngineConfig& cfg);

/// Render bundle for a synthetic scene: identity rotations, near-opaque
/// alpha, a distance-adaptive footprint tracking the ingest spacing
/// (floored at the selection radius), and an opaque density head.
PipelineWeights default_render_weights(const EngineConfig& cfg, const SceneSpec& scene,
                                       double gauss_scale);

/// Scales the selection to the scene: peak-only selection (tau = 1)
/// with a radius near the densest ingest spacing.
void tune_selection(EngineConfig& cfg, const SceneSpec& scene);

struct BenchReport {
  size_t primitives = 0;
  size_t feature_entries = 0;
  int samples_per_ray = 0;
  int width = 0, height = 0;
  int warmup_runs = 0, measured_runs = 0;
  std::vector<double> splat_ms;
  std::vector<double> volume_ms;
  double splat_ms_median = 0.0;
  double volume_ms_median = 0.0;
  double speed_ratio = 0.0;

  std::string to_json() const;
};

/// Median per-frame wall time of the tile rasterizer vs the 256-sample
/// volume renderer at the same output resolution, on the given scene
/// with every ingested point promoted to a primitive.
BenchReport run_render_benchmark(const EngineConfig& cfg, const SceneSpec& scene);

}  // namespace npr
