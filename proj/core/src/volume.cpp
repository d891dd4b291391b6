#include "npr/volume.hpp"

#include <cmath>

#include "npr/parallel.hpp"

namespace npr {

void VolumeNets::validate() const {
  if (!phi1.loaded() || !phi2.loaded() || !phi3.loaded()) {
    raise(Errc::weights_not_loaded, "volume nets not loaded");
  }
}

std::vector<double> render_feature_ray(const Ray& ray, const FeatureCloudM& cloud,
                                       const OccupancyTree& tree, const SamplingConfig& cfg,
                                       const VolumeNets& nets) {
  nets.validate();
  const RaySamples samples = sample_ray_points(ray, cfg);
  const double view_yaw = std::atan2(ray.direction.x(), ray.direction.z());

  std::vector<double> out(nets.phi2.out_dim(), 0.0);
  double transmittance = 1.0;
  AggregatedFeature agg;
  RadianceDensity rd;
  for (size_t k = 0; k < samples.positions.size(); ++k) {
    aggregate_point_feature(samples.positions[k], cloud, tree, cfg, nets.phi1, agg);
    if (agg.empty) continue;  // sigma = 0, nothing to composite
    regress_radiance_density(agg, view_yaw, nets.phi2, nets.phi3, rd);
    if (rd.sigma <= 0.0) continue;
    const double absorb = std::exp(-rd.sigma * samples.delta);
    const double weight = transmittance * (1.0 - absorb);
    for (size_t c = 0; c < out.size(); ++c) out[c] += weight * rd.radiance[c];
    transmittance *= absorb;
    if (transmittance < 1e-30) break;  // fully opaque, tail is numerically zero
  }
  return out;
}

Image render_feature_view(const Pose& pose, const CameraIntrinsics& grid_intr,
                          const FeatureCloudM& cloud, const SamplingConfig& cfg,
                          const VolumeNets& nets, int threads) {
  nets.validate();
  cfg.validate();
  Image map(grid_intr.height, grid_intr.width, nets.phi2.out_dim());
  if (cloud.size() == 0) return map;
  const OccupancyTree tree = build_tree(cloud.positions, cfg);
  parallel_for(static_cast<std::int64_t>(grid_intr.height) * grid_intr.width, [&](std::int64_t i) {
    const int h = static_cast<int>(i) / grid_intr.width;
    const int w = static_cast<int>(i) % grid_intr.width;
    const Ray ray = pixel_ray(grid_intr, pose, {h + 0.5, w + 0.5});
    const std::vector<double> f = render_feature_ray(ray, cloud, tree, cfg, nets);
    for (size_t c = 0; c < f.size(); ++c) map.at(h, w, static_cast<int>(c)) =
        static_cast<float>(f[c]);
  }, threads);
  return map;
}

FeaturePanorama render_panorama(const Vec3& position, const CameraIntrinsics& grid_intr,
                                const FeatureCloudM& cloud, const SamplingConfig& cfg,
                                const VolumeNets& nets, int threads) {
  FeaturePanorama pano;
  pano.views.reserve(kPanoramaViews);
  for (int v = 0; v < kPanoramaViews; ++v) {
    const double yaw = wrap_angle(v * kPanoramaStepRad);
    pano.yaws.push_back(yaw);
    pano.views.push_back(render_feature_view(Pose::from_position_yaw(position, yaw), grid_intr,
                                             cloud, cfg, nets, threads));
  }
  return pano;
}

}  // namespace npr
