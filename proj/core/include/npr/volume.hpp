#pragma once

#include <vector>

#include "npr/image.hpp"
#include "npr/stq.hpp"
#include "npr/weights_io.hpp"

namespace npr {

/// The three MLPs the NeRF branch consumes.
struct VolumeNets {
  MlpWeights phi1;  // neighbor local content
  MlpWeights phi2;  // radiance
  MlpWeights phi3;  // density, softplus tail

  void validate() const;
};

inline VolumeNets volume_nets(const PipelineWeights& w) {
  return VolumeNets{w.phi1, w.phi2, w.phi3};
}

/// Marches the ray with uniform midpoint samples and composites
/// (radiance, density) by piecewise-constant transmittance quadrature:
/// T_k = exp(-sum_{j<k} sigma_j delta), w_k = T_k (1 - exp(-sigma_k delta)).
std::vector<double> render_feature_ray(const Ray& ray, const FeatureCloudM& cloud,
                                       const OccupancyTree& tree, const SamplingConfig& cfg,
                                       const VolumeNets& nets);

/// One ray per feature-grid cell center at the grid resolution carried
/// by `grid_intr`. An empty cloud renders to zeros.
Image render_feature_view(const Pose& pose, const CameraIntrinsics& grid_intr,
                          const FeatureCloudM& cloud, const SamplingConfig& cfg,
                          const VolumeNets& nets, int threads = 0);

struct FeaturePanorama {
  std::vector<Image> views;  // 12 maps, H' x W' x D
  std::vector<double> yaws;  // 0, 30, ..., 330 degrees in radians
};

/// 12 feature views sharing one position, yaw k * 30 degrees.
FeaturePanorama render_panorama(const Vec3& position, const CameraIntrinsics& grid_intr,
                                const FeatureCloudM& cloud, const SamplingConfig& cfg,
                                const VolumeNets& nets, int threads = 0);

}  // namespace npr
