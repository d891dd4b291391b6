#pragma once

#include <vector>

#include "npr/clouds.hpp"
#include "npr/nets.hpp"
#include "npr/occupancy_tree.hpp"

namespace npr {

struct SamplingConfig {
  int k = 16;                 // neighbors per query
  double radius = 1.0;        // R, selection/density neighborhood, meters
  double radius_hat = 1.0;    // R-hat, ray-sample aggregation neighborhood
  double epsilon = 0.1;       // occupancy pre-filter threshold, meters
  double ray_near = 0.0;
  double ray_far = 10.0;
  int samples_per_ray = 256;
  double tau = 0.5;           // density quantile for the selection filter
  int leaf_size = 16;

  void validate() const;
};

struct SelectedPoints {
  std::vector<float> positions;     // 3M
  std::vector<float> colors;        // 3M
  std::vector<int> source_indices;  // M, ascending, unique

  size_t size() const { return source_indices.size(); }
};

/// Convenience wrapper applying the config's tree parameters.
OccupancyTree build_tree(std::span<const float> positions, const SamplingConfig& cfg);

/// Keeps density peaks and the dense upper quantile of the cloud.
/// For each point, rho = 1 / sum of distances to its <= k neighbors
/// within R (empty neighborhood -> +inf). A point survives a pass when
/// rho is a strict-or-tie-by-lower-index maximum over its neighbor set,
/// or when rho strictly exceeds the tau quantile of all rho values. The
/// pass is applied repeatedly until the survivor set stops changing, so
/// selecting from a selected set returns it unchanged.
SelectedPoints density_peak_select(const PointCloudB& cloud, const SamplingConfig& cfg);

struct RaySamples {
  std::vector<Vec3> positions;  // segment midpoints
  std::vector<double> t;        // distance along the ray
  double delta = 0.0;           // uniform segment length
};

/// Uniform midpoint samples of [near, far]: t_k = near + (k+0.5)*delta.
RaySamples sample_ray_points(const Ray& ray, const SamplingConfig& cfg);

/// Feature aggregated around one sample point, plus the per-neighbor
/// terms the density head consumes (flattened count x term_dim).
struct AggregatedFeature {
  std::vector<double> value;           // f'_q
  std::vector<double> neighbor_terms;  // phi1 outputs, one row per neighbor
  int term_dim = 0;
  std::vector<double> weights;         // normalized inverse-distance weights
  bool empty = true;

  size_t neighbor_count() const { return weights.size(); }
  std::span<const double> term(size_t k) const {
    return {neighbor_terms.data() + k * term_dim, static_cast<size_t>(term_dim)};
  }
};

/// Inverse-distance aggregation over the K nearest feature points within
/// radius R-hat: each neighbor contributes phi1(base, q - h_k) scaled by
/// s_k * w_k / sum(w), w_k = 1 / max(dist, 1e-8). The base feature is
/// the inverse-distance-weighted mean of the neighbor features. An empty
/// neighborhood yields a zero vector flagged empty.
AggregatedFeature aggregate_point_feature(const Vec3& q, const FeatureCloudM& cloud,
                                          const OccupancyTree& tree, const SamplingConfig& cfg,
                                          const MlpWeights& phi1);

/// Buffer-reusing variant for per-ray loops.
void aggregate_point_feature(const Vec3& q, const FeatureCloudM& cloud, const OccupancyTree& tree,
                             const SamplingConfig& cfg, const MlpWeights& phi1,
                             AggregatedFeature& out);

struct RadianceDensity {
  std::vector<double> radiance;
  double sigma = 0.0;
};

/// radiance = phi2(f'_q, cos/sin of the view yaw); sigma is the
/// weight-normalized sum of the softplus density head over the
/// per-neighbor terms. Empty neighborhoods regress to zeros.
RadianceDensity regress_radiance_density(const AggregatedFeature& agg, double view_yaw,
                                         const MlpWeights& phi2, const MlpWeights& phi3);

/// Buffer-reusing variant for per-ray loops.
void regress_radiance_density(const AggregatedFeature& agg, double view_yaw,
                              const MlpWeights& phi2, const MlpWeights& phi3,
                              RadianceDensity& out);

}  // namespace npr
