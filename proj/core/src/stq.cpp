#include "npr/stq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace npr {

void SamplingConfig::validate() const {
  if (k < 1) raise(Errc::invalid_spec, "k must be >= 1");
  if (!(radius > 0.0) || !(radius_hat > 0.0) || !(epsilon > 0.0)) {
    raise(Errc::invalid_spec, "radii and epsilon must be positive");
  }
  if (!(ray_far > ray_near)) raise(Errc::invalid_spec, "ray_far must exceed ray_near");
  if (samples_per_ray < 2) raise(Errc::invalid_spec, "need at least 2 samples per ray");
  if (tau < 0.0 || tau > 1.0) raise(Errc::invalid_spec, "tau must lie in [0, 1]");
}

OccupancyTree build_tree(std::span<const float> positions, const SamplingConfig& cfg) {
  return OccupancyTree::build(positions, cfg.leaf_size, cfg.epsilon);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One survivor pass over the subset identified by `source`; returns the
// surviving source indices in ascending order.
std::vector<int> selection_pass(const std::vector<float>& positions,
                                const std::vector<int>& source, const SamplingConfig& cfg) {
  const int n = static_cast<int>(source.size());
  std::vector<float> subset(static_cast<size_t>(n) * 3);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) subset[3 * i + c] = positions[3 * source[i] + c];
  }
  const OccupancyTree tree = build_tree(subset, cfg);

  const double eps_sq = cfg.epsilon * cfg.epsilon;
  std::vector<char> candidate(n, 0);
  std::vector<double> rho(n, 0.0);
  std::vector<std::vector<int>> nbrs(n);
  for (int i = 0; i < n; ++i) {
    const Vec3 p(subset[3 * i], subset[3 * i + 1], subset[3 * i + 2]);
    if (!(tree.occupancy_sqdist(p) < eps_sq)) continue;  // occupancy pre-filter
    candidate[i] = 1;
    // k+1 so the query point itself can be dropped
    const std::vector<Neighbor> hits = tree.knn(p, cfg.k + 1, cfg.radius);
    double sum = 0.0;
    for (const Neighbor& h : hits) {
      if (h.index == i) continue;
      if (static_cast<int>(nbrs[i].size()) == cfg.k) break;
      nbrs[i].push_back(h.index);
      sum += h.distance;
    }
    rho[i] = nbrs[i].empty() ? kInf : 1.0 / sum;
  }

  std::vector<double> sorted_rho;
  sorted_rho.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (candidate[i]) sorted_rho.push_back(rho[i]);
  }
  if (sorted_rho.empty()) return {};
  std::sort(sorted_rho.begin(), sorted_rho.end());
  const size_t q_idx = static_cast<size_t>(
      std::floor(cfg.tau * static_cast<double>(sorted_rho.size() - 1)));
  const double threshold = sorted_rho[q_idx];

  std::vector<int> survivors;
  for (int i = 0; i < n; ++i) {
    if (!candidate[i]) continue;
    bool peak = true;
    for (int j : nbrs[i]) {
      if (rho[i] > rho[j]) continue;
      if (rho[i] == rho[j] && source[i] < source[j]) continue;
      peak = false;
      break;
    }
    if (peak || rho[i] > threshold) survivors.push_back(source[i]);
  }
  return survivors;
}

}  // namespace

SelectedPoints density_peak_select(const PointCloudB& cloud, const SamplingConfig& cfg) {
  cfg.validate();
  if (cloud.size() == 0) raise(Errc::empty_cloud, "cannot select from an empty cloud");

  std::vector<int> current(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) current[i] = static_cast<int>(i);
  for (;;) {
    std::vector<int> next = selection_pass(cloud.positions, current, cfg);
    if (next.size() == current.size()) break;
    current.swap(next);
  }

  SelectedPoints out;
  out.source_indices = std::move(current);
  out.positions.reserve(out.source_indices.size() * 3);
  out.colors.reserve(out.source_indices.size() * 3);
  for (int idx : out.source_indices) {
    for (int c = 0; c < 3; ++c) {
      out.positions.push_back(cloud.positions[3 * idx + c]);
      out.colors.push_back(cloud.colors[3 * idx + c]);
    }
  }
  return out;
}

RaySamples sample_ray_points(const Ray& ray, const SamplingConfig& cfg) {
  cfg.validate();
  RaySamples s;
  const int n = cfg.samples_per_ray;
  s.delta = (cfg.ray_far - cfg.ray_near) / n;
  s.t.resize(n);
  s.positions.resize(n);
  for (int k = 0; k < n; ++k) {
    s.t[k] = cfg.ray_near + (k + 0.5) * s.delta;
    s.positions[k] = ray.origin + s.t[k] * ray.direction;
  }
  return s;
}

namespace {

// per-thread scratch for the ray-sampling hot loop
struct AggScratch {
  std::vector<Neighbor> hits;
  std::vector<double> w, base, in, term, mlp;
};

AggScratch& agg_scratch() {
  thread_local AggScratch s;
  return s;
}

}  // namespace

void aggregate_point_feature(const Vec3& q, const FeatureCloudM& cloud, const OccupancyTree& tree,
                             const SamplingConfig& cfg, const MlpWeights& phi1,
                             AggregatedFeature& out) {
  if (!phi1.loaded()) raise(Errc::weights_not_loaded, "phi1 not loaded");
  const int dim = cloud.dim;
  out.value.assign(dim, 0.0);
  out.weights.clear();
  out.neighbor_terms.clear();
  out.term_dim = phi1.out_dim();
  out.empty = true;

  AggScratch& s = agg_scratch();
  tree.knn(q, cfg.k, cfg.radius_hat, s.hits);
  if (s.hits.empty()) return;
  out.empty = false;

  const size_t n = s.hits.size();
  double w_sum = 0.0;
  s.w.resize(n);
  for (size_t k = 0; k < n; ++k) {
    s.w[k] = 1.0 / std::max(s.hits[k].distance, 1e-8);
    w_sum += s.w[k];
  }

  // base feature: inverse-distance-weighted mean of the neighbor features
  s.base.assign(dim, 0.0);
  for (size_t k = 0; k < n; ++k) {
    const float* f = &cloud.features[static_cast<size_t>(s.hits[k].index) * dim];
    const double wn = s.w[k] / w_sum;
    for (int c = 0; c < dim; ++c) s.base[c] += wn * f[c];
  }

  out.weights.resize(n);
  out.neighbor_terms.resize(n * out.term_dim);
  s.in.resize(dim + 3);
  for (size_t k = 0; k < n; ++k) {
    const int idx = s.hits[k].index;
    const float* hp = &cloud.positions[static_cast<size_t>(idx) * 3];
    std::copy(s.base.begin(), s.base.end(), s.in.begin());
    s.in[dim] = q.x() - hp[0];
    s.in[dim + 1] = q.y() - hp[1];
    s.in[dim + 2] = q.z() - hp[2];
    mlp_forward(phi1, s.in, s.term, s.mlp);
    std::copy(s.term.begin(), s.term.end(), out.neighbor_terms.begin() + k * out.term_dim);
    out.weights[k] = s.w[k] / w_sum;
    const double scale = cloud.scales[idx];
    for (int c = 0; c < dim; ++c) {
      out.value[c] += scale * out.weights[k] * s.term[c];
    }
  }
}

AggregatedFeature aggregate_point_feature(const Vec3& q, const FeatureCloudM& cloud,
                                          const OccupancyTree& tree, const SamplingConfig& cfg,
                                          const MlpWeights& phi1) {
  AggregatedFeature out;
  aggregate_point_feature(q, cloud, tree, cfg, phi1, out);
  return out;
}

void regress_radiance_density(const AggregatedFeature& agg, double view_yaw,
                              const MlpWeights& phi2, const MlpWeights& phi3,
                              RadianceDensity& out) {
  if (!phi2.loaded() || !phi3.loaded()) raise(Errc::weights_not_loaded, "phi2/phi3 not loaded");
  if (phi3.out_dim() != 1 || phi3.final_activation() != Activation::softplus) {
    raise(Errc::invalid_spec, "density head must end in a scalar softplus");
  }
  out.sigma = 0.0;
  if (agg.empty) {
    out.radiance.assign(phi2.out_dim(), 0.0);  // vacuum
    return;
  }

  AggScratch& s = agg_scratch();
  s.in.resize(agg.value.size() + 2);
  std::copy(agg.value.begin(), agg.value.end(), s.in.begin());
  s.in[agg.value.size()] = std::cos(view_yaw);
  s.in[agg.value.size() + 1] = std::sin(view_yaw);
  mlp_forward(phi2, s.in, out.radiance, s.mlp);

  double sigma = 0.0;
  for (size_t k = 0; k < agg.neighbor_count(); ++k) {
    mlp_forward(phi3, agg.term(k), s.term, s.mlp);
    sigma += s.term[0] * agg.weights[k];
  }
  out.sigma = sigma;
}

RadianceDensity regress_radiance_density(const AggregatedFeature& agg, double view_yaw,
                                         const MlpWeights& phi2, const MlpWeights& phi3) {
  RadianceDensity out;
  regress_radiance_density(agg, view_yaw, phi2, phi3, out);
  return out;
}

}  // namespace npr
