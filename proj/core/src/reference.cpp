#include "npr/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace npr::reference {

std::vector<Neighbor> knn_bruteforce(std::span<const float> positions, const Vec3& query, int k,
                                     double radius) {
  std::vector<Neighbor> all;
  const int n = static_cast<int>(positions.size() / 3);
  const double r_sq = radius * radius;
  for (int i = 0; i < n; ++i) {
    const double dx = static_cast<double>(positions[3 * i]) - query.x();
    const double dy = static_cast<double>(positions[3 * i + 1]) - query.y();
    const double dz = static_cast<double>(positions[3 * i + 2]) - query.z();
    const double d_sq = dx * dx + dy * dy + dz * dz;
    if (d_sq > r_sq) continue;
    all.push_back({i, std::sqrt(d_sq)});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.index < b.index;
  });
  if (static_cast<int>(all.size()) > k) all.resize(k);
  return all;
}

namespace {

std::vector<int> select_pass_naive(const std::vector<float>& positions,
                                   const std::vector<int>& source, const SamplingConfig& cfg) {
  const int n = static_cast<int>(source.size());
  std::vector<float> subset(static_cast<size_t>(n) * 3);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) subset[3 * i + c] = positions[3 * source[i] + c];
  }

  // occupancy pre-filter, recomputed by scanning all cells
  const double eps_sq = cfg.epsilon * cfg.epsilon;
  std::vector<char> candidate(n, 0);
  for (int i = 0; i < n; ++i) {
    const Vec3 p(subset[3 * i], subset[3 * i + 1], subset[3 * i + 2]);
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      double d_sq = 0.0;
      for (int a = 0; a < 3; ++a) {
        const double cell = (std::floor(subset[3 * j + a] / cfg.epsilon) + 0.5) * cfg.epsilon;
        d_sq += (p[a] - cell) * (p[a] - cell);
      }
      best = std::min(best, d_sq);
    }
    candidate[i] = best < eps_sq ? 1 : 0;
  }

  std::vector<double> rho(n, 0.0);
  std::vector<std::vector<int>> nbrs(n);
  for (int i = 0; i < n; ++i) {
    if (!candidate[i]) continue;
    const Vec3 p(subset[3 * i], subset[3 * i + 1], subset[3 * i + 2]);
    std::vector<Neighbor> hits = knn_bruteforce(subset, p, cfg.k + 1, cfg.radius);
    double sum = 0.0;
    for (const Neighbor& h : hits) {
      if (h.index == i) continue;
      if (static_cast<int>(nbrs[i].size()) == cfg.k) break;
      nbrs[i].push_back(h.index);
      sum += h.distance;
    }
    rho[i] = nbrs[i].empty() ? std::numeric_limits<double>::infinity() : 1.0 / sum;
  }

  std::vector<double> sorted_rho;
  for (int i = 0; i < n; ++i) {
    if (candidate[i]) sorted_rho.push_back(rho[i]);
  }
  if (sorted_rho.empty()) return {};
  std::sort(sorted_rho.begin(), sorted_rho.end());
  const double threshold =
      sorted_rho[static_cast<size_t>(std::floor(cfg.tau * (sorted_rho.size() - 1.0)))];

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

std::vector<int> density_select_bruteforce(const PointCloudB& cloud, const SamplingConfig& cfg) {
  std::vector<int> current(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) current[i] = static_cast<int>(i);
  for (;;) {
    std::vector<int> next = select_pass_naive(cloud.positions, current, cfg);
    if (next.size() == current.size()) return current;
    current.swap(next);
  }
}

std::vector<double> mlp_naive(const MlpWeights& w, std::span<const double> x) {
  std::vector<double> cur(x.begin(), x.end());
  for (const MlpLayer& layer : w.layers) {
    std::vector<double> next(layer.out_dim, 0.0);
    for (int i = 0; i < layer.in_dim; ++i) {
      for (int j = 0; j < layer.out_dim; ++j) {
        next[j] += static_cast<double>(layer.weight[static_cast<size_t>(j) * layer.in_dim + i]) *
                   cur[i];
      }
    }
    for (int j = 0; j < layer.out_dim; ++j) {
      next[j] = apply_activation(layer.act, next[j] + layer.bias[j]);
    }
    cur = next;
  }
  return cur;
}

std::vector<double> attention_naive(const AttentionWeights& w, std::span<const double> queries,
                                    int n, std::span<const double> keys_values, int m) {
  const int d = w.dim;
  const int dh = d / w.heads;
  auto project = [&](const std::vector<float>& mat, std::span<const double> row) {
    std::vector<double> out(d, 0.0);
    for (int j = 0; j < d; ++j) {
      for (int i = 0; i < d; ++i) {
        out[j] += static_cast<double>(mat[static_cast<size_t>(j) * d + i]) * row[i];
      }
    }
    return out;
  };

  std::vector<double> result(static_cast<size_t>(n) * d, 0.0);
  for (int qi = 0; qi < n; ++qi) {
    const std::vector<double> q = project(w.wq, queries.subspan(static_cast<size_t>(qi) * d, d));
    std::vector<double> mixed(d, 0.0);
    for (int h = 0; h < w.heads; ++h) {
      std::vector<double> logits(m, 0.0);
      for (int kj = 0; kj < m; ++kj) {
        const std::vector<double> k =
            project(w.wk, keys_values.subspan(static_cast<size_t>(kj) * d, d));
        double dot = 0.0;
        for (int c = 0; c < dh; ++c) dot += q[h * dh + c] * k[h * dh + c];
        logits[kj] = dot / std::sqrt(static_cast<double>(dh));
      }
      const double mx = *std::max_element(logits.begin(), logits.end());
      double denom = 0.0;
      for (double& l : logits) {
        l = std::exp(l - mx);
        denom += l;
      }
      for (int kj = 0; kj < m; ++kj) {
        const std::vector<double> v =
            project(w.wv, keys_values.subspan(static_cast<size_t>(kj) * d, d));
        for (int c = 0; c < dh; ++c) mixed[h * dh + c] += logits[kj] / denom * v[h * dh + c];
      }
    }
    const std::vector<double> y = project(w.wo, mixed);
    std::copy(y.begin(), y.end(), result.begin() + static_cast<size_t>(qi) * d);
  }
  return result;
}

bool matrix_projection_oracle(const CameraIntrinsics& intr, const Pose& pose, const Vec3& p_world,
                              PixelCoord& pixel_out, double& depth_out) {
  // world-to-camera as an explicit homogeneous matrix
  const Mat3 r = quat_to_matrix(pose.rotation.w(), pose.rotation.x(), pose.rotation.y(),
                                pose.rotation.z());
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = r.transpose();
  m.block<3, 1>(0, 3) = -(r.transpose() * pose.translation);
  const Eigen::Vector4d cam = m * Eigen::Vector4d(p_world.x(), p_world.y(), p_world.z(), 1.0);
  if (cam.z() <= kDefaultNearPlane) return false;
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = intr.fx;
  k(1, 1) = intr.fy;
  k(0, 2) = intr.cx;
  k(1, 2) = intr.cy;
  const Vec3 uvw = k * Vec3(cam.x(), cam.y(), cam.z());
  pixel_out.w = uvw.x() / uvw.z();
  pixel_out.h = uvw.y() / uvw.z();
  depth_out = cam.z();
  return true;
}

std::vector<double> numeric_projection_jacobian(const CameraIntrinsics& intr, const Pose& pose,
                                                const Vec3& p_world, double h) {
  std::vector<double> jac(6, 0.0);  // 2x3 row-major: d(u,v)/d(x,y,z)
  for (int a = 0; a < 3; ++a) {
    Vec3 plus = p_world, minus = p_world;
    plus[a] += h;
    minus[a] -= h;
    const Projection pp = project_point(intr, pose, plus);
    const Projection pm = project_point(intr, pose, minus);
    jac[a] = (pp.pixel.w - pm.pixel.w) / (2.0 * h);
    jac[3 + a] = (pp.pixel.h - pm.pixel.h) / (2.0 * h);
  }
  return jac;
}

double nav_ce_naive(std::span<const double> scores, std::span<const double> target,
                    std::span<const char> mask) {
  double mx = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!mask.empty() && mask[i]) continue;
    mx = std::max(mx, scores[i]);
  }
  double z = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!mask.empty() && mask[i]) continue;
    z += std::exp(scores[i] - mx);
  }
  const double lse = mx + std::log(z);
  double loss = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!mask.empty() && mask[i]) continue;
    if (target[i] > 0.0) loss -= target[i] * (scores[i] - lse);
  }
  return loss;
}

std::vector<double> aggregate_naive(const Vec3& q, const FeatureCloudM& cloud,
                                    const std::vector<int>& neighbor_indices,
                                    const MlpWeights& phi1) {
  const int dim = cloud.dim;
  std::vector<double> out(dim, 0.0);
  if (neighbor_indices.empty()) return out;

  std::vector<double> w(neighbor_indices.size());
  double w_sum = 0.0;
  for (size_t k = 0; k < neighbor_indices.size(); ++k) {
    const float* hp = &cloud.positions[static_cast<size_t>(neighbor_indices[k]) * 3];
    const double d = (q - Vec3(hp[0], hp[1], hp[2])).norm();
    w[k] = 1.0 / std::max(d, 1e-8);
    w_sum += w[k];
  }
  std::vector<double> base(dim, 0.0);
  for (size_t k = 0; k < neighbor_indices.size(); ++k) {
    const float* f = &cloud.features[static_cast<size_t>(neighbor_indices[k]) * dim];
    for (int c = 0; c < dim; ++c) base[c] += w[k] / w_sum * f[c];
  }
  for (size_t k = 0; k < neighbor_indices.size(); ++k) {
    const int idx = neighbor_indices[k];
    const float* hp = &cloud.positions[static_cast<size_t>(idx) * 3];
    std::vector<double> in(base);
    in.push_back(q.x() - hp[0]);
    in.push_back(q.y() - hp[1]);
    in.push_back(q.z() - hp[2]);
    const std::vector<double> term = mlp_naive(phi1, in);
    for (int c = 0; c < dim; ++c) {
      out[c] += cloud.scales[idx] * (w[k] / w_sum) * term[c];
    }
  }
  return out;
}

}  // namespace npr::reference
