#include "npr/raster.hpp"

#include <algorithm>
#include <cmath>

#include "npr/parallel.hpp"

namespace npr {

std::vector<ProjectedGaussian> project_gaussians(const GaussianSet& set, const Pose& pose,
                                                 const CameraIntrinsics& intr,
                                                 const RasterOptions& opt,
                                                 int* skipped_singular) {
  std::vector<ProjectedGaussian> out;
  out.reserve(set.size());
  int singular = 0;
  const Mat3 w_rot = pose.rotation.conjugate().toRotationMatrix();
  const double margin_u = opt.frustum_margin * intr.width;
  const double margin_v = opt.frustum_margin * intr.height;
  for (size_t i = 0; i < set.size(); ++i) {
    const Vec3 mean(set.positions[3 * i], set.positions[3 * i + 1], set.positions[3 * i + 2]);
    const Vec3 p_cam = w_rot * (mean - pose.translation);
    if (p_cam.z() <= std::max(opt.near, kDefaultNearPlane)) continue;
    const double u = intr.fx * p_cam.x() / p_cam.z() + intr.cx;
    const double v = intr.fy * p_cam.y() / p_cam.z() + intr.cy;
    if (u < -margin_u || u > intr.width + margin_u || v < -margin_v ||
        v > intr.height + margin_v) {
      continue;
    }

    const Quat q(set.rotations[4 * i], set.rotations[4 * i + 1], set.rotations[4 * i + 2],
                 set.rotations[4 * i + 3]);
    const Vec3 s(set.scales[3 * i], set.scales[3 * i + 1], set.scales[3 * i + 2]);
    const Eigen::Matrix2d cov = project_covariance(covariance3d(q, s), pose, intr, mean,
                                                   opt.dilation);
    const double a = cov(0, 0), b = cov(0, 1), c = cov(1, 1);
    const double det = a * c - b * b;
    // eigenvalues of the symmetric 2x2
    const double half_tr = 0.5 * (a + c);
    const double disc = std::sqrt(std::max(half_tr * half_tr - det, 0.0));
    const double lmin = half_tr - disc;
    const double lmax = half_tr + disc;
    if (!(det > 0.0) || !(lmin > 0.0) || lmax / lmin > kMaxConditionNumber) {
      ++singular;
      continue;
    }

    ProjectedGaussian g;
    g.index = static_cast<int>(i);
    g.depth = p_cam.z();
    g.u = u;
    g.v = v;
    g.inv_a = c / det;
    g.inv_b = -b / det;
    g.inv_c = a / det;
    g.alpha = set.opacities[i];
    if (opt.alpha_cull) {
      if (g.alpha < kAlphaCullThreshold) continue;  // can never pass the per-pixel cull
      // footprint covering every pixel where alpha' can reach 1/255:
      // mahalanobis <= 2 ln(alpha * 255), bounded per axis by the
      // marginal variance
      const double maha_max = 2.0 * std::log(g.alpha * 255.0);
      g.bound_u = std::sqrt(maha_max * a);
      g.bound_v = std::sqrt(maha_max * c);
    }
    out.push_back(g);
  }
  std::sort(out.begin(), out.end(), [](const ProjectedGaussian& x, const ProjectedGaussian& y) {
    if (x.depth != y.depth) return x.depth < y.depth;
    return x.index < y.index;
  });
  if (skipped_singular) *skipped_singular = singular;
  return out;
}

namespace {

struct PixelState {
  double t = 1.0;
  double depth = 0.0;
};

// Blends one primitive into one pixel; returns false once the pixel is
// saturated and early_stop applies.
inline bool blend_pixel(const ProjectedGaussian& g, const GaussianSet& set,
                        const RasterOptions& opt, double px, double py, double* acc,
                        PixelState& st) {
  const double du = px - g.u;
  const double dv = py - g.v;
  const double maha = g.inv_a * du * du + 2.0 * g.inv_b * du * dv + g.inv_c * dv * dv;
  const double eff = g.alpha * std::exp(-0.5 * maha);
  if (opt.alpha_cull && eff < kAlphaCullThreshold) return true;
  const double w = st.t * eff;
  const float* payload = &set.payload[static_cast<size_t>(g.index) * set.payload_dim];
  for (int c = 0; c < set.payload_dim; ++c) acc[c] += w * payload[c];
  st.depth += w * g.depth;
  st.t *= 1.0 - eff;
  if (opt.early_stop && st.t < kEarlyStopTransmittance) return false;
  return true;
}

RenderedView make_view(const CameraIntrinsics& intr, int payload_dim) {
  RenderedView view;
  view.pixels = Image(intr.height, intr.width, payload_dim);
  view.alpha = Image(intr.height, intr.width, 1);
  view.depth_hint = Image(intr.height, intr.width, 1);
  return view;
}

void finalize_pixel(RenderedView& view, int h, int w, const double* acc, const PixelState& st,
                    std::span<const float> background, int payload_dim) {
  for (int c = 0; c < payload_dim; ++c) {
    view.pixels.at(h, w, c) = static_cast<float>(acc[c] + st.t * background[c]);
  }
  view.alpha.at(h, w) = static_cast<float>(1.0 - st.t);
  view.depth_hint.at(h, w) = static_cast<float>(st.depth);
}

}  // namespace

RenderedView rasterize(const GaussianSet& set, const Pose& pose, const CameraIntrinsics& intr,
                       std::span<const float> background, const RasterOptions& opt) {
  if (static_cast<int>(background.size()) != set.payload_dim && set.size() > 0) {
    raise(Errc::dim_mismatch, "background dim must match payload dim");
  }
  const int payload_dim = set.payload_dim > 0 ? set.payload_dim
                                              : static_cast<int>(background.size());
  RenderedView view = make_view(intr, payload_dim);
  int singular = 0;
  const std::vector<ProjectedGaussian> prims = project_gaussians(set, pose, intr, opt, &singular);
  view.skipped_singular = singular;

  const int tile = std::max(1, opt.tile);
  const int tiles_x = (intr.width + tile - 1) / tile;
  const int tiles_y = (intr.height + tile - 1) / tile;

  // Bin primitives to tiles, preserving the global sort order inside
  // each bin. Without the alpha cull every primitive reaches every
  // pixel, so it goes to every tile.
  std::vector<std::vector<int>> bins(static_cast<size_t>(tiles_x) * tiles_y);
  for (size_t p = 0; p < prims.size(); ++p) {
    const ProjectedGaussian& g = prims[p];
    int tx0 = 0, tx1 = tiles_x - 1, ty0 = 0, ty1 = tiles_y - 1;
    if (opt.alpha_cull) {
      tx0 = std::clamp(static_cast<int>(std::floor((g.u - g.bound_u) / tile)), 0, tiles_x - 1);
      tx1 = std::clamp(static_cast<int>(std::floor((g.u + g.bound_u) / tile)), 0, tiles_x - 1);
      ty0 = std::clamp(static_cast<int>(std::floor((g.v - g.bound_v) / tile)), 0, tiles_y - 1);
      ty1 = std::clamp(static_cast<int>(std::floor((g.v + g.bound_v) / tile)), 0, tiles_y - 1);
      if (g.u + g.bound_u < 0.0 || g.u - g.bound_u > intr.width || g.v + g.bound_v < 0.0 ||
          g.v - g.bound_v > intr.height) {
        continue;
      }
    }
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) {
        bins[static_cast<size_t>(ty) * tiles_x + tx].push_back(static_cast<int>(p));
      }
    }
  }

  parallel_for(static_cast<std::int64_t>(bins.size()), [&](std::int64_t bin_idx) {
    const int ty = static_cast<int>(bin_idx) / tiles_x;
    const int tx = static_cast<int>(bin_idx) % tiles_x;
    const int h0 = ty * tile, h1 = std::min(intr.height, h0 + tile);
    const int w0 = tx * tile, w1 = std::min(intr.width, w0 + tile);
    const std::vector<int>& bin = bins[bin_idx];
    std::vector<double> acc(payload_dim);
    for (int h = h0; h < h1; ++h) {
      for (int w = w0; w < w1; ++w) {
        std::fill(acc.begin(), acc.end(), 0.0);
        PixelState st;
        const double px = w + 0.5, py = h + 0.5;
        for (int p : bin) {
          if (!blend_pixel(prims[p], set, opt, px, py, acc.data(), st)) break;
        }
        finalize_pixel(view, h, w, acc.data(), st, background, payload_dim);
      }
    }
  }, opt.threads);

  return view;
}

RenderedView naive_rasterize(const GaussianSet& set, const Pose& pose,
                             const CameraIntrinsics& intr, std::span<const float> background,
                             const RasterOptions& opt) {
  if (static_cast<int>(background.size()) != set.payload_dim && set.size() > 0) {
    raise(Errc::dim_mismatch, "background dim must match payload dim");
  }
  const int payload_dim = set.payload_dim > 0 ? set.payload_dim
                                              : static_cast<int>(background.size());
  RenderedView view = make_view(intr, payload_dim);
  int singular = 0;
  const std::vector<ProjectedGaussian> prims = project_gaussians(set, pose, intr, opt, &singular);
  view.skipped_singular = singular;

  std::vector<double> acc(payload_dim);
  for (int h = 0; h < intr.height; ++h) {
    for (int w = 0; w < intr.width; ++w) {
      std::fill(acc.begin(), acc.end(), 0.0);
      PixelState st;
      const double px = w + 0.5, py = h + 0.5;
      for (const ProjectedGaussian& g : prims) {
        if (!blend_pixel(g, set, opt, px, py, acc.data(), st)) break;
      }
      finalize_pixel(view, h, w, acc.data(), st, background, payload_dim);
    }
  }
  return view;
}

}  // namespace npr
