#pragma once

#include <span>
#include <vector>

#include "npr/gaussians.hpp"
#include "npr/image.hpp"

namespace npr {

struct RasterOptions {
  int tile = 16;
  double dilation = 0.3;    // px^2 added to the screen covariance diagonal
  bool alpha_cull = true;   // skip contributions below 1/255
  bool early_stop = true;   // stop a pixel once T < 1e-4
  double near = 0.2;        // meters; the affine projection degenerates below this
  double frustum_margin = 0.3;  // keep centers within the image grown by this fraction
  int threads = 0;          // <= 0 means hardware concurrency

  /// No dilation, no culling, no early stop: the rasterizers evaluate
  /// the full blend sum over every primitive at every pixel.
  static RasterOptions exact_oracle() {
    RasterOptions o;
    o.dilation = 0.0;
    o.alpha_cull = false;
    o.early_stop = false;
    return o;
  }
};

constexpr double kAlphaCullThreshold = 1.0 / 255.0;
constexpr double kEarlyStopTransmittance = 1e-4;
constexpr double kMaxConditionNumber = 1e12;

struct RenderedView {
  Image pixels;      // H x W x payload_dim, blend + T * background
  Image alpha;       // H x W, accumulated opacity 1 - T
  Image depth_hint;  // H x W, blend-weighted depth (diagnostic)
  int skipped_singular = 0;
};

/// Screen-space primitive shared by both rasterizers and exposed so
/// tests can replay the per-pixel blend.
struct ProjectedGaussian {
  int index = -1;
  double depth = 0.0;
  double u = 0.0, v = 0.0;               // projected mean, pixel coords
  double inv_a = 0.0, inv_b = 0.0, inv_c = 0.0;  // inverse 2x2 covariance
  double bound_u = 0.0, bound_v = 0.0;   // conservative per-axis footprint
  double alpha = 0.0;
};

/// Projects, drops behind-camera and numerically singular primitives,
/// and sorts by ascending (depth, index).
std::vector<ProjectedGaussian> project_gaussians(const GaussianSet& set, const Pose& pose,
                                                 const CameraIntrinsics& intr,
                                                 const RasterOptions& opt,
                                                 int* skipped_singular = nullptr);

/// Tile-based front-to-back alpha blending. Primitives are binned to the
/// tiles their footprint can reach; the per-pixel blend order is the
/// global depth sort, so output is independent of tile scheduling and
/// thread count, and matches naive_rasterize bit for bit under equal
/// options.
RenderedView rasterize(const GaussianSet& set, const Pose& pose, const CameraIntrinsics& intr,
                       std::span<const float> background, const RasterOptions& opt = {});

/// Reference rasterizer: every primitive visits every pixel in the same
/// global order, no tiling. Intended for small primitive counts.
RenderedView naive_rasterize(const GaussianSet& set, const Pose& pose,
                             const CameraIntrinsics& intr, std::span<const float> background,
                             const RasterOptions& opt = {});

}  // namespace npr
