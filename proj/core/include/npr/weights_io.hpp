#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "npr/nets.hpp"

namespace npr {

struct NamedTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

/// Ordered so that files serialize deterministically.
using TensorMap = std::map<std::string, NamedTensor>;

// TNW1 weight file, little-endian: magic "TNW1", u32 version, u32 tensor
// count, then per tensor: u8 name-len + name, u32 rank, u32 dims[],
// f32 data row-major.
void save_tensors(const std::string& path, const TensorMap& tensors);
TensorMap load_tensors(const std::string& path);

/// Every learned piece of the pipeline in one loadable bundle.
struct PipelineWeights {
  int feature_dim = 0;     // feature cloud channel count
  int embed_dim = 0;       // view embedding dimension
  int patch = 16;          // encoder patch edge for image-resolution inputs

  MlpWeights phi1;         // (D+3) -> D, neighbor local content
  MlpWeights phi2;         // (D+2) -> D, radiance from feature + (cos,sin) direction
  MlpWeights phi3;         // D -> 1, density head, softplus tail
  DescriptorNetWeights descriptor;
  GaussianHeads heads;
  MlpWeights encoder_image;    // patch*patch*3 -> embed
  MlpWeights encoder_feature;  // patch*patch*Dp -> embed
  MlpWeights encoder_nerf;     // D -> embed
  AttentionWeights fuse;
  MlpWeights ffn;              // embed -> 1

  void validate() const;
};

TensorMap pack_pipeline(const PipelineWeights& w);
PipelineWeights unpack_pipeline(const TensorMap& tensors);

void save_pipeline(const std::string& path, const PipelineWeights& w);
PipelineWeights load_pipeline(const std::string& path);

/// Seeded random bundle exercising every numerical contract.
PipelineWeights make_test_weights(std::uint64_t seed, int feature_dim, int descriptor_dim,
                                  int embed_dim, int patch = 16);

/// Bundle whose property heads emit constant, render-friendly Gaussians:
/// identity rotation, a fixed metric scale and near-opaque alpha.
PipelineWeights make_render_weights(std::uint64_t seed, int feature_dim, int descriptor_dim,
                                    int embed_dim, double gaussian_scale, double opacity,
                                    int patch = 16);

/// Footprint model for distance-adaptive render weights:
/// scale(p) = exp(log_base + per_meter * min(|p - center|_1, cap)).
struct DistanceScaleModel {
  Vec3 center{0, 0, 0};
  double log_base = -3.0;
  double per_meter = 0.5;
  double cap = 4.0;  // meters of L1 distance

  /// Fits the exponential through scale(d0) = s0 and scale(d1) = s1,
  /// saturating at distance `cap`.
  static DistanceScaleModel fit(const Vec3& center, double d0, double s0, double d1, double s1,
                                double cap);
};

/// Like make_render_weights, but the scale head grows the footprint with
/// the point's L1 distance from a reference center, approximating a
/// footprint proportional to the ingest point spacing. The descriptor
/// net's full-resolution stage exposes the relu pair of each axis offset
/// so a linear head can read the distance.
PipelineWeights make_adaptive_render_weights(std::uint64_t seed, int feature_dim,
                                             int descriptor_dim, int embed_dim,
                                             const DistanceScaleModel& scale_model,
                                             double opacity, int patch = 16);

}  // namespace npr
