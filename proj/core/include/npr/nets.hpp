#pragma once

#include <functional>
#include <span>
#include <vector>

#include "npr/geometry.hpp"

namespace npr {

enum class Activation : int { none = 0, relu = 1, sigmoid = 2, softplus = 3, tanh = 4 };

double apply_activation(Activation act, double x);

struct MlpLayer {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<float> weight;  // out x in, row-major
  std::vector<float> bias;    // out
  Activation act = Activation::none;
};

struct MlpWeights {
  std::vector<MlpLayer> layers;

  bool loaded() const { return !layers.empty(); }
  int in_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  int out_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
  Activation final_activation() const {
    return layers.empty() ? Activation::none : layers.back().act;
  }
  void validate() const;
};

/// Affine + activation chain; accumulation in double.
std::vector<double> mlp_forward(const MlpWeights& w, std::span<const double> x);

/// Buffer-reusing variant for hot loops; `scratch` holds intermediate
/// layer activations between calls.
void mlp_forward(const MlpWeights& w, std::span<const double> x, std::vector<double>& out,
                 std::vector<double>& scratch);

/// Multi-head scaled-dot-product attention weights; no biases.
struct AttentionWeights {
  int dim = 0;
  int heads = 0;
  std::vector<float> wq, wk, wv, wo;  // dim x dim, row-major

  bool loaded() const { return dim > 0; }
  void validate() const;
};

/// queries: n x d, keys/values: m x d, both row-major. Returns n x d.
std::vector<double> cross_attention(const AttentionWeights& w, std::span<const double> queries,
                                    int n, std::span<const double> keys_values, int m);

/// Simplified multi-scale point descriptor network: a per-point stage at
/// full resolution plus two mean-pooled stages over uniform index
/// downsamples (every floor(1/r)-th point), fused by one more MLP.
struct DescriptorNetWeights {
  MlpWeights stage_full;     // 6 -> d0, per point
  MlpWeights stage_coarse1;  // 6 -> d1, pooled over the r1 downsample
  MlpWeights stage_coarse2;  // 6 -> d2, pooled over the r2 downsample
  MlpWeights fusion;         // d0+d1+d2 -> descriptor dim
  double rate1 = 0.5;
  double rate2 = 0.25;

  bool loaded() const { return stage_full.loaded(); }
  int descriptor_dim() const { return fusion.out_dim(); }
  void validate() const;
};

/// positions/colors: 3M floats each. Returns M x descriptor_dim row-major.
std::vector<double> point_descriptor(std::span<const float> positions,
                                     std::span<const float> colors,
                                     const DescriptorNetWeights& w);

/// The three property heads regressing a Gaussian from a descriptor.
struct GaussianHeads {
  MlpWeights rotation;  // -> 4
  MlpWeights scale;     // -> 3
  MlpWeights opacity;   // -> 1

  bool loaded() const {
    return rotation.loaded() && scale.loaded() && opacity.loaded();
  }
  void validate() const;
};

constexpr double kScaleClampMin = 1e-6;  // meters
constexpr double kScaleClampMax = 10.0;

struct HeadsOutput {
  Quat rotation{1.0, 0.0, 0.0, 0.0};
  Vec3 scales{1.0, 1.0, 1.0};
  double opacity = 0.5;
  bool degenerate_rotation = false;  // raw quaternion norm < 1e-12, identity used
};

/// rotation = normalize(H_r), scales = clamp(exp(H_s)), opacity = sigmoid(H_o).
HeadsOutput gaussian_heads(std::span<const double> descriptor, const GaussianHeads& heads);

/// Central-difference gradient of a scalar functional.
std::vector<double> finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                                         std::span<const double> x, double h = 1e-4);

/// Max relative error between the analytic gradient and central
/// differences; the caller decides what error is acceptable.
double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> x, std::span<const double> analytic_grad,
                         double h = 1e-4);

// Deterministic seeded factories used by tests and the shipped bundles.
MlpWeights make_random_mlp(std::uint64_t seed, const std::vector<int>& dims,
                           const std::vector<Activation>& acts);
AttentionWeights make_random_attention(std::uint64_t seed, int dim, int heads);
DescriptorNetWeights make_random_descriptor_net(std::uint64_t seed, int descriptor_dim);

/// Zero-weight MLP whose output is a constant bias vector.
MlpWeights make_bias_mlp(int in_dim, const std::vector<double>& bias,
                         Activation act = Activation::none);

}  // namespace npr
