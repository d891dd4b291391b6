#include "npr/nets.hpp"

#include <cmath>
#include <random>

namespace npr {

double apply_activation(Activation act, double x) {
  switch (act) {
    case Activation::none: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::softplus:
      // overflow-safe log(1 + e^x)
      return x > 30.0 ? x : std::log1p(std::exp(x));
    case Activation::tanh: return std::tanh(x);
  }
  return x;
}

void MlpWeights::validate() const {
  if (layers.empty()) raise(Errc::weights_not_loaded, "MLP has no layers");
  for (size_t l = 0; l < layers.size(); ++l) {
    const MlpLayer& layer = layers[l];
    if (layer.weight.size() != static_cast<size_t>(layer.in_dim) * layer.out_dim ||
        layer.bias.size() != static_cast<size_t>(layer.out_dim)) {
      raise(Errc::dim_mismatch, "layer tensor sizes disagree with dims");
    }
    if (l > 0 && layers[l - 1].out_dim != layer.in_dim) {
      raise(Errc::dim_mismatch, "adjacent layer dims do not chain");
    }
    for (float v : layer.weight) {
      if (!std::isfinite(v)) raise(Errc::invalid_spec, "non-finite weight");
    }
    for (float v : layer.bias) {
      if (!std::isfinite(v)) raise(Errc::invalid_spec, "non-finite bias");
    }
  }
}

std::vector<double> mlp_forward(const MlpWeights& w, std::span<const double> x) {
  std::vector<double> out, scratch;
  mlp_forward(w, x, out, scratch);
  return out;
}

void mlp_forward(const MlpWeights& w, std::span<const double> x, std::vector<double>& out,
                 std::vector<double>& scratch) {
  if (!w.loaded()) raise(Errc::weights_not_loaded, "mlp_forward on empty weights");
  if (static_cast<int>(x.size()) != w.in_dim()) {
    raise(Errc::dim_mismatch, "input size does not match first layer");
  }
  out.assign(x.begin(), x.end());
  for (const MlpLayer& layer : w.layers) {
    scratch.resize(layer.out_dim);
    for (int j = 0; j < layer.out_dim; ++j) {
      double acc = layer.bias[j];
      const float* row = &layer.weight[static_cast<size_t>(j) * layer.in_dim];
      for (int i = 0; i < layer.in_dim; ++i) acc += static_cast<double>(row[i]) * out[i];
      scratch[j] = apply_activation(layer.act, acc);
    }
    out.swap(scratch);
  }
}

void AttentionWeights::validate() const {
  if (dim <= 0) raise(Errc::weights_not_loaded, "attention weights not loaded");
  if (heads <= 0 || dim % heads != 0) raise(Errc::dim_mismatch, "dim must divide by heads");
  const size_t n = static_cast<size_t>(dim) * dim;
  if (wq.size() != n || wk.size() != n || wv.size() != n || wo.size() != n) {
    raise(Errc::dim_mismatch, "projection matrices must be dim x dim");
  }
}

namespace {

// y = W x for a dim x dim row-major matrix
void matvec(const std::vector<float>& w, int dim, const double* x, double* y) {
  for (int j = 0; j < dim; ++j) {
    double acc = 0.0;
    const float* row = &w[static_cast<size_t>(j) * dim];
    for (int i = 0; i < dim; ++i) acc += static_cast<double>(row[i]) * x[i];
    y[j] = acc;
  }
}

}  // namespace

std::vector<double> cross_attention(const AttentionWeights& w, std::span<const double> queries,
                                    int n, std::span<const double> keys_values, int m) {
  w.validate();
  const int d = w.dim;
  if (queries.size() != static_cast<size_t>(n) * d ||
      keys_values.size() != static_cast<size_t>(m) * d) {
    raise(Errc::dim_mismatch, "token matrices must be count x dim");
  }
  const int dh = d / w.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  std::vector<double> k_proj(static_cast<size_t>(m) * d);
  std::vector<double> v_proj(static_cast<size_t>(m) * d);
  for (int j = 0; j < m; ++j) {
    matvec(w.wk, d, &keys_values[static_cast<size_t>(j) * d], &k_proj[static_cast<size_t>(j) * d]);
    matvec(w.wv, d, &keys_values[static_cast<size_t>(j) * d], &v_proj[static_cast<size_t>(j) * d]);
  }

  std::vector<double> out(static_cast<size_t>(n) * d);
  std::vector<double> q_proj(d), mixed(d), scores(m);
  for (int i = 0; i < n; ++i) {
    matvec(w.wq, d, &queries[static_cast<size_t>(i) * d], q_proj.data());
    std::fill(mixed.begin(), mixed.end(), 0.0);
    for (int h = 0; h < w.heads; ++h) {
      const int off = h * dh;
      double max_score = -1e300;
      for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int c = 0; c < dh; ++c) {
          s += q_proj[off + c] * k_proj[static_cast<size_t>(j) * d + off + c];
        }
        scores[j] = s * scale;
        max_score = std::max(max_score, scores[j]);
      }
      double denom = 0.0;
      for (int j = 0; j < m; ++j) {
        scores[j] = std::exp(scores[j] - max_score);
        denom += scores[j];
      }
      for (int j = 0; j < m; ++j) {
        const double a = scores[j] / denom;
        for (int c = 0; c < dh; ++c) {
          mixed[off + c] += a * v_proj[static_cast<size_t>(j) * d + off + c];
        }
      }
    }
    matvec(w.wo, d, mixed.data(), &out[static_cast<size_t>(i) * d]);
  }
  return out;
}

void DescriptorNetWeights::validate() const {
  if (!loaded()) raise(Errc::weights_not_loaded, "descriptor net not loaded");
  stage_full.validate();
  stage_coarse1.validate();
  stage_coarse2.validate();
  fusion.validate();
  if (!(rate1 > rate2) || !(rate2 > 0.0)) {
    raise(Errc::invalid_spec, "sampling rates must satisfy r1 > r2 > 0");
  }
  if (fusion.in_dim() !=
      stage_full.out_dim() + stage_coarse1.out_dim() + stage_coarse2.out_dim()) {
    raise(Errc::dim_mismatch, "fusion input must match concatenated stage outputs");
  }
}

namespace {

std::vector<double> pooled_stage(const MlpWeights& stage, std::span<const float> positions,
                                 std::span<const float> colors, int stride) {
  std::vector<double> pooled(stage.out_dim(), 0.0);
  std::vector<double> in(6);
  int count = 0;
  const int n = static_cast<int>(positions.size() / 3);
  for (int i = 0; i < n; i += stride) {
    for (int c = 0; c < 3; ++c) {
      in[c] = positions[3 * i + c];
      in[3 + c] = colors[3 * i + c];
    }
    const std::vector<double> y = mlp_forward(stage, in);
    for (size_t c = 0; c < y.size(); ++c) pooled[c] += y[c];
    ++count;
  }
  for (double& v : pooled) v /= count;
  return pooled;
}

}  // namespace

std::vector<double> point_descriptor(std::span<const float> positions,
                                     std::span<const float> colors,
                                     const DescriptorNetWeights& w) {
  w.validate();
  if (positions.size() != colors.size() || positions.size() % 3 != 0) {
    raise(Errc::dimension_mismatch, "positions/colors must be matching 3M arrays");
  }
  const int n = static_cast<int>(positions.size() / 3);
  if (n < 1) raise(Errc::empty_cloud, "descriptor needs at least one point");

  const int stride1 = std::max(1, static_cast<int>(std::floor(1.0 / w.rate1)));
  const int stride2 = std::max(1, static_cast<int>(std::floor(1.0 / w.rate2)));
  const std::vector<double> pool1 = pooled_stage(w.stage_coarse1, positions, colors, stride1);
  const std::vector<double> pool2 = pooled_stage(w.stage_coarse2, positions, colors, stride2);

  const int d_full = w.stage_full.out_dim();
  const int d_out = w.descriptor_dim();
  std::vector<double> out(static_cast<size_t>(n) * d_out);
  std::vector<double> in(6);
  std::vector<double> fused_in(d_full + pool1.size() + pool2.size());
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      in[c] = positions[3 * i + c];
      in[3 + c] = colors[3 * i + c];
    }
    const std::vector<double> full = mlp_forward(w.stage_full, in);
    std::copy(full.begin(), full.end(), fused_in.begin());
    std::copy(pool1.begin(), pool1.end(), fused_in.begin() + d_full);
    std::copy(pool2.begin(), pool2.end(), fused_in.begin() + d_full + pool1.size());
    const std::vector<double> y = mlp_forward(w.fusion, fused_in);
    std::copy(y.begin(), y.end(), out.begin() + static_cast<size_t>(i) * d_out);
  }
  return out;
}

void GaussianHeads::validate() const {
  if (!loaded()) raise(Errc::weights_not_loaded, "gaussian heads not loaded");
  if (rotation.out_dim() != 4 || scale.out_dim() != 3 || opacity.out_dim() != 1) {
    raise(Errc::dim_mismatch, "head output dims must be 4, 3, 1");
  }
}

HeadsOutput gaussian_heads(std::span<const double> descriptor, const GaussianHeads& heads) {
  heads.validate();
  const std::vector<double> q_raw = mlp_forward(heads.rotation, descriptor);
  const std::vector<double> s_raw = mlp_forward(heads.scale, descriptor);
  const std::vector<double> o_raw = mlp_forward(heads.opacity, descriptor);

  HeadsOutput out;
  const double n =
      std::sqrt(q_raw[0] * q_raw[0] + q_raw[1] * q_raw[1] + q_raw[2] * q_raw[2] + q_raw[3] * q_raw[3]);
  if (n < 1e-12) {
    out.rotation = Quat(1.0, 0.0, 0.0, 0.0);
    out.degenerate_rotation = true;
  } else {
    out.rotation = Quat(q_raw[0] / n, q_raw[1] / n, q_raw[2] / n, q_raw[3] / n);
  }
  for (int c = 0; c < 3; ++c) {
    out.scales[c] = std::clamp(std::exp(s_raw[c]), kScaleClampMin, kScaleClampMax);
  }
  out.opacity = 1.0 / (1.0 + std::exp(-o_raw[0]));
  return out;
}

std::vector<double> finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                                         std::span<const double> x, double h) {
  std::vector<double> grad(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> x, std::span<const double> analytic_grad,
                         double h) {
  const std::vector<double> num = finite_diff_gradient(f, x, h);
  double worst = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double denom = std::max({std::abs(num[i]), std::abs(analytic_grad[i]), 1e-12});
    worst = std::max(worst, std::abs(num[i] - analytic_grad[i]) / denom);
  }
  return worst;
}

MlpWeights make_random_mlp(std::uint64_t seed, const std::vector<int>& dims,
                           const std::vector<Activation>& acts) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1) {
    raise(Errc::invalid_spec, "need n+1 dims and n activations");
  }
  std::mt19937_64 rng(seed);
  MlpWeights w;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    MlpLayer layer;
    layer.in_dim = dims[l];
    layer.out_dim = dims[l + 1];
    layer.act = acts[l];
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(dims[l])));
    layer.weight.resize(static_cast<size_t>(layer.in_dim) * layer.out_dim);
    layer.bias.assign(layer.out_dim, 0.0f);
    for (float& v : layer.weight) v = static_cast<float>(dist(rng));
    for (float& v : layer.bias) v = static_cast<float>(0.1 * dist(rng));
    w.layers.push_back(std::move(layer));
  }
  return w;
}

AttentionWeights make_random_attention(std::uint64_t seed, int dim, int heads) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  AttentionWeights w;
  w.dim = dim;
  w.heads = heads;
  const size_t n = static_cast<size_t>(dim) * dim;
  for (auto* mat : {&w.wq, &w.wk, &w.wv, &w.wo}) {
    mat->resize(n);
    for (float& v : *mat) v = static_cast<float>(dist(rng));
  }
  w.validate();
  return w;
}

DescriptorNetWeights make_random_descriptor_net(std::uint64_t seed, int descriptor_dim) {
  DescriptorNetWeights w;
  const int d0 = descriptor_dim;
  const int d1 = std::max(2, descriptor_dim / 2);
  const int d2 = std::max(2, descriptor_dim / 2);
  w.stage_full = make_random_mlp(seed + 1, {6, d0, d0}, {Activation::relu, Activation::none});
  w.stage_coarse1 = make_random_mlp(seed + 2, {6, d1}, {Activation::relu});
  w.stage_coarse2 = make_random_mlp(seed + 3, {6, d2}, {Activation::relu});
  w.fusion = make_random_mlp(seed + 4, {d0 + d1 + d2, descriptor_dim}, {Activation::none});
  w.validate();
  return w;
}

MlpWeights make_bias_mlp(int in_dim, const std::vector<double>& bias, Activation act) {
  MlpWeights w;
  MlpLayer layer;
  layer.in_dim = in_dim;
  layer.out_dim = static_cast<int>(bias.size());
  layer.act = act;
  layer.weight.assign(static_cast<size_t>(in_dim) * bias.size(), 0.0f);
  layer.bias.resize(bias.size());
  for (size_t i = 0; i < bias.size(); ++i) layer.bias[i] = static_cast<float>(bias[i]);
  w.layers.push_back(std::move(layer));
  return w;
}

}  // namespace npr
