#include "npr/weights_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace npr {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'W', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& is, const std::string& path) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) raise(Errc::corrupt_length, "weight file truncated: " + path);
  return v;
}

}  // namespace

void save_tensors(const std::string& path, const TensorMap& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(Errc::io_error, "cannot open " + path + " for writing");
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > 255) raise(Errc::invalid_spec, "tensor name too long: " + name);
    const std::uint8_t len = static_cast<std::uint8_t>(name.size());
    os.write(reinterpret_cast<const char*>(&len), 1);
    os.write(name.data(), len);
    write_u32(os, static_cast<std::uint32_t>(t.dims.size()));
    size_t expect = 1;
    for (std::uint32_t d : t.dims) {
      write_u32(os, d);
      expect *= d;
    }
    if (expect != t.data.size()) raise(Errc::dim_mismatch, "tensor data/dims disagree: " + name);
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!os) raise(Errc::io_error, "write failed: " + path);
}

TensorMap load_tensors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::io_error, "cannot open " + path);
  char magic[4] = {};
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    raise(Errc::bad_magic, "not a TNW1 file: " + path);
  }
  const std::uint32_t version = read_u32(is, path);
  if (version != kVersion) raise(Errc::version_unsupported, "TNW1 version: " + path);
  const std::uint32_t count = read_u32(is, path);
  TensorMap tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::uint8_t len = 0;
    is.read(reinterpret_cast<char*>(&len), 1);
    std::string name(len, '\0');
    is.read(name.data(), len);
    if (!is) raise(Errc::corrupt_length, "weight file truncated: " + path);
    NamedTensor t;
    const std::uint32_t rank = read_u32(is, path);
    if (rank > 8) raise(Errc::corrupt_length, "implausible tensor rank: " + path);
    size_t total = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.dims.push_back(read_u32(is, path));
      total *= t.dims.back();
    }
    if (total > (1u << 28)) raise(Errc::corrupt_length, "implausible tensor size: " + path);
    t.data.resize(total);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(total * sizeof(float)));
    if (is.gcount() != static_cast<std::streamsize>(total * sizeof(float))) {
      raise(Errc::corrupt_length, "weight file truncated: " + path);
    }
    tensors.emplace(std::move(name), std::move(t));
  }
  return tensors;
}

namespace {

void pack_mlp(TensorMap& out, const std::string& name, const MlpWeights& w) {
  NamedTensor acts;
  acts.dims = {static_cast<std::uint32_t>(w.layers.size())};
  for (const MlpLayer& l : w.layers) acts.data.push_back(static_cast<float>(l.act));
  out[name + ".acts"] = std::move(acts);
  for (size_t l = 0; l < w.layers.size(); ++l) {
    const MlpLayer& layer = w.layers[l];
    const std::string base = name + "." + std::to_string(l);
    out[base + ".w"] = NamedTensor{{static_cast<std::uint32_t>(layer.out_dim),
                                    static_cast<std::uint32_t>(layer.in_dim)},
                                   layer.weight};
    out[base + ".b"] = NamedTensor{{static_cast<std::uint32_t>(layer.out_dim)}, layer.bias};
  }
}

const NamedTensor& need(const TensorMap& tensors, const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) raise(Errc::weights_not_loaded, "missing tensor " + name);
  return it->second;
}

MlpWeights unpack_mlp(const TensorMap& tensors, const std::string& name) {
  const NamedTensor& acts = need(tensors, name + ".acts");
  MlpWeights w;
  for (size_t l = 0; l < acts.data.size(); ++l) {
    const std::string base = name + "." + std::to_string(l);
    const NamedTensor& wt = need(tensors, base + ".w");
    const NamedTensor& bt = need(tensors, base + ".b");
    if (wt.dims.size() != 2 || bt.dims.size() != 1 || wt.dims[0] != bt.dims[0]) {
      raise(Errc::dim_mismatch, "bad layer tensors for " + base);
    }
    MlpLayer layer;
    layer.out_dim = static_cast<int>(wt.dims[0]);
    layer.in_dim = static_cast<int>(wt.dims[1]);
    layer.weight = wt.data;
    layer.bias = bt.data;
    const int code = static_cast<int>(acts.data[l]);
    if (code < 0 || code > 4) raise(Errc::invalid_spec, "unknown activation code");
    layer.act = static_cast<Activation>(code);
    w.layers.push_back(std::move(layer));
  }
  w.validate();
  return w;
}

void pack_attention(TensorMap& out, const std::string& name, const AttentionWeights& w) {
  out[name + ".meta"] = NamedTensor{{2}, {static_cast<float>(w.dim), static_cast<float>(w.heads)}};
  const std::uint32_t d = static_cast<std::uint32_t>(w.dim);
  out[name + ".wq"] = NamedTensor{{d, d}, w.wq};
  out[name + ".wk"] = NamedTensor{{d, d}, w.wk};
  out[name + ".wv"] = NamedTensor{{d, d}, w.wv};
  out[name + ".wo"] = NamedTensor{{d, d}, w.wo};
}

AttentionWeights unpack_attention(const TensorMap& tensors, const std::string& name) {
  const NamedTensor& meta = need(tensors, name + ".meta");
  if (meta.data.size() != 2) raise(Errc::dim_mismatch, "bad attention meta");
  AttentionWeights w;
  w.dim = static_cast<int>(meta.data[0]);
  w.heads = static_cast<int>(meta.data[1]);
  w.wq = need(tensors, name + ".wq").data;
  w.wk = need(tensors, name + ".wk").data;
  w.wv = need(tensors, name + ".wv").data;
  w.wo = need(tensors, name + ".wo").data;
  w.validate();
  return w;
}

}  // namespace

void PipelineWeights::validate() const {
  if (feature_dim <= 0 || embed_dim <= 0 || patch <= 0) {
    raise(Errc::weights_not_loaded, "pipeline dims not set");
  }
  phi1.validate();
  phi2.validate();
  phi3.validate();
  if (phi3.out_dim() != 1 || phi3.final_activation() != Activation::softplus) {
    raise(Errc::invalid_spec, "density head must end in a scalar softplus");
  }
  descriptor.validate();
  heads.validate();
  encoder_image.validate();
  encoder_feature.validate();
  encoder_nerf.validate();
  fuse.validate();
  ffn.validate();
  if (ffn.out_dim() != 1) raise(Errc::dim_mismatch, "ffn must emit a scalar score");
}

TensorMap pack_pipeline(const PipelineWeights& w) {
  TensorMap out;
  out["meta"] = NamedTensor{{3},
                            {static_cast<float>(w.feature_dim), static_cast<float>(w.embed_dim),
                             static_cast<float>(w.patch)}};
  pack_mlp(out, "phi1", w.phi1);
  pack_mlp(out, "phi2", w.phi2);
  pack_mlp(out, "phi3", w.phi3);
  pack_mlp(out, "descriptor.full", w.descriptor.stage_full);
  pack_mlp(out, "descriptor.coarse1", w.descriptor.stage_coarse1);
  pack_mlp(out, "descriptor.coarse2", w.descriptor.stage_coarse2);
  pack_mlp(out, "descriptor.fusion", w.descriptor.fusion);
  out["descriptor.rates"] = NamedTensor{
      {2}, {static_cast<float>(w.descriptor.rate1), static_cast<float>(w.descriptor.rate2)}};
  pack_mlp(out, "heads.rotation", w.heads.rotation);
  pack_mlp(out, "heads.scale", w.heads.scale);
  pack_mlp(out, "heads.opacity", w.heads.opacity);
  pack_mlp(out, "encoder.image", w.encoder_image);
  pack_mlp(out, "encoder.feature", w.encoder_feature);
  pack_mlp(out, "encoder.nerf", w.encoder_nerf);
  pack_attention(out, "fuse", w.fuse);
  pack_mlp(out, "ffn", w.ffn);
  return out;
}

PipelineWeights unpack_pipeline(const TensorMap& tensors) {
  PipelineWeights w;
  const NamedTensor& meta = need(tensors, "meta");
  if (meta.data.size() != 3) raise(Errc::dim_mismatch, "bad pipeline meta");
  w.feature_dim = static_cast<int>(meta.data[0]);
  w.embed_dim = static_cast<int>(meta.data[1]);
  w.patch = static_cast<int>(meta.data[2]);
  w.phi1 = unpack_mlp(tensors, "phi1");
  w.phi2 = unpack_mlp(tensors, "phi2");
  w.phi3 = unpack_mlp(tensors, "phi3");
  w.descriptor.stage_full = unpack_mlp(tensors, "descriptor.full");
  w.descriptor.stage_coarse1 = unpack_mlp(tensors, "descriptor.coarse1");
  w.descriptor.stage_coarse2 = unpack_mlp(tensors, "descriptor.coarse2");
  w.descriptor.fusion = unpack_mlp(tensors, "descriptor.fusion");
  const NamedTensor& rates = need(tensors, "descriptor.rates");
  if (rates.data.size() != 2) raise(Errc::dim_mismatch, "bad descriptor rates");
  w.descriptor.rate1 = rates.data[0];
  w.descriptor.rate2 = rates.data[1];
  w.heads.rotation = unpack_mlp(tensors, "heads.rotation");
  w.heads.scale = unpack_mlp(tensors, "heads.scale");
  w.heads.opacity = unpack_mlp(tensors, "heads.opacity");
  w.encoder_image = unpack_mlp(tensors, "encoder.image");
  w.encoder_feature = unpack_mlp(tensors, "encoder.feature");
  w.encoder_nerf = unpack_mlp(tensors, "encoder.nerf");
  w.fuse = unpack_attention(tensors, "fuse");
  w.ffn = unpack_mlp(tensors, "ffn");
  w.validate();
  return w;
}

void save_pipeline(const std::string& path, const PipelineWeights& w) {
  w.validate();
  save_tensors(path, pack_pipeline(w));
}

PipelineWeights load_pipeline(const std::string& path) {
  return unpack_pipeline(load_tensors(path));
}

PipelineWeights make_test_weights(std::uint64_t seed, int feature_dim, int descriptor_dim,
                                  int embed_dim, int patch) {
  PipelineWeights w;
  w.feature_dim = feature_dim;
  w.embed_dim = embed_dim;
  w.patch = patch;
  const int d = feature_dim;
  w.phi1 = make_random_mlp(seed + 10, {d + 3, d, d}, {Activation::relu, Activation::none});
  w.phi2 = make_random_mlp(seed + 11, {d + 2, d, d}, {Activation::relu, Activation::none});
  w.phi3 = make_random_mlp(seed + 12, {d, d, 1}, {Activation::relu, Activation::softplus});
  w.descriptor = make_random_descriptor_net(seed + 20, descriptor_dim);
  w.heads.rotation = make_random_mlp(seed + 30, {descriptor_dim, 4}, {Activation::none});
  w.heads.scale = make_random_mlp(seed + 31, {descriptor_dim, 3}, {Activation::none});
  w.heads.opacity = make_random_mlp(seed + 32, {descriptor_dim, 1}, {Activation::none});
  w.encoder_image = make_random_mlp(seed + 40, {patch * patch * 3, embed_dim}, {Activation::none});
  w.encoder_feature =
      make_random_mlp(seed + 41, {patch * patch * descriptor_dim, embed_dim}, {Activation::none});
  w.encoder_nerf = make_random_mlp(seed + 42, {feature_dim, embed_dim}, {Activation::none});
  w.fuse = make_random_attention(seed + 50, embed_dim, 8);
  w.ffn = make_random_mlp(seed + 60, {embed_dim, 1}, {Activation::none});
  w.validate();
  return w;
}

PipelineWeights make_render_weights(std::uint64_t seed, int feature_dim, int descriptor_dim,
                                    int embed_dim, double gaussian_scale, double opacity,
                                    int patch) {
  PipelineWeights w = make_test_weights(seed, feature_dim, descriptor_dim, embed_dim, patch);
  const double s = std::log(std::clamp(gaussian_scale, kScaleClampMin, kScaleClampMax));
  const double o = std::clamp(opacity, 1e-6, 1.0 - 1e-6);
  w.heads.rotation = make_bias_mlp(descriptor_dim, {1.0, 0.0, 0.0, 0.0});
  w.heads.scale = make_bias_mlp(descriptor_dim, {s, s, s});
  w.heads.opacity = make_bias_mlp(descriptor_dim, {std::log(o / (1.0 - o))});
  w.validate();
  return w;
}

DistanceScaleModel DistanceScaleModel::fit(const Vec3& center, double d0, double s0, double d1,
                                           double s1, double cap) {
  DistanceScaleModel m;
  m.center = center;
  m.per_meter = std::log(s1 / s0) / (d1 - d0);
  m.log_base = std::log(s0) - m.per_meter * d0;
  m.cap = cap;
  return m;
}

PipelineWeights make_adaptive_render_weights(std::uint64_t seed, int feature_dim,
                                             int descriptor_dim, int embed_dim,
                                             const DistanceScaleModel& scale_model,
                                             double opacity, int patch) {
  if (descriptor_dim < 10) raise(Errc::invalid_spec, "adaptive weights need descriptor_dim >= 10");
  PipelineWeights w = make_test_weights(seed, feature_dim, descriptor_dim, embed_dim, patch);

  // First stage layer: units 0..5 hold relu(+-(p_a - c_a)) so their sum
  // is the L1 distance to the center; units 6..8 pass the colors through
  // (relu is the identity on [0,1]).
  MlpLayer stage1;
  stage1.in_dim = 6;
  stage1.out_dim = descriptor_dim;
  stage1.act = Activation::relu;
  stage1.weight.assign(static_cast<size_t>(6) * descriptor_dim, 0.0f);
  stage1.bias.assign(descriptor_dim, 0.0f);
  for (int axis = 0; axis < 3; ++axis) {
    stage1.weight[static_cast<size_t>(2 * axis) * 6 + axis] = 1.0f;
    stage1.bias[2 * axis] = static_cast<float>(-scale_model.center[axis]);
    stage1.weight[static_cast<size_t>(2 * axis + 1) * 6 + axis] = -1.0f;
    stage1.bias[2 * axis + 1] = static_cast<float>(scale_model.center[axis]);
  }
  for (int unit = 6; unit < 9 && unit < descriptor_dim; ++unit) {
    stage1.weight[static_cast<size_t>(unit) * 6 + 3 + (unit - 6)] = 1.0f;
  }

  // Second layer: identity on the relu pairs and colors, plus unit 9 =
  // relu(L1 - cap) so a linear head can express min(L1, cap).
  MlpLayer stage2;
  stage2.in_dim = descriptor_dim;
  stage2.out_dim = descriptor_dim;
  stage2.act = Activation::relu;
  stage2.weight.assign(static_cast<size_t>(descriptor_dim) * descriptor_dim, 0.0f);
  stage2.bias.assign(descriptor_dim, 0.0f);
  for (int unit = 0; unit < 9 && unit < descriptor_dim; ++unit) {
    stage2.weight[static_cast<size_t>(unit) * descriptor_dim + unit] = 1.0f;
  }
  for (int in = 0; in < 6; ++in) {
    stage2.weight[static_cast<size_t>(9) * descriptor_dim + in] = 1.0f;
  }
  stage2.bias[9] = static_cast<float>(-scale_model.cap);
  w.descriptor.stage_full = MlpWeights{{stage1, stage2}};

  // Fusion: identity on the full-stage block, zero on the pooled blocks.
  const int pooled = w.descriptor.stage_coarse1.out_dim() + w.descriptor.stage_coarse2.out_dim();
  MlpLayer fuse;
  fuse.in_dim = descriptor_dim + pooled;
  fuse.out_dim = descriptor_dim;
  fuse.act = Activation::none;
  fuse.weight.assign(static_cast<size_t>(fuse.in_dim) * descriptor_dim, 0.0f);
  fuse.bias.assign(descriptor_dim, 0.0f);
  for (int i = 0; i < descriptor_dim; ++i) {
    fuse.weight[static_cast<size_t>(i) * fuse.in_dim + i] = 1.0f;
  }
  w.descriptor.fusion = MlpWeights{{fuse}};
  w.descriptor.validate();

  // Scale head: log s = log_base + per_meter * min(L1, cap), where
  // min(L1, cap) = sum(units 0..5) - unit 9.
  MlpLayer scale;
  scale.in_dim = descriptor_dim;
  scale.out_dim = 3;
  scale.act = Activation::none;
  scale.weight.assign(static_cast<size_t>(descriptor_dim) * 3, 0.0f);
  scale.bias.assign(3, static_cast<float>(scale_model.log_base));
  for (int row = 0; row < 3; ++row) {
    for (int unit = 0; unit < 6; ++unit) {
      scale.weight[static_cast<size_t>(row) * descriptor_dim + unit] =
          static_cast<float>(scale_model.per_meter);
    }
    scale.weight[static_cast<size_t>(row) * descriptor_dim + 9] =
        static_cast<float>(-scale_model.per_meter);
  }
  w.heads.scale = MlpWeights{{scale}};

  const double o = std::clamp(opacity, 1e-6, 1.0 - 1e-6);
  w.heads.rotation = make_bias_mlp(descriptor_dim, {1.0, 0.0, 0.0, 0.0});
  w.heads.opacity = make_bias_mlp(descriptor_dim, {std::log(o / (1.0 - o))});
  w.validate();
  return w;
}

}  // namespace npr
