#include "npr/fusion.hpp"

#include <json.hpp>

#include "npr/clouds.hpp"

namespace npr {

using nlohmann::json;

std::vector<double> encode_tokens(const Image& img, int patch, const MlpWeights& encoder) {
  if (!encoder.loaded()) raise(Errc::weights_not_loaded, "token encoder not loaded");
  if (patch < 1 || img.height % patch != 0 || img.width % patch != 0) {
    raise(Errc::shape_mismatch, "image dims must divide by the patch edge");
  }
  const int token_dim = patch * patch * img.channels;
  if (encoder.in_dim() != token_dim) {
    raise(Errc::shape_mismatch, "encoder input does not match patch token size");
  }
  const int ny = img.height / patch;
  const int nx = img.width / patch;
  const int d = encoder.out_dim();
  std::vector<double> tokens(static_cast<size_t>(ny) * nx * d);
  std::vector<double> flat(token_dim);
  for (int py = 0; py < ny; ++py) {
    for (int px = 0; px < nx; ++px) {
      int at = 0;
      for (int h = 0; h < patch; ++h) {
        for (int w = 0; w < patch; ++w) {
          for (int c = 0; c < img.channels; ++c) {
            flat[at++] = img.at(py * patch + h, px * patch + w, c);
          }
        }
      }
      const std::vector<double> enc = mlp_forward(encoder, flat);
      std::copy(enc.begin(), enc.end(),
                tokens.begin() + (static_cast<size_t>(py) * nx + px) * d);
    }
  }
  return tokens;
}

namespace {

std::vector<double> mean_pool(std::span<const double> tokens, int n, int d) {
  std::vector<double> pooled(d, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) pooled[c] += tokens[static_cast<size_t>(i) * d + c];
  }
  for (double& v : pooled) v /= n;
  return pooled;
}

}  // namespace

std::vector<double> fuse_stu(const Image& image_render, const Image& feature_render,
                             const MlpWeights& encoder_image, const MlpWeights& encoder_feature,
                             const AttentionWeights& ca, int patch) {
  if (image_render.channels != 3) raise(Errc::shape_mismatch, "image render must be 3-channel");
  const std::vector<double> q_tokens = encode_tokens(image_render, patch, encoder_image);
  const std::vector<double> kv_tokens = encode_tokens(feature_render, patch, encoder_feature);
  const int d = ca.dim;
  if (encoder_image.out_dim() != d || encoder_feature.out_dim() != d) {
    raise(Errc::shape_mismatch, "encoder output must match attention dim");
  }
  const int n = static_cast<int>(q_tokens.size()) / d;
  const int m = static_cast<int>(kv_tokens.size()) / d;
  const std::vector<double> attended = cross_attention(ca, q_tokens, n, kv_tokens, m);
  return mean_pool(attended, n, d);
}

std::vector<double> encode_nerf_feature(const Image& feature_map, const MlpWeights& encoder) {
  if (!encoder.loaded()) raise(Errc::weights_not_loaded, "nerf encoder not loaded");
  if (encoder.in_dim() != feature_map.channels) {
    raise(Errc::shape_mismatch, "encoder input does not match feature channels");
  }
  const int d = encoder.out_dim();
  std::vector<double> pooled(d, 0.0);
  std::vector<double> cell(feature_map.channels);
  const int n = feature_map.height * feature_map.width;
  for (int h = 0; h < feature_map.height; ++h) {
    for (int w = 0; w < feature_map.width; ++w) {
      for (int c = 0; c < feature_map.channels; ++c) cell[c] = feature_map.at(h, w, c);
      const std::vector<double> enc = mlp_forward(encoder, cell);
      for (int c = 0; c < d; ++c) pooled[c] += enc[c];
    }
  }
  for (double& v : pooled) v /= n;
  return pooled;
}

ViewEmbedding combine_view(std::vector<double> splat, std::vector<double> nerf) {
  if (splat.size() != nerf.size()) raise(Errc::shape_mismatch, "embedding dims differ");
  ViewEmbedding v;
  v.combined.resize(splat.size());
  for (size_t i = 0; i < splat.size(); ++i) v.combined[i] = splat[i] + nerf[i];
  v.splat = std::move(splat);
  v.nerf = std::move(nerf);
  return v;
}

std::vector<double> future_node_embedding(const std::vector<ViewEmbedding>& views) {
  if (views.size() != kPanoramaViews) {
    raise(Errc::wrong_view_count, "future node needs exactly 12 views");
  }
  std::vector<double> out(views[0].combined.size(), 0.0);
  for (const ViewEmbedding& v : views) {
    if (v.combined.size() != out.size()) raise(Errc::shape_mismatch, "embedding dims differ");
    for (size_t i = 0; i < out.size(); ++i) out[i] += v.combined[i];
  }
  for (double& x : out) x /= views.size();
  return out;
}

void NodeSet::validate() const {
  if (visited.size() != embeddings.size() || kinds.size() != embeddings.size()) {
    raise(Errc::shape_mismatch, "node arrays must have equal length");
  }
  for (const auto& e : embeddings) {
    if (e.size() != embeddings[0].size()) raise(Errc::shape_mismatch, "embedding dims differ");
  }
}

NodeSet NodeSet::from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_array()) raise(Errc::invalid_spec, "node set json must be an array");
  NodeSet nodes;
  for (const auto& item : j) {
    nodes.embeddings.push_back(item.at("embedding").get<std::vector<double>>());
    nodes.visited.push_back(item.at("visited").get<bool>() ? 1 : 0);
    const std::string kind = item.at("kind").get<std::string>();
    if (kind != "candidate" && kind != "future") {
      raise(Errc::invalid_spec, "node kind must be candidate or future");
    }
    nodes.kinds.push_back(kind);
  }
  nodes.validate();
  return nodes;
}

std::string NodeSet::to_json() const {
  json j = json::array();
  for (size_t i = 0; i < embeddings.size(); ++i) {
    j.push_back(json{{"embedding", embeddings[i]},
                     {"visited", visited[i] != 0},
                     {"kind", kinds[i]}});
  }
  return j.dump();
}

int masked_argmax(std::span<const double> scores, std::span<const char> visited) {
  int best = -1;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (visited[i]) continue;
    if (best < 0 || scores[i] > scores[best]) best = static_cast<int>(i);
  }
  return best;
}

PathScores score_paths(const NodeSet& nodes, const MlpWeights& ffn) {
  if (!ffn.loaded()) raise(Errc::weights_not_loaded, "ffn not loaded");
  if (ffn.out_dim() != 1) raise(Errc::dim_mismatch, "ffn must emit a scalar");
  nodes.validate();

  PathScores out;
  out.scores.resize(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    out.scores[i] = nodes.visited[i] ? kMaskedScore : mlp_forward(ffn, nodes.embeddings[i])[0];
  }
  out.best_index = masked_argmax(out.scores, nodes.visited);
  if (out.best_index < 0) raise(Errc::all_nodes_masked, "every node is visited");
  out.best_score = out.scores[out.best_index];
  return out;
}

}  // namespace npr
