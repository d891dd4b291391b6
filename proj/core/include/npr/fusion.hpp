#pragma once

#include <string>
#include <vector>

#include "npr/image.hpp"
#include "npr/nets.hpp"

namespace npr {

/// Splits an image into non-overlapping patch tokens and encodes each
/// with the per-patch MLP. Returns n_tokens x encoder-out row-major.
/// Height and width must divide by the patch edge.
std::vector<double> encode_tokens(const Image& img, int patch, const MlpWeights& encoder);

/// Cross-attention fusion of the image render with the feature render:
/// queries from the encoded image tokens, keys/values from the encoded
/// feature tokens, mean-pooled to a single embedding.
std::vector<double> fuse_stu(const Image& image_render, const Image& feature_render,
                             const MlpWeights& encoder_image, const MlpWeights& encoder_feature,
                             const AttentionWeights& ca, int patch);

/// Per-cell token encoding of a volume-rendered feature map, mean-pooled.
std::vector<double> encode_nerf_feature(const Image& feature_map, const MlpWeights& encoder);

struct ViewEmbedding {
  std::vector<double> splat;     // fused 3DGS embedding
  std::vector<double> nerf;      // NeRF embedding
  std::vector<double> combined;  // element-wise sum
};

ViewEmbedding combine_view(std::vector<double> splat, std::vector<double> nerf);

/// Arithmetic mean of the 12 combined view embeddings.
std::vector<double> future_node_embedding(const std::vector<ViewEmbedding>& views);

struct NodeSet {
  std::vector<std::vector<double>> embeddings;
  std::vector<char> visited;
  std::vector<std::string> kinds;  // "candidate" or "future"

  size_t size() const { return embeddings.size(); }
  void validate() const;

  static NodeSet from_json(const std::string& text);
  std::string to_json() const;
};

struct PathScores {
  std::vector<double> scores;  // visited nodes carry the sentinel
  int best_index = -1;
  double best_score = 0.0;
};

/// Most-negative finite double; keeps masked-score arithmetic total.
constexpr double kMaskedScore = -1.7976931348623157e308;

/// Lowest-index argmax over unmasked entries only.
int masked_argmax(std::span<const double> scores, std::span<const char> visited);

/// Scores every node with the FFN, masks visited nodes, and picks the
/// maximum-score node. Throws AllNodesMasked when nothing is selectable.
PathScores score_paths(const NodeSet& nodes, const MlpWeights& ffn);

}  // namespace npr
