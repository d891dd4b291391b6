#include <doctest.h>

#include <random>

#include "npr/fusion.hpp"

using namespace npr;

TEST_CASE("token encoding validates shapes") {
  const MlpWeights enc = make_random_mlp(101, {2 * 2 * 3, 6}, {Activation::none});
  Image img(4, 4, 3);
  CHECK(encode_tokens(img, 2, enc).size() == 4 * 6);

  Image ragged(5, 4, 3);
  CHECK_THROWS_AS(encode_tokens(ragged, 2, enc), Error);
  const MlpWeights wrong = make_random_mlp(102, {7, 6}, {Activation::none});
  CHECK_THROWS_AS(encode_tokens(img, 2, wrong), Error);
  CHECK_THROWS_AS(encode_tokens(img, 2, MlpWeights{}), Error);
}

TEST_CASE("fuse_stu validates inputs") {
  const int d = 8;
  const AttentionWeights ca = make_random_attention(103, d, 2);
  const MlpWeights enc_img = make_random_mlp(104, {2 * 2 * 3, d}, {Activation::none});
  const MlpWeights enc_feat = make_random_mlp(105, {2 * 2 * 2, d}, {Activation::none});
  Image img(4, 4, 3), feat(4, 4, 2);
  CHECK(fuse_stu(img, feat, enc_img, enc_feat, ca, 2).size() == d);

  Image not_rgb(4, 4, 2);
  CHECK_THROWS_AS(fuse_stu(not_rgb, feat, enc_img, enc_feat, ca, 2), Error);
  const MlpWeights bad_dim = make_random_mlp(106, {2 * 2 * 3, d + 1}, {Activation::none});
  CHECK_THROWS_AS(fuse_stu(img, feat, bad_dim, enc_feat, ca, 2), Error);
}

TEST_CASE("fused embedding dim is stable under token counts") {
  const int d = 8;
  const AttentionWeights ca = make_random_attention(107, d, 2);
  std::mt19937_64 rng(108);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int size : {4, 8, 16}) {
    const MlpWeights enc_img =
        make_random_mlp(109, {4 * 4 * 3, d}, {Activation::none});
    const MlpWeights enc_feat =
        make_random_mlp(110, {4 * 4 * 2, d}, {Activation::none});
    Image img(size, size, 3), feat(size, size, 2);
    for (float& v : img.data) v = static_cast<float>(u(rng));
    for (float& v : feat.data) v = static_cast<float>(u(rng));
    CHECK(fuse_stu(img, feat, enc_img, enc_feat, ca, 4).size() == d);
  }
}

TEST_CASE("view combination and future node pooling") {
  std::vector<double> a = {1, 2, 3}, b = {0.5, -1, 2};
  const ViewEmbedding v = combine_view(a, b);
  CHECK(v.combined == std::vector<double>{1.5, 1.0, 5.0});
  CHECK_THROWS_AS(combine_view(a, std::vector<double>{1.0}), Error);

  std::vector<ViewEmbedding> eleven(11);
  CHECK_THROWS_AS(future_node_embedding(eleven), Error);
}

TEST_CASE("node set json") {
  const std::string text = R"([
    {"embedding":[1,2,3],"visited":false,"kind":"candidate"},
    {"embedding":[4,5,6],"visited":true,"kind":"future"}
  ])";
  const NodeSet nodes = NodeSet::from_json(text);
  CHECK(nodes.size() == 2);
  CHECK(nodes.visited[1] == 1);
  CHECK(nodes.kinds[0] == "candidate");
  const NodeSet back = NodeSet::from_json(nodes.to_json());
  CHECK(back.embeddings == nodes.embeddings);

  CHECK_THROWS_AS(NodeSet::from_json(R"({"not":"array"})"), Error);
  CHECK_THROWS_AS(
      NodeSet::from_json(R"([{"embedding":[1],"visited":false,"kind":"mystery"}])"), Error);
}

TEST_CASE("score_paths masks visited nodes") {
  const MlpWeights ffn = make_random_mlp(111, {3, 1}, {Activation::none});
  NodeSet nodes;
  for (int i = 0; i < 3; ++i) {
    nodes.embeddings.push_back({0.1 * i, 0.2, 0.3});
    nodes.visited.push_back(1);
    nodes.kinds.push_back("candidate");
  }
  CHECK_THROWS_AS(score_paths(nodes, ffn), Error);
  try {
    score_paths(nodes, ffn);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::all_nodes_masked);
  }

  nodes.visited[1] = 0;
  const PathScores out = score_paths(nodes, ffn);
  CHECK(out.best_index == 1);
  CHECK(out.scores[0] == kMaskedScore);
  CHECK(out.scores[2] == kMaskedScore);
  CHECK(out.best_score == out.scores[1]);

  CHECK_THROWS_AS(score_paths(nodes, MlpWeights{}), Error);
  const MlpWeights wide = make_random_mlp(112, {3, 2}, {Activation::none});
  CHECK_THROWS_AS(score_paths(nodes, wide), Error);
}

TEST_CASE("argmax tie break picks the lowest index") {
  std::vector<double> scores = {1.0, 3.0, 3.0, 2.0};
  std::vector<char> visited = {0, 0, 0, 0};
  CHECK(masked_argmax(scores, visited) == 1);
  visited[1] = 1;
  CHECK(masked_argmax(scores, visited) == 2);
}
