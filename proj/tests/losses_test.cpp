#include <doctest.h>

#include <cmath>

#include "npr/losses.hpp"

using namespace npr;

TEST_CASE("loss shape validation") {
  Image a(4, 4, 1), b(4, 5, 1);
  CHECK_THROWS_AS(l1_loss(a, b), Error);
  CHECK_THROWS_AS(l2_loss(a, b), Error);
  CHECK_THROWS_AS(psnr(a, b), Error);
  Image small(4, 4, 1);
  CHECK_THROWS_AS(ssim(small, small), Error);  // smaller than the window
}

TEST_CASE("constant offset losses") {
  Image a(8, 8, 3), b(8, 8, 3);
  for (float& v : b.data) v = 0.5f;
  CHECK(l1_loss(a, b) == doctest::Approx(0.5));
  CHECK(l2_loss(a, b) == doctest::Approx(0.25));
  CHECK(l1_loss(a, a) == 0.0);
}

TEST_CASE("ssim basics") {
  Image a(12, 12, 1);
  for (size_t i = 0; i < a.data.size(); ++i) a.data[i] = static_cast<float>(i % 7) / 7.0f;
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));
  Image b = a;
  for (float& v : b.data) v = 1.0f - v;
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  CHECK(1.0 - ssim(a, b) >= 0.0);
  CHECK(1.0 - ssim(a, b) <= 2.0);
}

TEST_CASE("cosine loss domain") {
  std::vector<double> x = {1.0, 0.0};
  CHECK_THROWS_AS(cosine_feature_loss(x, std::vector<double>{0.0, 0.0}), Error);
  CHECK_THROWS_AS(cosine_feature_loss(x, std::vector<double>{1.0}), Error);
  CHECK(cosine_feature_loss(x, std::vector<double>{0.0, 2.0}) == doctest::Approx(1.0));
}

TEST_CASE("pretrain total is the plain sum") {
  PretrainParts parts{0.25, 0.5, 0.125, 0.125};
  CHECK(pretrain_total(parts) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cross entropy distribution checks") {
  std::vector<double> scores = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(nav_ce_loss(scores, std::vector<double>{0.5, 0.5, 0.5}), Error);
  CHECK_THROWS_AS(nav_ce_loss(scores, std::vector<double>{-0.5, 1.0, 0.5}), Error);
  CHECK_THROWS_AS(nav_ce_loss(scores, std::vector<double>{0.5, 0.5}), Error);

  // uniform target over uniform scores is the entropy of the uniform
  std::vector<double> u3(3, 1.0 / 3.0);
  std::vector<double> flat(3, 7.0);
  CHECK(nav_ce_loss(flat, u3) == doctest::Approx(std::log(3.0)).epsilon(1e-12));

  // masked support drops the node from the softmax
  std::vector<double> target = {0.0, 0.4, 0.6};
  std::vector<char> mask = {1, 0, 0};
  const double masked = nav_ce_loss(scores, target, mask);
  const double unmasked_pair = nav_ce_loss(std::vector<double>{2.0, 3.0},
                                           std::vector<double>{0.4, 0.6});
  CHECK(masked == doctest::Approx(unmasked_pair).epsilon(1e-12));
}

TEST_CASE("ce gradient matches finite differences near masks") {
  std::vector<double> scores = {0.2, -1.0, 0.7, 0.1};
  std::vector<double> target = {0.1, 0.0, 0.6, 0.3};
  std::vector<char> mask = {0, 1, 0, 0};
  const auto grad = nav_ce_gradient(scores, target, mask);
  CHECK(grad[1] == 0.0);
  const double h = 1e-5;
  for (int i = 0; i < 4; ++i) {
    if (mask[i]) continue;
    std::vector<double> plus = scores, minus = scores;
    plus[i] += h;
    minus[i] -= h;
    const double num =
        (nav_ce_loss(plus, target, mask) - nav_ce_loss(minus, target, mask)) / (2 * h);
    CHECK(grad[i] == doctest::Approx(num).epsilon(1e-5));
  }
}

TEST_CASE("loss report serializes") {
  LossReport report;
  report.l1_r = 0.1;
  report.nav_ce = 1.5;
  const std::string j = report.to_json();
  CHECK(j.find("\"l1_r\": 0.1") != std::string::npos);
  CHECK(j.find("\"nav_ce\": 1.5") != std::string::npos);
}
