#include "npr/losses.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace npr {

namespace {

void check_shapes(const Image& a, const Image& b) {
  if (!a.same_shape(b)) raise(Errc::shape_mismatch, "image shapes differ");
  if (a.size() == 0) raise(Errc::shape_mismatch, "empty images");
}

}  // namespace

double l1_loss(const Image& a, const Image& b) {
  check_shapes(a, b);
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    acc += std::abs(static_cast<double>(a.data[i]) - b.data[i]);
  }
  return acc / a.data.size();
}

double l2_loss(const Image& a, const Image& b) {
  check_shapes(a, b);
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    acc += d * d;
  }
  return acc / a.data.size();
}

double ssim(const Image& a, const Image& b, const SsimParams& params) {
  check_shapes(a, b);
  const int win = params.window;
  if (a.height < win || a.width < win) raise(Errc::too_small, "image smaller than SSIM window");

  std::vector<double> kernel(static_cast<size_t>(win) * win);
  const double center = (win - 1) / 2.0;
  double ksum = 0.0;
  for (int y = 0; y < win; ++y) {
    for (int x = 0; x < win; ++x) {
      const double d2 = (y - center) * (y - center) + (x - center) * (x - center);
      kernel[static_cast<size_t>(y) * win + x] = std::exp(-d2 / (2.0 * params.sigma * params.sigma));
      ksum += kernel[static_cast<size_t>(y) * win + x];
    }
  }
  for (double& k : kernel) k /= ksum;

  double total = 0.0;
  long positions = 0;
  for (int c = 0; c < a.channels; ++c) {
    for (int h = 0; h + win <= a.height; ++h) {
      for (int w = 0; w + win <= a.width; ++w) {
        double mu1 = 0.0, mu2 = 0.0, m11 = 0.0, m22 = 0.0, m12 = 0.0;
        for (int y = 0; y < win; ++y) {
          for (int x = 0; x < win; ++x) {
            const double k = kernel[static_cast<size_t>(y) * win + x];
            const double v1 = a.at(h + y, w + x, c);
            const double v2 = b.at(h + y, w + x, c);
            mu1 += k * v1;
            mu2 += k * v2;
            m11 += k * v1 * v1;
            m22 += k * v2 * v2;
            m12 += k * v1 * v2;
          }
        }
        const double var1 = m11 - mu1 * mu1;
        const double var2 = m22 - mu2 * mu2;
        const double cov = m12 - mu1 * mu2;
        total += ((2.0 * mu1 * mu2 + params.c1) * (2.0 * cov + params.c2)) /
                 ((mu1 * mu1 + mu2 * mu2 + params.c1) * (var1 + var2 + params.c2));
        ++positions;
      }
    }
  }
  return total / positions;
}

double cosine_feature_loss(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) raise(Errc::shape_mismatch, "vector dims differ");
  double dot = 0.0, n1 = 0.0, n2 = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    dot += predicted[i] * truth[i];
    n1 += predicted[i] * predicted[i];
    n2 += truth[i] * truth[i];
  }
  if (n1 < 1e-24 || n2 < 1e-24) raise(Errc::zero_vector, "cosine loss needs nonzero norms");
  return 1.0 - dot / (std::sqrt(n1) * std::sqrt(n2));
}

double pretrain_total(const PretrainParts& parts) {
  return parts.l1_r + parts.l2_r + parts.ssim_r + parts.l2_f;
}

namespace {

void check_distribution(std::span<const double> scores, std::span<const double> target,
                        std::span<const char> mask) {
  if (scores.size() != target.size()) raise(Errc::bad_distribution, "score/target size differ");
  if (!mask.empty() && mask.size() != scores.size()) {
    raise(Errc::bad_distribution, "mask size differs");
  }
  double sum = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    if (target[i] < 0.0) raise(Errc::bad_distribution, "negative target mass");
    if (!mask.empty() && mask[i] && target[i] != 0.0) {
      raise(Errc::bad_distribution, "masked node carries target mass");
    }
    sum += target[i];
  }
  if (std::abs(sum - 1.0) > 1e-6) raise(Errc::bad_distribution, "target does not sum to 1");
}

double masked_logsumexp(std::span<const double> scores, std::span<const char> mask) {
  double max_s = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!mask.empty() && mask[i]) continue;
    max_s = std::max(max_s, scores[i]);
  }
  if (!std::isfinite(max_s)) raise(Errc::all_nodes_masked, "softmax support is empty");
  double acc = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!mask.empty() && mask[i]) continue;
    acc += std::exp(scores[i] - max_s);
  }
  return max_s + std::log(acc);
}

}  // namespace

double nav_ce_loss(std::span<const double> scores, std::span<const double> soft_target,
                   std::span<const char> mask) {
  check_distribution(scores, soft_target, mask);
  const double lse = masked_logsumexp(scores, mask);
  double loss = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!mask.empty() && mask[i]) continue;
    if (soft_target[i] == 0.0) continue;
    loss -= soft_target[i] * (scores[i] - lse);
  }
  return loss;
}

std::vector<double> nav_ce_gradient(std::span<const double> scores,
                                    std::span<const double> soft_target,
                                    std::span<const char> mask) {
  check_distribution(scores, soft_target, mask);
  const double lse = masked_logsumexp(scores, mask);
  std::vector<double> grad(scores.size(), 0.0);
  for (size_t i = 0; i < scores.size(); ++i) {
    if (!mask.empty() && mask[i]) continue;
    grad[i] = std::exp(scores[i] - lse) - soft_target[i];
  }
  return grad;
}

double psnr(const Image& a, const Image& b) {
  const double mse = l2_loss(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

std::string LossReport::to_json() const {
  nlohmann::json j{{"l1_r", l1_r},       {"l2_r", l2_r},
                   {"ssim_r", ssim_r},   {"l2_f", l2_f},
                   {"pretrain_total", pretrain_total}, {"nav_ce", nav_ce}};
  return j.dump(2);
}

}  // namespace npr
