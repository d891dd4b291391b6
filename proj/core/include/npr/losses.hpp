#pragma once

#include <span>
#include <string>
#include <vector>

#include "npr/image.hpp"

namespace npr {

double l1_loss(const Image& a, const Image& b);
double l2_loss(const Image& a, const Image& b);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double c1 = 0.01 * 0.01;  // (k1 * L)^2 with L = 1
  double c2 = 0.03 * 0.03;
};

/// Mean local SSIM over valid window positions with a Gaussian window,
/// averaged across channels. Throws TooSmall when the image is smaller
/// than the window.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

/// 1 - cos(a, b), in [0, 2]. Throws ZeroVector for vanishing norms.
double cosine_feature_loss(std::span<const double> predicted, std::span<const double> truth);

struct PretrainParts {
  double l1_r = 0.0;
  double l2_r = 0.0;
  double ssim_r = 0.0;  // reported as 1 - SSIM
  double l2_f = 0.0;    // cosine feature loss
};

/// Unweighted sum of the four pretraining terms.
double pretrain_total(const PretrainParts& parts);

/// Cross entropy of the path scores against a soft target distribution:
/// -sum t_i * log softmax(scores)_i with masked nodes excluded from the
/// softmax support. Masked nodes must carry zero target mass.
double nav_ce_loss(std::span<const double> scores, std::span<const double> soft_target,
                   std::span<const char> mask = {});

/// d(nav_ce)/d(scores): softmax - target over unmasked entries, zero on
/// masked ones.
std::vector<double> nav_ce_gradient(std::span<const double> scores,
                                    std::span<const double> soft_target,
                                    std::span<const char> mask = {});

/// 10 log10(1 / mse) for unit-range images; +infinity when identical.
double psnr(const Image& a, const Image& b);

struct LossReport {
  double l1_r = 0.0;
  double l2_r = 0.0;
  double ssim_r = 0.0;
  double l2_f = 0.0;
  double pretrain_total = 0.0;
  double nav_ce = 0.0;

  std::string to_json() const;
};

}  // namespace npr
