#pragma once

#include <span>
#include <vector>

#include "solar/render.hpp"

namespace solar {

struct LossWeights {
  double lambda_ssim = 0.2;
  double lambda_e = 0.004;
  double lambda_s = 0.01;

  void validate() const;
};

inline constexpr double kPsnrCap = 100.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

// Each loss optionally writes d(loss)/d(first argument) into `grad`.

/// Mean absolute difference over all pixels and channels.
double l1_loss(const Image& a, const Image& b, Image* grad = nullptr);

/// Mean local SSIM: 11x11 Gaussian window (sigma 1.5), valid positions only,
/// C1 = 0.01^2, C2 = 0.03^2, per channel then averaged.
double ssim(const Image& a, const Image& b, Image* grad = nullptr);

/// (1 - lambda_ssim) * L1 + lambda_ssim * (1 - SSIM).
double rendering_loss(const Image& pred, const Image& gt, const LossWeights& w, Image* grad = nullptr);

/// Mean of sigmoid(score) over all anchors.
double sparsity_loss(std::span<const double> scores, std::vector<double>* grad = nullptr);

double total_loss(double rendering, double entropy, double sparsity, const LossWeights& w);

/// 10 log10(1 / MSE), capped at kPsnrCap (identical images report the cap).
double psnr(const Image& pred, const Image& gt);

/// Normalised 1D Gaussian taps used by ssim().
std::vector<double> ssim_taps();

}  // namespace solar
