#pragma once

#include "touchroller/image.hpp"

namespace touchroller {

/// Mean absolute error as a percentage of full scale (255).
double mae_percent(const GrayImage& a, const GrayImage& b);

/// Peak signal-to-noise ratio in dB with MAX = 255; +infinity for identical
/// images.
double psnr(const GrayImage& a, const GrayImage& b);

/// Mean structural similarity over all fully-contained 11x11 Gaussian
/// windows (sigma 1.5, K1 = 0.01, K2 = 0.03, L = 255).
double ssim(const GrayImage& a, const GrayImage& b);

struct QualityMetrics {
  double ssim = 0.0;
  double psnr = 0.0;
  double mae_percent = 0.0;
};

QualityMetrics compare_images(const GrayImage& a, const GrayImage& b);

}  // namespace touchroller
