#include "touchroller/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "touchroller/error.hpp"

namespace touchroller {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

void require_same_size(const GrayImage& a, const GrayImage& b) {
  if (!a.same_size(b)) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                    std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
  if (a.empty()) throw Error(ErrorCode::InvalidArgument, "empty images");
}

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    w[i] = std::exp(-0.5 * x * x / (kSigma * kSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// 'valid' separable filtering: output is (W - 10) x (H - 10).
FloatImage filter_valid(const FloatImage& img, const std::array<double, kWindow>& w) {
  const int ow = img.width() - kWindow + 1;
  const int oh = img.height() - kWindow + 1;
  FloatImage tmp(ow, img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += w[i] * img(x + i, y);
      tmp(x, y) = acc;
    }
  FloatImage out(ow, oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += w[i] * tmp(x, y + i);
      out(x, y) = acc;
    }
  return out;
}

}  // namespace

double mae_percent(const GrayImage& a, const GrayImage& b) {
  require_same_size(a, b);
  auto pa = a.pixels();
  auto pb = b.pixels();
  double sum = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) sum += std::abs(static_cast<int>(pa[i]) - pb[i]);
  return 100.0 * sum / (255.0 * static_cast<double>(pa.size()));
}

double psnr(const GrayImage& a, const GrayImage& b) {
  require_same_size(a, b);
  auto pa = a.pixels();
  auto pb = b.pixels();
  double sq = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    sq += d * d;
  }
  if (sq == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sq / static_cast<double>(pa.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const GrayImage& a, const GrayImage& b) {
  require_same_size(a, b);
  if (a.width() < kWindow || a.height() < kWindow)
    throw Error(ErrorCode::InvalidArgument, "SSIM needs images of at least 11x11 pixels");

  const int w = a.width();
  const int h = a.height();
  FloatImage x(w, h), y(w, h), xx(w, h), yy(w, h), xy(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double va = a(c, r);
      const double vb = b(c, r);
      x(c, r) = va;
      y(c, r) = vb;
      xx(c, r) = va * va;
      yy(c, r) = vb * vb;
      xy(c, r) = va * vb;
    }
  const auto win = gaussian_window();
  const FloatImage mx = filter_valid(x, win);
  const FloatImage my = filter_valid(y, win);
  const FloatImage mxx = filter_valid(xx, win);
  const FloatImage myy = filter_valid(yy, win);
  const FloatImage mxy = filter_valid(xy, win);

  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double ux = mx.pixels()[i];
    const double uy = my.pixels()[i];
    const double vx = mxx.pixels()[i] - ux * ux;
    const double vy = myy.pixels()[i] - uy * uy;
    const double cxy = mxy.pixels()[i] - ux * uy;
    total += ((2.0 * ux * uy + kC1) * (2.0 * cxy + kC2)) /
             ((ux * ux + uy * uy + kC1) * (vx + vy + kC2));
  }
  return total / static_cast<double>(mx.size());
}

QualityMetrics compare_images(const GrayImage& a, const GrayImage& b) {
  return {ssim(a, b), psnr(a, b), mae_percent(a, b)};
}

}  // namespace touchroller
