#include "touchroller/imgproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace touchroller {

FloatImage to_float(const GrayImage& img) {
  FloatImage out(img.width(), img.height());
  std::ranges::copy(img.pixels(), out.pixels().begin());
  return out;
}

GrayImage invert(const GrayImage& img) {
  GrayImage out(img.width(), img.height());
  std::ranges::transform(img.pixels(), out.pixels().begin(),
                         [](std::uint8_t p) { return static_cast<std::uint8_t>(255 - p); });
  return out;
}

FloatImage gaussian_blur(const FloatImage& img, double sigma) {
  if (sigma <= 0.0 || img.empty()) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& w : kernel) w /= sum;

  const int w = img.width();
  const int h = img.height();
  FloatImage tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * img(std::clamp(x + i, 0, w - 1), y);
      tmp(x, y) = acc;
    }
  }
  FloatImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[i + radius] * tmp(x, std::clamp(y + i, 0, h - 1));
      out(x, y) = acc;
    }
  }
  return out;
}

std::optional<int> otsu_threshold(const FloatImage& img) {
  std::array<double, 256> hist{};
  for (double p : img.pixels()) hist[static_cast<int>(std::clamp(std::lround(p), 0L, 255L))] += 1.0;
  const double total = static_cast<double>(img.size());
  if (total == 0.0) return std::nullopt;

  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[i];

  double weight_bg = 0.0;
  double sum_bg = 0.0;
  double best = 0.0;
  std::optional<int> best_t;
  for (int t = 0; t < 255; ++t) {
    weight_bg += hist[t];
    sum_bg += t * hist[t];
    const double weight_fg = total - weight_bg;
    if (weight_bg == 0.0 || weight_fg == 0.0) continue;
    const double mean_bg = sum_bg / weight_bg;
    const double mean_fg = (sum_all - sum_bg) / weight_fg;
    const double between = weight_bg * weight_fg * (mean_bg - mean_fg) * (mean_bg - mean_fg);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t;
}

BinaryImage binarize(const GrayImage& img, const BinarizeParams& params,
                     std::optional<int>* used_threshold) {
  const FloatImage blurred =
      gaussian_blur(to_float(params.invert ? invert(img) : img), params.blur_sigma);
  std::optional<int> threshold;
  if (params.mode == ThresholdMode::Fixed) {
    threshold = params.fixed_threshold;
  } else {
    threshold = otsu_threshold(blurred);
  }
  if (used_threshold) *used_threshold = threshold;

  BinaryImage mask(img.width(), img.height(), 0);
  if (!threshold) return mask;
  const double t = *threshold;
  auto src = blurred.pixels();
  auto dst = mask.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::lround(src[i]) > t ? 1 : 0;
  return mask;
}

namespace {

template <typename Reduce>
BinaryImage morph3x3(const BinaryImage& mask, std::uint8_t init, Reduce reduce) {
  const int w = mask.width();
  const int h = mask.height();
  BinaryImage out(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t acc = init;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          acc = reduce(acc, mask(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1)));
      out(x, y) = acc;
    }
  }
  return out;
}

}  // namespace

BinaryImage erode3x3(const BinaryImage& mask) {
  return morph3x3(mask, 1, [](std::uint8_t a, std::uint8_t b) { return std::min(a, b); });
}

BinaryImage dilate3x3(const BinaryImage& mask) {
  return morph3x3(mask, 0, [](std::uint8_t a, std::uint8_t b) { return std::max(a, b); });
}

BinaryImage morph_open3x3(const BinaryImage& mask) { return dilate3x3(erode3x3(mask)); }

Components connected_components(const BinaryImage& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Components result{Image<int>(w, h, 0), {}};
  std::vector<std::pair<int, int>> stack;

  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!mask(x0, y0) || result.labels(x0, y0)) continue;
      Component comp;
      comp.label = static_cast<int>(result.items.size()) + 1;
      comp.box = {x0, y0, x0, y0};
      result.labels(x0, y0) = comp.label;
      stack.assign(1, {x0, y0});
      while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        comp.m00 += 1.0;
        comp.m10 += x;
        comp.m01 += y;
        comp.box.x_min = std::min(comp.box.x_min, x);
        comp.box.x_max = std::max(comp.box.x_max, x);
        comp.box.y_min = std::min(comp.box.y_min, y);
        comp.box.y_max = std::max(comp.box.y_max, y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx;
            const int ny = y + dy;
            if (!mask.contains(nx, ny) || !mask(nx, ny) || result.labels(nx, ny)) continue;
            result.labels(nx, ny) = comp.label;
            stack.emplace_back(nx, ny);
          }
        }
      }
      result.items.push_back(comp);
    }
  }
  return result;
}

}  // namespace touchroller
