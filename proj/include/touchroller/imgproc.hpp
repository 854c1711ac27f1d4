#pragma once

// Small image-processing toolkit shared by the detection pipelines.

#include <optional>
#include <vector>

#include "touchroller/geometry.hpp"
#include "touchroller/image.hpp"

namespace touchroller {

enum class ThresholdMode { Otsu, Fixed };

struct BinarizeParams {
  double blur_sigma = 2.0;  // px; 0 disables blurring
  ThresholdMode mode = ThresholdMode::Otsu;
  int fixed_threshold = 128;  // foreground is value > threshold
  bool invert = false;        // dark-on-bright contacts
};

FloatImage to_float(const GrayImage& img);
GrayImage invert(const GrayImage& img);

/// Separable Gaussian blur with a kernel radius of ceil(3 sigma) and
/// replicated borders.
FloatImage gaussian_blur(const FloatImage& img, double sigma);

/// Otsu threshold over the 256-bin histogram of the rounded values. Returns
/// nullopt when the image holds a single intensity level.
std::optional<int> otsu_threshold(const FloatImage& img);

/// Blur, threshold, and return foreground = 1. The threshold that was used
/// (or nullopt for a degenerate Otsu image, which yields an empty mask) is
/// written to `used_threshold` when provided.
BinaryImage binarize(const GrayImage& img, const BinarizeParams& params,
                     std::optional<int>* used_threshold = nullptr);

BinaryImage erode3x3(const BinaryImage& mask);
BinaryImage dilate3x3(const BinaryImage& mask);
BinaryImage morph_open3x3(const BinaryImage& mask);

struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;  // inclusive
  int y_max = 0;

  bool contains(const PixelPoint& p) const {
    return p.u >= x_min && p.u <= x_max && p.v >= y_min && p.v <= y_max;
  }
};

struct Component {
  int label = 0;  // 1-based label in Components::labels
  double m00 = 0.0;
  double m10 = 0.0;
  double m01 = 0.0;
  BoundingBox box;

  PixelPoint centroid() const { return {m10 / m00, m01 / m00}; }
};

struct Components {
  Image<int> labels;  // 0 = background
  std::vector<Component> items;  // raster order of first pixel
};

/// 8-connected component labelling with raw binary moments.
Components connected_components(const BinaryImage& mask);

}  // namespace touchroller
