#include "touchroller/mapping.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "touchroller/error.hpp"

namespace touchroller {

Patch crop_center_patch(const GrayImage& frame, int patch_height, int source_frame) {
  if (patch_height < 1) throw Error(ErrorCode::InvalidArgument, "patch height must be positive");
  if (patch_height > frame.height()) {
    throw Error(ErrorCode::PatchTooTall, "patch of " + std::to_string(patch_height) +
                                             " rows exceeds frame height " +
                                             std::to_string(frame.height()));
  }
  const int top = (frame.height() - patch_height) / 2;
  Patch patch{GrayImage(frame.width(), patch_height), source_frame, top};
  for (int y = 0; y < patch_height; ++y) std::ranges::copy(frame.row(top + y), patch.pixels.row(y).begin());
  return patch;
}

ShiftEstimate find_shift(const GrayImage& a, const GrayImage& b, const ShiftSearch& search) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::DimensionMismatch, "patches differ in size");
  }
  if (search.min_shift > search.max_shift)
    throw Error(ErrorCode::InvalidArgument, "empty shift range");

  const int h = a.height();
  const int w = a.width();
  ShiftEstimate est;
  est.min_shift = search.min_shift;
  est.mae_curve.assign(search.max_shift - search.min_shift + 1,
                       std::numeric_limits<double>::quiet_NaN());

  struct Candidate {
    int dy;
    std::uint64_t sum;
    std::uint64_t count;
  };
  std::vector<Candidate> candidates;
  for (int dy = search.min_shift; dy <= search.max_shift; ++dy) {
    const int r0 = std::max(0, dy);
    const int r1 = std::min(h, h + dy);
    if (r0 >= r1) continue;
    std::uint64_t sum = 0;
    for (int r = r0; r < r1; ++r) {
      auto rb = b.row(r);
      auto ra = a.row(r - dy);
      for (int x = 0; x < w; ++x) sum += static_cast<std::uint64_t>(std::abs(rb[x] - ra[x]));
    }
    const std::uint64_t count = static_cast<std::uint64_t>(r1 - r0) * static_cast<std::uint64_t>(w);
    est.mae_curve[dy - search.min_shift] = static_cast<double>(sum) / static_cast<double>(count);
    candidates.push_back({dy, sum, count});
  }
  if (candidates.empty()) throw Error(ErrorCode::NoOverlap, "no candidate shift leaves overlapping rows");

  // Exact comparison of sum / count ratios, then the tie-break order.
  auto ratio_less = [](const Candidate& x, const Candidate& y) { return x.sum * y.count < y.sum * x.count; };
  auto preferred = [&](const Candidate& x, const Candidate& y) {
    if (ratio_less(x, y)) return true;
    if (ratio_less(y, x)) return false;
    if (std::abs(x.dy) != std::abs(y.dy)) return std::abs(x.dy) < std::abs(y.dy);
    return x.dy < y.dy;
  };
  const Candidate best = *std::ranges::min_element(candidates, preferred);
  const auto ties = std::ranges::count_if(
      candidates, [&](const Candidate& c) { return !ratio_less(c, best) && !ratio_less(best, c); });

  est.dy = best.dy;
  est.mae = static_cast<double>(best.sum) / static_cast<double>(best.count);
  est.unique = ties == 1;
  est.refined_dy = est.dy;
  if (search.subpixel) {
    const int i = est.dy - search.min_shift;
    if (i > 0 && i + 1 < static_cast<int>(est.mae_curve.size())) {
      const double lo = est.mae_curve[i - 1];
      const double mid = est.mae_curve[i];
      const double hi = est.mae_curve[i + 1];
      const double denom = lo - 2.0 * mid + hi;
      if (std::isfinite(lo) && std::isfinite(hi) && denom > 0.0)
        est.refined_dy = est.dy + 0.5 * (lo - hi) / denom;
    }
  }
  return est;
}

TactileMap stitch(std::span<const GrayImage> frames, const StitchParams& params) {
  if (frames.empty()) throw Error(ErrorCode::InvalidArgument, "stitching needs at least one frame");

  std::vector<Patch> patches;
  patches.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    patches.push_back(crop_center_patch(frames[i], params.patch_height, static_cast<int>(i)));
    if (frames[i].width() != frames[0].width())
      throw Error(ErrorCode::DimensionMismatch, "frames differ in width");
  }

  TactileMap map;
  map.patch_height = params.patch_height;
  map.patch_top_row = patches.front().top_row;

  // Patch i + 1 sits -dy rows below patch i.
  std::vector<double> position(patches.size(), 0.0);
  for (std::size_t i = 0; i + 1 < patches.size(); ++i) {
    map.shifts.push_back(find_shift(patches[i].pixels, patches[i + 1].pixels, params.search));
    position[i + 1] = position[i] - map.shifts.back().refined_dy;
  }
  std::vector<long> rows(position.size());
  std::ranges::transform(position, rows.begin(), [](double p) { return std::lround(p); });
  const long top = *std::ranges::min_element(rows);
  const long bottom = *std::ranges::max_element(rows) + params.patch_height;

  const int width = frames[0].width();
  const int height = static_cast<int>(bottom - top);
  map.offsets.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) map.offsets[i] = static_cast<int>(rows[i] - top);

  if (params.overlap == OverlapMode::Overwrite) {
    map.pixels = GrayImage(width, height, 0);
    for (std::size_t i = 0; i < patches.size(); ++i)
      for (int y = 0; y < params.patch_height; ++y)
        std::ranges::copy(patches[i].pixels.row(y), map.pixels.row(map.offsets[i] + y).begin());
  } else {
    Image<double> sum(width, height, 0.0);
    Image<int> count(width, height, 0);
    for (std::size_t i = 0; i < patches.size(); ++i) {
      for (int y = 0; y < params.patch_height; ++y) {
        for (int x = 0; x < width; ++x) {
          sum(x, map.offsets[i] + y) += patches[i].pixels(x, y);
          count(x, map.offsets[i] + y) += 1;
        }
      }
    }
    map.pixels = GrayImage(width, height, 0);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if (count(x, y) > 0)
          map.pixels(x, y) = static_cast<std::uint8_t>(std::lround(sum(x, y) / count(x, y)));
  }
  return map;
}

PixelPoint AffineTransform::apply(const PixelPoint& p) const {
  return {m[0] * p.u + m[1] * p.v + m[2], m[3] * p.u + m[4] * p.v + m[5]};
}

AffineTransform AffineTransform::inverse() const {
  const double det = m[0] * m[4] - m[1] * m[3];
  if (det == 0.0) throw Error(ErrorCode::DegeneratePoints, "singular affine transform");
  const double a = m[4] / det;
  const double b = -m[1] / det;
  const double d = -m[3] / det;
  const double e = m[0] / det;
  return {{a, b, -(a * m[2] + b * m[5]), d, e, -(d * m[2] + e * m[5])}};
}

AffineTransform affine_from_points(const std::array<PixelPoint, 3>& source,
                                   const std::array<PixelPoint, 3>& target) {
  Eigen::Matrix3d a;
  for (int i = 0; i < 3; ++i) a.row(i) << source[i].u, source[i].v, 1.0;
  const double area = (source[1].u - source[0].u) * (source[2].v - source[0].v) -
                      (source[2].u - source[0].u) * (source[1].v - source[0].v);
  if (std::abs(area) < 1e-12) throw Error(ErrorCode::DegeneratePoints, "source points are collinear");
  const Eigen::PartialPivLU<Eigen::Matrix3d> lu(a);
  const Eigen::Vector3d xs = lu.solve(Eigen::Vector3d(target[0].u, target[1].u, target[2].u));
  const Eigen::Vector3d ys = lu.solve(Eigen::Vector3d(target[0].v, target[1].v, target[2].v));
  return {{xs(0), xs(1), xs(2), ys(0), ys(1), ys(2)}};
}

AlignmentSpec derive_affine(const std::array<PixelPoint, 2>& map_points,
                            const std::array<PixelPoint, 2>& ref_points) {
  auto complete = [](const std::array<PixelPoint, 2>& p) {
    const double du = p[1].u - p[0].u;
    const double dv = p[1].v - p[0].v;
    if (du == 0.0 && dv == 0.0) throw Error(ErrorCode::DegeneratePoints, "alignment points coincide");
    return std::array<PixelPoint, 3>{p[0], p[1], PixelPoint{p[0].u - dv, p[0].v + du}};
  };
  AlignmentSpec spec;
  spec.source = complete(map_points);
  spec.target = complete(ref_points);
  spec.transform = affine_from_points(spec.source, spec.target);
  return spec;
}

GrayImage apply_affine(const GrayImage& image, const AffineTransform& transform, int out_width,
                       int out_height) {
  const AffineTransform inv = transform.inverse();
  GrayImage out(out_width, out_height, 0);
  auto tap = [&](int x, int y) -> double { return image.contains(x, y) ? image(x, y) : 0.0; };
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const PixelPoint s = inv.apply({static_cast<double>(x), static_cast<double>(y)});
      const double fx = std::floor(s.u);
      const double fy = std::floor(s.v);
      if (fx < -1.0 || fy < -1.0 || fx > image.width() || fy > image.height()) continue;
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      const double ax = s.u - fx;
      const double ay = s.v - fy;
      double value = 0.0;
      if ((1.0 - ax) * (1.0 - ay) > 0.0) value += (1.0 - ax) * (1.0 - ay) * tap(x0, y0);
      if (ax * (1.0 - ay) > 0.0) value += ax * (1.0 - ay) * tap(x0 + 1, y0);
      if ((1.0 - ax) * ay > 0.0) value += (1.0 - ax) * ay * tap(x0, y0 + 1);
      if (ax * ay > 0.0) value += ax * ay * tap(x0 + 1, y0 + 1);
      out(x, y) = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
    }
  }
  return out;
}

Rect covered_region(int source_width, int source_height, const AffineTransform& transform,
                    int out_width, int out_height) {
  const GrayImage coverage =
      apply_affine(GrayImage(source_width, source_height, 255), transform, out_width, out_height);
  auto full = [&](int x, int y) { return coverage(x, y) == 255; };

  int x0 = out_width;
  int y0 = out_height;
  int x1 = -1;
  int y1 = -1;
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      if (!full(x, y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  auto row_ok = [&](int y) {
    for (int x = x0; x <= x1; ++x)
      if (!full(x, y)) return false;
    return true;
  };
  auto col_ok = [&](int x) {
    for (int y = y0; y <= y1; ++y)
      if (!full(x, y)) return false;
    return true;
  };
  bool changed = true;
  while (changed && x0 <= x1 && y0 <= y1) {
    changed = false;
    if (!row_ok(y0)) { ++y0; changed = true; }
    if (y0 <= y1 && !row_ok(y1)) { --y1; changed = true; }
    if (y0 > y1) break;
    if (!col_ok(x0)) { ++x0; changed = true; }
    if (x0 <= x1 && !col_ok(x1)) { --x1; changed = true; }
  }
  if (x0 > x1 || y0 > y1) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

GrayImage crop(const GrayImage& image, const Rect& rect) {
  if (rect.x < 0 || rect.y < 0 || rect.x + rect.width > image.width() ||
      rect.y + rect.height > image.height())
    throw Error(ErrorCode::InvalidArgument, "crop rectangle outside the image");
  GrayImage out(rect.width, rect.height);
  for (int y = 0; y < rect.height; ++y)
    for (int x = 0; x < rect.width; ++x) out(x, y) = image(rect.x + x, rect.y + y);
  return out;
}

}  // namespace touchroller
