#pragma once

// Surface mapping from a rolling sequence: crop the thin contact patch from
// every frame, find the vertical shift between consecutive patches by
// exhaustive mean-absolute-error search, and stitch the patches into one map.
// The map can then be aligned to a reference view with a similarity-
// constrained affine transform.

#include <array>
#include <span>
#include <vector>

#include "touchroller/geometry.hpp"
#include "touchroller/image.hpp"

namespace touchroller {

inline constexpr int kDefaultPatchHeight = 70;

struct Patch {
  GrayImage pixels;
  int source_frame = 0;
  int top_row = 0;  // first frame row of the patch
};

/// Rows [(H - patch_height) / 2, ... + patch_height) of the frame. Throws
/// PatchTooTall when patch_height exceeds the frame height.
Patch crop_center_patch(const GrayImage& frame, int patch_height = kDefaultPatchHeight,
                        int source_frame = 0);

struct ShiftSearch {
  int min_shift = -25;
  int max_shift = 25;
  bool subpixel = false;  // parabolic refinement of the MAE minimum
};

/// b(row) ~ a(row - dy): negative dy means content moved up (bottom-up roll).
struct ShiftEstimate {
  int dy = 0;
  double mae = 0.0;              // mean absolute difference at dy, 8-bit levels
  std::vector<double> mae_curve;  // index i <-> min_shift + i; NaN without overlap
  int min_shift = -25;
  double refined_dy = 0.0;  // equals dy unless subpixel refinement is on
  bool unique = true;       // false when several shifts share the minimum
};

/// Exhaustive integer search. Ties go to the smaller |dy|, then to the
/// negative shift.
ShiftEstimate find_shift(const GrayImage& a, const GrayImage& b, const ShiftSearch& search = {});

enum class OverlapMode { Overwrite, Average };

struct StitchParams {
  int patch_height = kDefaultPatchHeight;
  ShiftSearch search;
  OverlapMode overlap = OverlapMode::Overwrite;
};

struct TactileMap {
  GrayImage pixels;
  std::vector<ShiftEstimate> shifts;  // shifts[i] relates frame i and i + 1
  std::vector<int> offsets;           // map row of each patch's first row
  int patch_height = kDefaultPatchHeight;
  int patch_top_row = 0;  // frame row where every patch starts
};

TactileMap stitch(std::span<const GrayImage> frames, const StitchParams& params = {});

/// x' = m[0] x + m[1] y + m[2], y' = m[3] x + m[4] y + m[5].
struct AffineTransform {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  PixelPoint apply(const PixelPoint& p) const;
  AffineTransform inverse() const;
};

/// Exact affine through three correspondences. Throws DegeneratePoints when
/// the sources are collinear.
AffineTransform affine_from_points(const std::array<PixelPoint, 3>& source,
                                   const std::array<PixelPoint, 3>& target);

struct AlignmentSpec {
  std::array<PixelPoint, 3> source;  // map points
  std::array<PixelPoint, 3> target;  // reference points
  AffineTransform transform;         // map -> reference
};

/// Completes each point pair to a right isosceles triangle by rotating the
/// second point 90 degrees about the first, then solves the affine exactly.
AlignmentSpec derive_affine(const std::array<PixelPoint, 2>& map_points,
                            const std::array<PixelPoint, 2>& ref_points);

/// Inverse-mapped bilinear warp into an out_width x out_height canvas; taps
/// outside the source read as 0.
GrayImage apply_affine(const GrayImage& image, const AffineTransform& transform, int out_width,
                       int out_height);

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// Rectangle of `image` covered by a warped source, shrunk until every pixel
/// inside it is fully covered.
Rect covered_region(int source_width, int source_height, const AffineTransform& transform,
                    int out_width, int out_height);

GrayImage crop(const GrayImage& image, const Rect& rect);

}  // namespace touchroller
