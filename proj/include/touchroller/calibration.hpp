#pragma once

// Extrinsic calibration from frames of the pressed hemisphere grid: blob
// detection, per-frame pose estimation by reprojection-error minimization, and
// averaging over frames.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "touchroller/geometry.hpp"
#include "touchroller/grid.hpp"
#include "touchroller/image.hpp"
#include "touchroller/imgproc.hpp"

namespace touchroller {

struct DetectParams {
  BinarizeParams binarize;  // Gaussian blur sigma 2, Otsu
  bool open = true;         // 3x3 morphological opening
  int min_area = 20;        // px
  int centroid_margin = 2;  // px added around each blob for the weighted centroid
};

/// Hemisphere centers in row-major order (sorted by v, then by u within each
/// row of `grid.cols`). Centroids are intensity-weighted above the image's
/// median (background) level. Throws GridIncomplete when the number of blobs
/// differs from grid.count().
std::vector<PixelPoint> detect_grid_centers(const GrayImage& frame, const GridSpec& grid,
                                            const DetectParams& params = {});

struct PoseEstimate {
  double theta = 0.0;
  double d = 0.0;
  double reprojection_rmse = 0.0;  // px
  int n_points = 0;
  int iterations = 0;
};

enum class PnpModel {
  Restricted,  // optimize theta and d directly
  Full,        // 6-DOF pose, then read off theta and the z translation
};

struct PnpOptions {
  PnpModel model = PnpModel::Restricted;
  int max_iterations = 100;
  double step_tolerance = 1e-10;
  int max_escalations = 10;
};

/// Levenberg-Marquardt minimization of the squared pixel reprojection error.
PoseEstimate solve_pnp(std::span<const SurfacePoint> object_points,
                       std::span<const PixelPoint> image_points, const CameraIntrinsics& k,
                       const ExtrinsicPose& init, const PnpOptions& options = {});

double reprojection_rmse(std::span<const SurfacePoint> object_points,
                         std::span<const PixelPoint> image_points, const CameraIntrinsics& k,
                         const ExtrinsicPose& pose);

/// Detected centers of one frame, or the reason detection failed.
struct GridDetection {
  std::optional<std::vector<PixelPoint>> centers;
  std::string error;
};

struct FrameCalibration {
  int frame = 0;
  std::optional<PoseEstimate> estimate;
  std::string error;
};

struct CalibrationResult {
  ExtrinsicPose pose;
  std::vector<FrameCalibration> frames;
  int n_valid = 0;
  int n_invalid = 0;
  double theta_std = 0.0;
  double d_std = 0.0;
};

struct CalibrationOptions {
  DetectParams detect;
  PnpOptions pnp;
  ExtrinsicPose init;
};

/// Averages per-frame estimates over the frames whose detection and solve
/// succeeded. Throws NoValidFrames when none did.
CalibrationResult calibrate(std::span<const GrayImage> frames, const GridSpec& grid,
                            const CameraIntrinsics& k, const CylinderModel& cyl,
                            const CalibrationOptions& options = {});

CalibrationResult calibrate_detections(std::span<const GridDetection> detections,
                                       const GridSpec& grid, const CameraIntrinsics& k,
                                       const CylinderModel& cyl,
                                       const CalibrationOptions& options = {});

}  // namespace touchroller
