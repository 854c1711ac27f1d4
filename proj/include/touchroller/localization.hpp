#pragma once

// Contact localization: segment contact regions in a tactile frame, take
// their centroids and unproject them onto the roller surface.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "touchroller/geometry.hpp"
#include "touchroller/image.hpp"
#include "touchroller/imgproc.hpp"

namespace touchroller {

struct LocalizeParams {
  BinarizeParams binarize;  // blur sigma 2 px, Otsu unless a fixed threshold is set
  int min_area = 30;        // px; rejects speckle that survives the blur
};

/// Blurred and thresholded contact mask (foreground = 1).
BinaryImage preprocess(const GrayImage& frame, const BinarizeParams& params,
                       std::optional<int>* used_threshold = nullptr);

struct ContactRegion {
  PixelPoint centroid;  // m10 / m00, m01 / m00
  double area = 0.0;    // px
  BoundingBox box;
  int label = 0;  // label in ContactRegions::labels
};

struct ContactRegions {
  Image<int> labels;
  std::vector<ContactRegion> regions;  // area descending
};

ContactRegions find_contact_regions(const BinaryImage& mask, int min_area = 30);

struct ContactEstimate {
  ContactRegion region;
  SurfacePoint point;
  double angle = 0.0;           // central angle, rad
  double axial = 0.0;           // x, mm
  double axial_fraction = 0.0;  // 0 at x = -length/2, 1 at x = +length/2
};

struct LocalizationResult {
  std::vector<ContactEstimate> contacts;
  std::vector<ContactRegion> skipped;  // centroids with no visible solution
  std::optional<int> threshold;
};

LocalizationResult localize_contacts(const GrayImage& frame, const CameraIntrinsics& k,
                                     const ExtrinsicPose& pose, const CylinderModel& cyl,
                                     const LocalizeParams& params = {});

/// Unprojects already-detected centroids; regions without a visible
/// solution are moved to `skipped`.
LocalizationResult localize_regions(std::span<const ContactRegion> regions,
                                    const CameraIntrinsics& k, const ExtrinsicPose& pose,
                                    const CylinderModel& cyl);

/// Experiment layout: 5 central angles x 3 axial fractions.
std::array<double, 5> experiment_angles();
std::array<double, 3> experiment_axial_fractions();

struct TruthContact {
  SurfacePoint point;
  int angle_cell = 0;  // index into experiment_angles()
  int axial_cell = 0;  // index into experiment_axial_fractions()
};

struct CellStats {
  int count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for fewer than 2 samples
};

struct ContactMatch {
  int estimate = 0;
  int truth = 0;
  double error = 0.0;  // Euclidean, mm
  int angle_cell = 0;
  int axial_cell = 0;
};

CellStats cell_stats(std::span<const double> errors);

struct LocalizationReport {
  std::array<std::array<CellStats, 3>, 5> cells{};  // [angle][axial]
  std::vector<ContactMatch> matches;
  std::vector<int> unmatched_estimates;
  std::vector<int> unmatched_truth;
  CellStats overall;
};

/// Greedy nearest-neighbour matching within `gate_mm`, then per-cell error
/// statistics.
LocalizationReport evaluate_localization(std::span<const SurfacePoint> estimates,
                                         std::span<const TruthContact> truth,
                                         double gate_mm = 20.0);

/// Pools the matches of several per-frame reports and recomputes the cell
/// statistics. Unmatched indices keep their per-frame numbering.
LocalizationReport combine_reports(std::span<const LocalizationReport> reports);

/// Published hardware measurements (mean, std in mm) in the same
/// [angle][axial] layout, for side-by-side reporting.
struct ReferenceCell {
  double mean;
  double std;
};
const std::array<std::array<ReferenceCell, 3>, 5>& hardware_reference_table();

}  // namespace touchroller
