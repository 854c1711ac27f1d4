#pragma once

// Projection between points on the roller surface and tactile-image pixels.
//
// World frame: x along the cylinder axis, z pointing vertically down towards
// the contact, origin at the cylinder center. The camera sits near the center
// and is rotated by theta about x and offset by d along z. Millimeters and
// radians throughout; pixel coordinates are real-valued with integer values at
// pixel centers.

#include <optional>

namespace touchroller {

struct CylinderModel {
  double radius = 50.0;   // mm
  double length = 100.0;  // mm, axial extent centered on x = 0

  void validate() const;
  double circumference() const;
};

struct CameraIntrinsics {
  double fx = 400.0;  // normalized focal lengths (f / pixel size), px
  double fy = 400.0;
  double u0 = 320.0;  // principal point, px
  double v0 = 240.0;
  int width = 640;
  int height = 480;

  void validate() const;
};

struct ExtrinsicPose {
  double theta = 0.0;  // rotation about the cylinder axis, rad
  double d = 0.0;      // vertical translation of the optical center, mm

  void validate(const CylinderModel& cyl) const;
};

struct SurfacePoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

struct Projection {
  PixelPoint pixel;
  double depth = 0.0;  // the homogeneous scale factor lambda
};

/// Forward projection of a world point. Throws NonPositiveDepth when the
/// point lies at or behind the optical center.
Projection project(const SurfacePoint& p, const CameraIntrinsics& k, const ExtrinsicPose& pose);

/// Inverse of project() restricted to the visible lower half (z > 0) of the
/// cylinder. Throws NoVisibleSolution when the pixel cannot be produced by
/// any visible surface point.
SurfacePoint unproject(const PixelPoint& px, const CameraIntrinsics& k, const ExtrinsicPose& pose,
                       const CylinderModel& cyl);

/// Non-throwing variant of unproject() for per-pixel loops.
std::optional<SurfacePoint> try_unproject(const PixelPoint& px, const CameraIntrinsics& k,
                                          const ExtrinsicPose& pose, const CylinderModel& cyl);

/// Circumferential solution of the row equation only: the central angle phi
/// and depth lambda of the visible surface line imaged at row v. The axial
/// coordinate follows as x = lambda * (u - u0) / fx.
struct RowSolution {
  double phi = 0.0;
  double depth = 0.0;
};
std::optional<RowSolution> solve_row(double v, const CameraIntrinsics& k, const ExtrinsicPose& pose,
                                     const CylinderModel& cyl);

/// Bracketed bisection solver for the row equation. Used for the v == v0,
/// d != 0 case and as an independent check of the closed form.
std::optional<RowSolution> solve_row_bisection(double v, const CameraIntrinsics& k,
                                               const ExtrinsicPose& pose,
                                               const CylinderModel& cyl);

/// Angle between the downward vertical and the radius through p, in (-pi, pi].
double central_angle(const SurfacePoint& p);

/// Surface point at central angle phi and axial coordinate x.
SurfacePoint surface_point(const CylinderModel& cyl, double phi, double x);

/// Derivative dv/dphi of the image row at central angle phi (x-independent).
double row_rate(double phi, const CameraIntrinsics& k, const ExtrinsicPose& pose,
                const CylinderModel& cyl);

bool inside_image(const PixelPoint& px, const CameraIntrinsics& k);

}  // namespace touchroller
