#pragma once

#include <vector>

#include "touchroller/geometry.hpp"

namespace touchroller {

/// Planar point in the flat scene under the roller (mm). sx runs parallel to
/// the cylinder axis, sy along the rolling direction.
struct ScenePoint {
  double sx = 0.0;
  double sy = 0.0;
};

/// Hemisphere calibration grid: `rows` along the rolling direction, `cols`
/// along the cylinder axis, centered at (center_x, center_y) in scene
/// coordinates.
struct GridSpec {
  int rows = 2;
  int cols = 5;
  double radius = 1.0;  // hemisphere radius, mm
  double pitch = 6.0;   // center spacing, mm
  double center_x = 0.0;
  double center_y = 0.0;

  void validate() const;
  int count() const { return rows * cols; }

  /// Hemisphere centers in row-major order (rows by increasing sy, columns
  /// by increasing sx).
  std::vector<ScenePoint> centers() const;
};

/// Wraps a flat scene point onto the cylinder by arc length: the point
/// contacting the nadir is (origin_x, contact_y).
SurfacePoint wrap_onto_cylinder(const ScenePoint& p, const CylinderModel& cyl, double contact_y,
                                double origin_x);

/// Hemisphere apexes lifted onto the cylinder, in GridSpec::centers() order.
std::vector<SurfacePoint> grid_object_points(const GridSpec& grid, const CylinderModel& cyl,
                                             double contact_y = 0.0, double origin_x = 0.0);

}  // namespace touchroller
