#include "touchroller/grid.hpp"

#include "touchroller/error.hpp"

namespace touchroller {

void GridSpec::validate() const {
  if (rows < 1 || cols < 1 || rows * cols < 4)
    throw Error(ErrorCode::InvalidArgument, "grid needs at least 4 hemispheres");
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "hemisphere radius must be positive");
  if (!(pitch > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid pitch must be positive");
}

std::vector<ScenePoint> GridSpec::centers() const {
  std::vector<ScenePoint> out;
  out.reserve(count());
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      out.push_back({center_x + (j - 0.5 * (cols - 1)) * pitch,
                     center_y + (i - 0.5 * (rows - 1)) * pitch});
    }
  }
  return out;
}

SurfacePoint wrap_onto_cylinder(const ScenePoint& p, const CylinderModel& cyl, double contact_y,
                                double origin_x) {
  return surface_point(cyl, (p.sy - contact_y) / cyl.radius, p.sx - origin_x);
}

std::vector<SurfacePoint> grid_object_points(const GridSpec& grid, const CylinderModel& cyl,
                                             double contact_y, double origin_x) {
  std::vector<SurfacePoint> out;
  for (const auto& c : grid.centers()) out.push_back(wrap_onto_cylinder(c, cyl, contact_y, origin_x));
  return out;
}

}  // namespace touchroller
