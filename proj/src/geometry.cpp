#include "touchroller/geometry.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <string>

#include "touchroller/error.hpp"

namespace touchroller {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// Visible branch of the row equation: returns nullopt when the solved point
// is on the upper half of the cylinder.
std::optional<RowSolution> visible(double phi, double depth) {
  phi = wrap_angle(phi);
  if (!(std::cos(phi) > 0.0) || !(depth > 0.0)) return std::nullopt;
  return RowSolution{phi, depth};
}

}  // namespace

void CylinderModel::validate() const {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "cylinder radius must be positive");
  if (!(length > 0.0)) throw Error(ErrorCode::InvalidArgument, "cylinder length must be positive");
}

double CylinderModel::circumference() const { return 2.0 * kPi * radius; }

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  if (!(u0 >= 0.0 && u0 < width) || !(v0 >= 0.0 && v0 < height))
    throw Error(ErrorCode::InvalidArgument, "principal point outside the image");
}

void ExtrinsicPose::validate(const CylinderModel& cyl) const {
  if (!(std::abs(theta) < kPi / 2.0))
    throw Error(ErrorCode::InvalidArgument, "|theta| must be below pi/2");
  if (!(std::abs(d) < cyl.radius))
    throw Error(ErrorCode::InvalidArgument, "|d| must be below the cylinder radius");
}

Projection project(const SurfacePoint& p, const CameraIntrinsics& k, const ExtrinsicPose& pose) {
  const double s = std::sin(pose.theta);
  const double c = std::cos(pose.theta);
  const double depth = -p.y * s + p.z * c + pose.d;
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::NonPositiveDepth,
                "point projects with lambda = " + std::to_string(depth));
  }
  const double lu = p.x * k.fx - p.y * k.u0 * s + p.z * k.u0 * c + k.u0 * pose.d;
  const double lv = p.y * (k.fy * c - k.v0 * s) + p.z * (k.fy * s + k.v0 * c) + k.v0 * pose.d;
  return {{lu / depth, lv / depth}, depth};
}

std::optional<RowSolution> solve_row(double v, const CameraIntrinsics& k,
                                     const ExtrinsicPose& pose, const CylinderModel& cyl) {
  const double dv = v - k.v0;
  if (dv == 0.0 && pose.d != 0.0) return solve_row_bisection(v, k, pose, cyl);

  // With y = r sin(phi), z = r cos(phi) and psi = phi + theta the row
  // equation becomes fy r sin(psi) - dv r cos(psi) = dv d.
  const double r = cyl.radius;
  const double a = k.fy * r;
  const double b = dv * r;
  const double rhs = dv * pose.d;
  const double amp = std::hypot(a, b);
  const double ratio = rhs / amp;
  if (!(std::abs(ratio) <= 1.0)) return std::nullopt;

  const double delta = std::atan2(b, a);
  const double base = std::asin(ratio);
  const double candidates[2] = {delta + base, delta + kPi - base};

  int forward = 0;
  std::optional<RowSolution> found;
  for (double psi : candidates) {
    const double depth = r * std::cos(psi) + pose.d;
    if (depth > 0.0) {
      ++forward;
      found = RowSolution{psi - pose.theta, depth};
    }
  }
  // The camera center is inside the cylinder, so the viewing plane meets the
  // circle once in front of the camera and once behind it.
  assert(forward <= 1 && "ambiguous unprojection on the forward branch");
  if (!found) return std::nullopt;
  return visible(found->phi, found->depth);
}

std::optional<RowSolution> solve_row_bisection(double v, const CameraIntrinsics& k,
                                               const ExtrinsicPose& pose,
                                               const CylinderModel& cyl) {
  const double r = cyl.radius;
  const double dv = v - k.v0;
  if (!(std::abs(pose.d) < r)) return std::nullopt;

  // v(phi) is strictly increasing wherever lambda > 0, i.e. for
  // |phi + theta| < acos(-d / r).
  const double psi_max = std::acos(-pose.d / r);
  double lo = std::max(-kPi / 2.0, -psi_max - pose.theta);
  double hi = std::min(kPi / 2.0, psi_max - pose.theta);
  constexpr double kEdge = 1e-9;
  lo += kEdge;
  hi -= kEdge;
  if (!(lo < hi)) return std::nullopt;

  auto residual = [&](double phi) {
    const double psi = phi + pose.theta;
    return k.fy * r * std::sin(psi) - dv * (r * std::cos(psi) + pose.d);
  };
  double f_lo = residual(lo);
  const double f_hi = residual(hi);
  if (f_lo > 0.0 || f_hi < 0.0) return std::nullopt;

  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = residual(mid);
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  const double phi = 0.5 * (lo + hi);
  return visible(phi, r * std::cos(phi + pose.theta) + pose.d);
}

std::optional<SurfacePoint> try_unproject(const PixelPoint& px, const CameraIntrinsics& k,
                                          const ExtrinsicPose& pose, const CylinderModel& cyl) {
  const auto row = solve_row(px.v, k, pose, cyl);
  if (!row) return std::nullopt;
  return SurfacePoint{row->depth * (px.u - k.u0) / k.fx, cyl.radius * std::sin(row->phi),
                      cyl.radius * std::cos(row->phi)};
}

SurfacePoint unproject(const PixelPoint& px, const CameraIntrinsics& k, const ExtrinsicPose& pose,
                       const CylinderModel& cyl) {
  auto p = try_unproject(px, k, pose, cyl);
  if (!p) {
    throw Error(ErrorCode::NoVisibleSolution, "pixel (" + std::to_string(px.u) + ", " +
                                                  std::to_string(px.v) +
                                                  ") does not image the visible surface");
  }
  return *p;
}

double central_angle(const SurfacePoint& p) {
  if (p.y == 0.0 && p.z == 0.0)
    throw Error(ErrorCode::DegeneratePoint, "central angle undefined on the axis");
  return std::atan2(p.y, p.z);
}

SurfacePoint surface_point(const CylinderModel& cyl, double phi, double x) {
  return {x, cyl.radius * std::sin(phi), cyl.radius * std::cos(phi)};
}

double row_rate(double phi, const CameraIntrinsics& k, const ExtrinsicPose& pose,
                const CylinderModel& cyl) {
  const double r = cyl.radius;
  const double psi = phi + pose.theta;
  const double depth = r * std::cos(psi) + pose.d;
  return k.fy * r * (r + pose.d * std::cos(psi)) / (depth * depth);
}

bool inside_image(const PixelPoint& px, const CameraIntrinsics& k) {
  return px.u >= 0.0 && px.v >= 0.0 && px.u <= k.width - 1 && px.v <= k.height - 1;
}

}  // namespace touchroller
