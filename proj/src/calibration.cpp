#include "touchroller/calibration.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include "touchroller/error.hpp"

namespace touchroller {

namespace {

int median_level(const GrayImage& img) {
  std::array<std::size_t, 256> hist{};
  for (auto p : img.pixels()) ++hist[p];
  std::size_t seen = 0;
  for (int i = 0; i < 256; ++i) {
    seen += hist[i];
    if (2 * seen >= img.size()) return i;
  }
  return 255;
}

// Generic Levenberg-Marquardt over a small parameter vector. `residuals`
// returns false when the parameters are outside the model's domain.
template <int N>
struct LevenbergMarquardt {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Jac = Eigen::Matrix<double, Eigen::Dynamic, N>;

  std::function<bool(const Vec&, Eigen::VectorXd&, Jac*)> residuals;
  PnpOptions options;

  int minimize(Vec& params) const {
    Eigen::VectorXd r;
    Jac jac;
    if (!residuals(params, r, &jac))
      throw Error(ErrorCode::InvalidArgument, "initial pose puts points behind the camera");
    double cost = r.squaredNorm();
    double mu = 1e-3;
    int accepted = 0;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
      const Eigen::Matrix<double, N, N> hess = jac.transpose() * jac;
      const Vec grad = jac.transpose() * r;
      int escalations = 0;
      bool converged = false;
      while (true) {
        Eigen::Matrix<double, N, N> damped = hess;
        for (int i = 0; i < N; ++i) damped(i, i) += mu * std::max(hess(i, i), 1e-12);
        const Vec step = damped.ldlt().solve(-grad);
        if (!step.allFinite() || step.norm() < options.step_tolerance) {
          converged = true;
          break;
        }
        const Vec candidate = params + step;
        Eigen::VectorXd r_new;
        Jac jac_new;
        if (residuals(candidate, r_new, &jac_new) && r_new.squaredNorm() < cost) {
          params = candidate;
          r = std::move(r_new);
          jac = std::move(jac_new);
          cost = r.squaredNorm();
          mu = std::max(mu * 0.1, 1e-15);
          ++accepted;
          converged = step.norm() < options.step_tolerance;
          break;
        }
        mu *= 10.0;
        if (++escalations >= options.max_escalations) {
          throw Error(ErrorCode::SolverDiverged,
                      "reprojection error kept increasing after " + std::to_string(escalations) +
                          " damping escalations");
        }
      }
      if (converged) break;
    }
    return accepted;
  }
};

void check_correspondences(std::span<const SurfacePoint> object_points,
                           std::span<const PixelPoint> image_points) {
  if (object_points.size() != image_points.size())
    throw Error(ErrorCode::InvalidArgument, "object and image point counts differ");
  if (object_points.size() < 4)
    throw Error(ErrorCode::InsufficientPoints,
                "need at least 4 correspondences, got " + std::to_string(object_points.size()));
}

PoseEstimate solve_restricted(std::span<const SurfacePoint> pts, std::span<const PixelPoint> px,
                              const CameraIntrinsics& k, const ExtrinsicPose& init,
                              const PnpOptions& options) {
  using LM = LevenbergMarquardt<2>;
  LM lm;
  lm.options = options;
  lm.residuals = [&](const LM::Vec& p, Eigen::VectorXd& r, LM::Jac* jac) {
    const double theta = p(0);
    const double d = p(1);
    if (!(std::abs(theta) < std::numbers::pi / 2)) return false;
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const auto n = static_cast<Eigen::Index>(pts.size());
    r.resize(2 * n);
    if (jac) jac->resize(2 * n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& w = pts[i];
      const double yc = w.y * c + w.z * s;
      const double depth = -w.y * s + w.z * c + d;
      if (!(depth > 0.0)) return false;
      const double inv = 1.0 / depth;
      r(2 * i) = k.u0 + k.fx * w.x * inv - px[i].u;
      r(2 * i + 1) = k.v0 + k.fy * yc * inv - px[i].v;
      if (jac) {
        // d(yc)/dtheta = depth - d, d(depth)/dtheta = -yc, d(depth)/dd = 1.
        const double inv2 = inv * inv;
        (*jac)(2 * i, 0) = k.fx * w.x * yc * inv2;
        (*jac)(2 * i, 1) = -k.fx * w.x * inv2;
        (*jac)(2 * i + 1, 0) = k.fy * ((depth - d) * depth + yc * yc) * inv2;
        (*jac)(2 * i + 1, 1) = -k.fy * yc * inv2;
      }
    }
    return true;
  };
  LM::Vec params(init.theta, init.d);
  PoseEstimate est;
  est.iterations = lm.minimize(params);
  est.theta = params(0);
  est.d = params(1);
  return est;
}

PoseEstimate solve_full(std::span<const SurfacePoint> pts, std::span<const PixelPoint> px,
                        const CameraIntrinsics& k, const ExtrinsicPose& init,
                        const PnpOptions& options) {
  using LM = LevenbergMarquardt<6>;
  auto rotation = [](const LM::Vec& p) {
    const Eigen::Vector3d w = p.head<3>();
    const double angle = w.norm();
    if (angle < 1e-15) return Eigen::Matrix3d::Identity().eval();
    return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
  };
  auto eval = [&](const LM::Vec& p, Eigen::VectorXd& r) {
    const Eigen::Matrix3d rot = rotation(p);
    const Eigen::Vector3d t = p.tail<3>();
    const auto n = static_cast<Eigen::Index>(pts.size());
    r.resize(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector3d cam = rot * Eigen::Vector3d(pts[i].x, pts[i].y, pts[i].z) + t;
      if (!(cam.z() > 0.0)) return false;
      r(2 * i) = k.u0 + k.fx * cam.x() / cam.z() - px[i].u;
      r(2 * i + 1) = k.v0 + k.fy * cam.y() / cam.z() - px[i].v;
    }
    return true;
  };

  LM lm;
  lm.options = options;
  lm.residuals = [&](const LM::Vec& p, Eigen::VectorXd& r, LM::Jac* jac) {
    if (!eval(p, r)) return false;
    if (!jac) return true;
    jac->resize(r.size(), 6);
    constexpr double h = 1e-7;
    Eigen::VectorXd plus;
    Eigen::VectorXd minus;
    for (int j = 0; j < 6; ++j) {
      LM::Vec pp = p;
      LM::Vec pm = p;
      pp(j) += h;
      pm(j) -= h;
      if (!eval(pp, plus) || !eval(pm, minus)) return false;
      jac->col(j) = (plus - minus) / (2.0 * h);
    }
    return true;
  };

  // The restricted rotation matrix is a rotation by -theta about x.
  LM::Vec params;
  params << -init.theta, 0.0, 0.0, 0.0, 0.0, init.d;
  PoseEstimate est;
  est.iterations = lm.minimize(params);
  const Eigen::Matrix3d rot = rotation(params);
  est.theta = std::atan2(rot(1, 2), rot(2, 2));
  est.d = params(5);
  return est;
}

double sorted_mean(std::vector<double> values) {
  std::ranges::sort(values);
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double spread(std::vector<double> values, double mean) {
  std::ranges::sort(values);
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

}  // namespace

std::vector<PixelPoint> detect_grid_centers(const GrayImage& frame, const GridSpec& grid,
                                            const DetectParams& params) {
  grid.validate();
  BinaryImage mask = binarize(frame, params.binarize);
  if (params.open) mask = morph_open3x3(mask);
  const Components comps = connected_components(mask);

  const GrayImage source = params.binarize.invert ? invert(frame) : frame;
  const double background = median_level(source);

  std::vector<PixelPoint> centers;
  for (const auto& c : comps.items) {
    if (c.m00 < params.min_area) continue;
    const int m = params.centroid_margin;
    double w_sum = 0.0;
    double u_sum = 0.0;
    double v_sum = 0.0;
    for (int y = std::max(0, c.box.y_min - m); y <= std::min(frame.height() - 1, c.box.y_max + m); ++y) {
      for (int x = std::max(0, c.box.x_min - m); x <= std::min(frame.width() - 1, c.box.x_max + m); ++x) {
        const int label = comps.labels(x, y);
        if (label != 0 && label != c.label) continue;
        const double w = std::max(0.0, source(x, y) - background);
        w_sum += w;
        u_sum += w * x;
        v_sum += w * y;
      }
    }
    centers.push_back(w_sum > 0.0 ? PixelPoint{u_sum / w_sum, v_sum / w_sum} : c.centroid());
  }

  if (static_cast<int>(centers.size()) != grid.count()) {
    throw Error(ErrorCode::GridIncomplete, "found " + std::to_string(centers.size()) +
                                               " blobs, expected " + std::to_string(grid.count()));
  }

  std::ranges::sort(centers, [](const PixelPoint& a, const PixelPoint& b) {
    return a.v != b.v ? a.v < b.v : a.u < b.u;
  });
  for (int row = 0; row < grid.rows; ++row) {
    auto first = centers.begin() + row * grid.cols;
    std::sort(first, first + grid.cols,
              [](const PixelPoint& a, const PixelPoint& b) { return a.u < b.u; });
  }
  return centers;
}

double reprojection_rmse(std::span<const SurfacePoint> object_points,
                         std::span<const PixelPoint> image_points, const CameraIntrinsics& k,
                         const ExtrinsicPose& pose) {
  check_correspondences(object_points, image_points);
  double acc = 0.0;
  for (std::size_t i = 0; i < object_points.size(); ++i) {
    const auto p = project(object_points[i], k, pose).pixel;
    const double du = p.u - image_points[i].u;
    const double dv = p.v - image_points[i].v;
    acc += du * du + dv * dv;
  }
  return std::sqrt(acc / static_cast<double>(object_points.size()));
}

PoseEstimate solve_pnp(std::span<const SurfacePoint> object_points,
                       std::span<const PixelPoint> image_points, const CameraIntrinsics& k,
                       const ExtrinsicPose& init, const PnpOptions& options) {
  check_correspondences(object_points, image_points);
  PoseEstimate est = options.model == PnpModel::Restricted
                         ? solve_restricted(object_points, image_points, k, init, options)
                         : solve_full(object_points, image_points, k, init, options);
  est.n_points = static_cast<int>(object_points.size());
  est.reprojection_rmse = reprojection_rmse(object_points, image_points, k, {est.theta, est.d});
  return est;
}

CalibrationResult calibrate_detections(std::span<const GridDetection> detections,
                                       const GridSpec& grid, const CameraIntrinsics& k,
                                       const CylinderModel& cyl,
                                       const CalibrationOptions& options) {
  const auto object_points = grid_object_points(grid, cyl);
  CalibrationResult result;
  std::vector<double> thetas;
  std::vector<double> ds;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    FrameCalibration fc;
    fc.frame = static_cast<int>(i);
    if (!detections[i].centers) {
      fc.error = detections[i].error;
    } else {
      try {
        fc.estimate = solve_pnp(object_points, *detections[i].centers, k, options.init, options.pnp);
        ExtrinsicPose{fc.estimate->theta, fc.estimate->d}.validate(cyl);
        thetas.push_back(fc.estimate->theta);
        ds.push_back(fc.estimate->d);
      } catch (const Error& e) {
        fc.estimate.reset();
        fc.error = e.what();
      }
    }
    (fc.estimate ? result.n_valid : result.n_invalid)++;
    result.frames.push_back(std::move(fc));
  }
  if (thetas.empty())
    throw Error(ErrorCode::NoValidFrames,
                "none of " + std::to_string(detections.size()) + " frames gave a pose");

  result.pose = {sorted_mean(thetas), sorted_mean(ds)};
  result.theta_std = spread(thetas, result.pose.theta);
  result.d_std = spread(ds, result.pose.d);
  return result;
}

CalibrationResult calibrate(std::span<const GrayImage> frames, const GridSpec& grid,
                            const CameraIntrinsics& k, const CylinderModel& cyl,
                            const CalibrationOptions& options) {
  std::vector<GridDetection> detections;
  detections.reserve(frames.size());
  for (const auto& frame : frames) {
    GridDetection det;
    try {
      det.centers = detect_grid_centers(frame, grid, options.detect);
    } catch (const Error& e) {
      det.error = e.what();
    }
    detections.push_back(std::move(det));
  }
  return calibrate_detections(detections, grid, k, cyl, options);
}

}  // namespace touchroller
