#include "touchroller/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "touchroller/error.hpp"
#include "touchroller/imgproc.hpp"

namespace touchroller {

namespace {

double dome(double rho_sq, double radius) {
  const double t = 1.0 - rho_sq / (radius * radius);
  return t > 0.0 ? std::sqrt(t) : 0.0;
}

// Contact height at a surface point (x, phi) of the roller for one frame.
class Shader {
 public:
  Shader(const SimScene& scene, const RollState& state, const CylinderModel& cyl, double halfwidth)
      : scene_(scene), state_(state), cyl_(cyl), halfwidth_(halfwidth) {
    if (scene.kind == SceneKind::HemisphereGrid) {
      const auto centers = scene.grid.centers();
      for (std::size_t i = 0; i < centers.size(); ++i) {
        if (std::ranges::find(scene.masked_hemispheres, static_cast<int>(i)) ==
            scene.masked_hemispheres.end())
          hemispheres_.push_back(centers[i]);
      }
    }
  }

  double height(double x, double phi) const {
    if (std::abs(x) > 0.5 * cyl_.length) return 0.0;
    const double arc = cyl_.radius * phi;

    if (scene_.kind == SceneKind::SurfaceTaps) {
      double h = 0.0;
      for (const auto& tap : scene_.taps) {
        const double da = cyl_.radius * (phi - tap.angle);
        const double dx = x - tap.x;
        h = std::max(h, dome(da * da + dx * dx, tap.radius));
      }
      return h;
    }

    if (std::abs(arc) > halfwidth_) return 0.0;
    const double sx = x + scene_.origin_x;
    const double sy = state_.contact_y + arc;
    if (scene_.kind == SceneKind::Texture) return scene_.texture.sample(sx, sy);

    double h = 0.0;
    for (const auto& c : hemispheres_) {
      const double dx = sx - c.sx;
      const double dy = sy - c.sy;
      h = std::max(h, dome(dx * dx + dy * dy, scene_.grid.radius));
    }
    return h;
  }

 private:
  const SimScene& scene_;
  const RollState& state_;
  const CylinderModel& cyl_;
  double halfwidth_;
  std::vector<ScenePoint> hemispheres_;
};

double row_of(double phi, const ExtrinsicPose& pose, const CameraIntrinsics& k,
              const CylinderModel& cyl) {
  return project(surface_point(cyl, phi, 0.0), k, pose).pixel.v;
}

}  // namespace

double contact_intensity(double height) {
  if (!(height > 0.0)) return kBackgroundLevel;
  return kForegroundMin + (kForegroundMax - kForegroundMin) * std::min(height, 1.0);
}

double Texture::sample(double sx, double sy) const {
  if (height.empty() || sx < 0.0 || sy < 0.0 || sx > width_mm() || sy > length_mm()) return 0.0;
  const double fx = std::clamp(sx / pitch - 0.5, 0.0, height.width() - 1.0);
  const double fy = std::clamp(sy / pitch - 0.5, 0.0, height.height() - 1.0);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, height.width() - 1);
  const int y1 = std::min(y0 + 1, height.height() - 1);
  const double ax = fx - x0;
  const double ay = fy - y0;
  const double top = (1.0 - ax) * height(x0, y0) + ax * height(x1, y0);
  const double bottom = (1.0 - ax) * height(x0, y1) + ax * height(x1, y1);
  return (1.0 - ay) * top + ay * bottom;
}

void SimScene::validate() const {
  switch (kind) {
    case SceneKind::Texture:
      if (!(texture.pitch > 0.0)) throw Error(ErrorCode::InvalidArgument, "texture pitch must be positive");
      if (texture.height.empty()) throw Error(ErrorCode::InvalidArgument, "texture is empty");
      break;
    case SceneKind::HemisphereGrid:
      grid.validate();
      break;
    case SceneKind::SurfaceTaps:
      for (const auto& tap : taps)
        if (!(tap.radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "tap radius must be positive");
      break;
  }
}

RollState RollState::at(double contact_y, const CylinderModel& cyl, const ExtrinsicPose& pose,
                        int frame_index) {
  return {contact_y, contact_y / cyl.radius, pose, frame_index};
}

TactileFrame render_frame(const SimScene& scene, const RollState& state, const CameraIntrinsics& k,
                          const CylinderModel& cyl, const RenderParams& params) {
  k.validate();
  cyl.validate();
  state.pose.validate(cyl);
  scene.validate();
  if (params.supersample < 1) throw Error(ErrorCode::InvalidArgument, "supersample must be >= 1");
  if (!(params.contact_halfwidth > 0.0))
    throw Error(ErrorCode::InvalidArgument, "contact halfwidth must be positive");

  const double hw = params.contact_halfwidth;
  if (scene.kind == SceneKind::Texture &&
      (state.contact_y - hw < 0.0 || state.contact_y + hw > scene.texture.length_mm())) {
    throw Error(ErrorCode::SceneExhausted,
                "contact band at y = " + std::to_string(state.contact_y) +
                    " mm leaves the scene (length " + std::to_string(scene.texture.length_mm()) +
                    " mm)");
  }

  const int ss = params.supersample;
  std::vector<double> offsets(ss);
  for (int i = 0; i < ss; ++i) offsets[i] = (i + 0.5) / ss - 0.5;

  TactileFrame frame;
  frame.index = state.frame_index;
  frame.state = state;
  frame.pixels = GrayImage(k.width, k.height);

  std::mt19937_64 rng;
  if (params.noise_sigma > 0.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(params.seed),
                      static_cast<std::uint32_t>(params.seed >> 32),
                      static_cast<std::uint32_t>(state.frame_index)};
    rng.seed(seq);
  }
  std::normal_distribution<double> noise(0.0, params.noise_sigma > 0.0 ? params.noise_sigma : 1.0);

  const Shader shader(scene, state, cyl, hw);
  std::vector<double> sums(k.width);
  for (int y = 0; y < k.height; ++y) {
    std::ranges::fill(sums, 0.0);
    for (int j = 0; j < ss; ++j) {
      const auto row = solve_row(y + offsets[j], k, state.pose, cyl);
      for (int x = 0; x < k.width; ++x) {
        for (int i = 0; i < ss; ++i) {
          double h = 0.0;
          if (row) {
            const double axial = row->depth * (x + offsets[i] - k.u0) / k.fx;
            h = shader.height(axial, row->phi);
          }
          sums[x] += contact_intensity(h);
        }
      }
    }
    auto out = frame.pixels.row(y);
    for (int x = 0; x < k.width; ++x) {
      double value = sums[x] / (ss * ss);
      if (params.noise_sigma > 0.0) value += noise(rng);
      out[x] = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
    }
  }

  FrameTruth& truth = frame.truth;
  auto add_contact = [&](int label, const SurfacePoint& p) {
    const auto proj = project(p, k, state.pose);
    truth.contacts.push_back({label, p, proj.pixel});
  };
  if (scene.kind == SceneKind::HemisphereGrid) {
    const auto points = grid_object_points(scene.grid, cyl, state.contact_y, scene.origin_x);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (std::ranges::find(scene.masked_hemispheres, static_cast<int>(i)) ==
          scene.masked_hemispheres.end())
        add_contact(static_cast<int>(i), points[i]);
    }
  } else if (scene.kind == SceneKind::SurfaceTaps) {
    for (std::size_t i = 0; i < scene.taps.size(); ++i)
      add_contact(static_cast<int>(i), surface_point(cyl, scene.taps[i].angle, scene.taps[i].x));
  }
  truth.contact_line = project(surface_point(cyl, 0.0, 0.0), k, state.pose).pixel;
  truth.band_top = row_of(-hw / cyl.radius, state.pose, k, cyl);
  truth.band_bottom = row_of(hw / cyl.radius, state.pose, k, cyl);
  return frame;
}

double ground_truth_shift(const RollState& from, const RollState& to, const CameraIntrinsics& k,
                          const CylinderModel& cyl) {
  const double half_arc = 0.5 * (to.contact_y - from.contact_y) / cyl.radius;
  return row_of(-half_arc, to.pose, k, cyl) - row_of(half_arc, from.pose, k, cyl);
}

std::vector<TactileFrame> render_roll_sequence(const SimScene& scene,
                                               const std::vector<RollState>& trajectory,
                                               const CameraIntrinsics& k, const CylinderModel& cyl,
                                               const RenderParams& params) {
  bool increasing = true;
  bool decreasing = true;
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    increasing = increasing && trajectory[i].contact_y >= trajectory[i - 1].contact_y;
    decreasing = decreasing && trajectory[i].contact_y <= trajectory[i - 1].contact_y;
  }
  if (!increasing && !decreasing)
    throw Error(ErrorCode::InvalidArgument, "trajectory must be monotone in contact_y");

  std::vector<TactileFrame> frames;
  frames.reserve(trajectory.size());
  for (const auto& state : trajectory) frames.push_back(render_frame(scene, state, k, cyl, params));
  for (std::size_t i = 0; i + 1 < frames.size(); ++i)
    frames[i].truth.shift_to_next = ground_truth_shift(trajectory[i], trajectory[i + 1], k, cyl);
  return frames;
}

std::vector<RollState> constant_speed_trajectory(double start_y, double step_mm, int n_frames,
                                                 const CylinderModel& cyl,
                                                 const ExtrinsicPose& pose) {
  if (n_frames < 1) throw Error(ErrorCode::InvalidArgument, "trajectory needs at least one frame");
  std::vector<RollState> out;
  out.reserve(n_frames);
  for (int i = 0; i < n_frames; ++i) out.push_back(RollState::at(start_y + i * step_mm, cyl, pose, i));
  return out;
}

std::vector<SpeedProfile> default_speed_profiles() {
  return {{"slow", 15.0}, {"medium", 10.0}, {"fast", 5.0}};
}

std::vector<RollState> timed_trajectory(double start_y, double distance_mm, double duration_s,
                                        double fps, const CylinderModel& cyl,
                                        const ExtrinsicPose& pose) {
  if (!(duration_s > 0.0) || !(fps > 0.0))
    throw Error(ErrorCode::InvalidArgument, "duration and frame rate must be positive");
  const double steps = duration_s * fps;
  const int n_steps = static_cast<int>(std::lround(steps));
  return constant_speed_trajectory(start_y, distance_mm / steps, n_steps + 1, cyl, pose);
}

Texture make_fabric_texture(double width_mm, double length_mm, double pitch, std::uint64_t seed) {
  if (!(pitch > 0.0) || !(width_mm > 0.0) || !(length_mm > 0.0))
    throw Error(ErrorCode::InvalidArgument, "texture dimensions must be positive");
  const int w = static_cast<int>(std::lround(width_mm / pitch));
  const int h = static_cast<int>(std::lround(length_mm / pitch));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  FloatImage relief(w, h);
  for (double& p : relief.pixels()) p = uniform(rng);
  relief = gaussian_blur(relief, 1.0 / pitch);
  double sq = 0.0;
  for (double p : relief.pixels()) sq += p * p;
  const double rms = std::sqrt(sq / relief.size());

  constexpr double kTwoPi = 6.283185307179586;
  constexpr double kWarpPeriod = 4.0;  // mm
  constexpr double kWeftPeriod = 3.0;
  Texture tex{FloatImage(w, h), pitch};
  for (int j = 0; j < h; ++j) {
    const double sy = (j + 0.5) * pitch;
    for (int i = 0; i < w; ++i) {
      const double sx = (i + 0.5) * pitch;
      const double weave = std::sin(kTwoPi * sx / kWarpPeriod) * std::cos(kTwoPi * sy / kWeftPeriod);
      const double value = 0.5 + 0.18 * weave + 0.2 * relief(i, j) / rms;
      tex.height(i, j) = std::clamp(value, 0.05, 1.0);
    }
  }
  return tex;
}

GrayImage render_reference(const Texture& texture, double px_per_mm) {
  if (!(px_per_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
  const int w = static_cast<int>(std::lround(texture.width_mm() * px_per_mm));
  const int h = static_cast<int>(std::lround(texture.length_mm() * px_per_mm));
  GrayImage out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      out(c, r) = static_cast<std::uint8_t>(
          std::lround(contact_intensity(texture.sample(c / px_per_mm, r / px_per_mm))));
  return out;
}

std::vector<SurfaceTap> stick_taps(const std::vector<double>& angles, double x, double tip_radius) {
  std::vector<SurfaceTap> out;
  for (double a : angles) out.push_back({a, x, tip_radius});
  return out;
}

}  // namespace touchroller
