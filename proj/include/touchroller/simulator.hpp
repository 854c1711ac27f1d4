#pragma once

// Synthetic stand-in for the physical roller: renders the grayscale frames the
// camera would capture for a known scene and roll trajectory, together with
// exact ground truth.
//
// Scene values are contact heights in [0, 1]. Zero means no contact and is
// drawn as background; positive heights are drawn in the foreground range.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "touchroller/geometry.hpp"
#include "touchroller/grid.hpp"
#include "touchroller/image.hpp"

namespace touchroller {

inline constexpr std::uint8_t kBackgroundLevel = 20;
inline constexpr double kForegroundMin = 80.0;
inline constexpr double kForegroundMax = 255.0;

/// Intensity drawn for a contact height.
double contact_intensity(double height);

/// Height field sampled on a regular grid. Pixel (i, j) covers
/// [i * pitch, (i + 1) * pitch) x [j * pitch, (j + 1) * pitch) in scene mm.
struct Texture {
  FloatImage height;
  double pitch = 0.125;  // mm per texel

  double width_mm() const { return height.width() * pitch; }
  double length_mm() const { return height.height() * pitch; }
  /// Bilinear sample at scene coordinates (mm); zero outside the extent.
  double sample(double sx, double sy) const;
};

/// A stick tip pressed directly against the roller at central angle `angle`
/// and axial coordinate `x`.
struct SurfaceTap {
  double angle = 0.0;
  double x = 0.0;
  double radius = 1.5;  // tip radius, mm
};

enum class SceneKind { Texture, HemisphereGrid, SurfaceTaps };

struct SimScene {
  SceneKind kind = SceneKind::Texture;
  Texture texture;
  GridSpec grid;
  std::vector<int> masked_hemispheres;  // indices into grid.centers()
  std::vector<SurfaceTap> taps;
  double origin_x = 0.0;  // scene sx lying under world x = 0

  void validate() const;
};

/// Pure-rolling state: contact_y == radius * roll_angle.
struct RollState {
  double contact_y = 0.0;
  double roll_angle = 0.0;
  ExtrinsicPose pose;
  int frame_index = 0;

  static RollState at(double contact_y, const CylinderModel& cyl, const ExtrinsicPose& pose,
                      int frame_index = 0);
};

struct ContactTruth {
  int label = 0;
  SurfacePoint point;
  PixelPoint pixel;
};

struct FrameTruth {
  std::vector<ContactTruth> contacts;
  PixelPoint contact_line;  // nadir (x = 0) projection
  double band_top = 0.0;    // image rows bounding the contact band at x = 0
  double band_bottom = 0.0;
  std::optional<double> shift_to_next;  // px, negative for bottom-up motion
};

struct TactileFrame {
  GrayImage pixels;
  int index = 0;
  RollState state;
  FrameTruth truth;
};

struct RenderParams {
  double contact_halfwidth = 5.0;  // mm of arc on either side of the nadir
  int supersample = 1;             // samples per pixel along each axis
  double noise_sigma = 0.0;        // Gaussian pixel noise, intensity levels
  std::uint64_t seed = 0;
};

TactileFrame render_frame(const SimScene& scene, const RollState& state, const CameraIntrinsics& k,
                          const CylinderModel& cyl, const RenderParams& params = {});

/// Renders every state; frame i carries the ground-truth shift to frame i+1.
std::vector<TactileFrame> render_roll_sequence(const SimScene& scene,
                                               const std::vector<RollState>& trajectory,
                                               const CameraIntrinsics& k, const CylinderModel& cyl,
                                               const RenderParams& params = {});

/// Image-row displacement of the scene line midway between two contact lines.
double ground_truth_shift(const RollState& from, const RollState& to, const CameraIntrinsics& k,
                          const CylinderModel& cyl);

std::vector<RollState> constant_speed_trajectory(double start_y, double step_mm, int n_frames,
                                                 const CylinderModel& cyl,
                                                 const ExtrinsicPose& pose);

struct SpeedProfile {
  std::string name;
  double duration_s = 10.0;
};

/// Slow, Medium and Fast rolls over the same stretch.
std::vector<SpeedProfile> default_speed_profiles();

/// Roll of `distance_mm` in `duration_s` sampled at `fps`: round(duration *
/// fps) equal steps of distance / (duration * fps).
std::vector<RollState> timed_trajectory(double start_y, double distance_mm, double duration_s,
                                        double fps, const CylinderModel& cyl,
                                        const ExtrinsicPose& pose);

/// Deterministic fabric-like height field: a woven carrier plus smoothed
/// random relief, heights within [0.05, 1].
Texture make_fabric_texture(double width_mm, double length_mm, double pitch, std::uint64_t seed);

/// Top-down view of a texture at `px_per_mm`: pixel (c, r) shows scene point
/// (c / px_per_mm, r / px_per_mm).
GrayImage render_reference(const Texture& texture, double px_per_mm);

/// Stick taps at the given central angles, all at axial coordinate x.
std::vector<SurfaceTap> stick_taps(const std::vector<double>& angles, double x,
                                   double tip_radius = 1.5);

}  // namespace touchroller
