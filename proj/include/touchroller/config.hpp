#pragma once

// Run configuration for the command-line front end. Every section is
// optional in the file; missing keys take the defaults below and unknown keys
// are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "touchroller/calibration.hpp"
#include "touchroller/geometry.hpp"
#include "touchroller/grid.hpp"
#include "touchroller/localization.hpp"
#include "touchroller/mapping.hpp"

namespace touchroller {

inline constexpr int kSchemaVersion = 1;

enum class SimSceneChoice { Fabric, Grid, Taps };

struct SimulateConfig {
  SimSceneChoice scene = SimSceneChoice::Fabric;
  double fabric_width_mm = 80.0;
  double fabric_length_mm = 110.0;
  double texture_pitch_mm = 0.125;
  double fps = 6.6;
  double roll_distance_mm = 99.0;
  double start_y_mm = 5.5;
  std::map<std::string, double> durations_s{{"slow", 15.0}, {"medium", 10.0}, {"fast", 5.0}};
  double contact_halfwidth_mm = 5.0;
  int supersample = 1;
  double noise_sigma = 0.0;
  int grid_frames = 10;
  int grid_supersample = 4;
  double tap_radius_mm = 1.5;
  double reference_px_per_mm = 8.0;
};

struct CoverageConfig {
  double fabric_width_cm = 8.0;
  double fabric_length_cm = 11.0;
  double sensor_width_cm = 1.6;
  double sensor_length_cm = 1.2;
};

struct RunConfig {
  CameraIntrinsics intrinsics;
  CylinderModel cylinder;
  ExtrinsicPose pose;
  std::filesystem::path calibration_file;  // overrides `pose` when set
  bool flip_u = false;
  bool flip_v = false;
  std::uint64_t seed = 0;
  DetectParams detect;
  LocalizeParams localize;
  double gate_mm = 20.0;
  StitchParams mapping;
  GridSpec grid;
  SimulateConfig simulate;
  CoverageConfig coverage;
};

/// Parses and validates a configuration document. Relative calibration
/// paths resolve against `base_dir`. Throws ConfigInvalid.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& config);

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string config_hash(const RunConfig& config);

/// Reads theta and d from a calibration file written by the calibrate
/// command.
ExtrinsicPose read_calibration_file(const std::filesystem::path& path);

}  // namespace touchroller
