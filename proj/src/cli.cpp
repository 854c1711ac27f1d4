#include "touchroller/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>

#include "touchroller/calibration.hpp"
#include "touchroller/config.hpp"
#include "touchroller/error.hpp"
#include "touchroller/image_io.hpp"
#include "touchroller/localization.hpp"
#include "touchroller/mapping.hpp"
#include "touchroller/metrics.hpp"
#include "touchroller/report.hpp"
#include "touchroller/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace touchroller {

namespace {

constexpr double kPlausibleSsimMin = 0.2;
constexpr double kPlausibleSsimMax = 0.45;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

struct SimulateOptions {
  std::string scene;
};

struct FramesOptions {
  std::string frames;
  std::string truth;
  std::string calibration;
  std::string pnp = "restricted";
};

struct StitchOptions {
  std::string frames;
  std::string manifest;
  std::string reference;
  std::string align_manifest;
  std::vector<double> align_map;
  std::vector<double> align_ref;
  bool real_data = false;
};

struct EvaluateOptions {
  std::string image;
  std::string reference;
  bool real_data = false;
};

// Wall-clock timings per stage; reported but never compared.
class Timer {
 public:
  template <class F>
  auto stage(const std::string& name, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    struct Record {
      Timer& t;
      std::string name;
      std::chrono::steady_clock::time_point start;
      ~Record() {
        t.ms_[name] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                          .count();
      }
    } record{*this, name, start};
    current_ = name;
    return f();
  }
  const std::string& current() const { return current_; }
  json to_json() const { return ms_; }

 private:
  json ms_ = json::object();
  std::string current_ = "setup";
};

RunConfig load_run_config(const CommonOptions& common) {
  RunConfig config = common.config.empty() ? RunConfig{} : load_config(common.config);
  if (common.seed) config.seed = *common.seed;
  return config;
}

ExtrinsicPose resolve_pose(const RunConfig& config) {
  if (!config.calibration_file.empty()) return read_calibration_file(config.calibration_file);
  return config.pose;
}

// Mirror images so that centroids map to u' = (W - 1) - u and v' = (H - 1) - v.
GrayImage apply_flips(const GrayImage& img, bool flip_u, bool flip_v) {
  if (!flip_u && !flip_v) return img;
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out(x, y) = img(flip_u ? img.width() - 1 - x : x, flip_v ? img.height() - 1 - y : y);
  return out;
}

struct FrameSet {
  std::vector<fs::path> paths;
  std::vector<GrayImage> images;
};

FrameSet load_frames(const fs::path& dir, const RunConfig& config) {
  FrameSet set;
  set.paths = list_frames(dir);
  for (const auto& p : set.paths)
    set.images.push_back(apply_flips(read_gray(p), config.flip_u, config.flip_v));
  return set;
}

std::string frame_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05d.png", i);
  return buf;
}

json pixel_json(const PixelPoint& p) { return {{"u", p.u}, {"v", p.v}}; }
json point_json(const SurfacePoint& p) { return {{"x", p.x}, {"y", p.y}, {"z", p.z}}; }
json pose_json(const ExtrinsicPose& p) { return {{"theta", p.theta}, {"d", p.d}}; }

PixelPoint pixel_from(const json& j) { return {j.at("u").get<double>(), j.at("v").get<double>()}; }
SurfacePoint point_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()};
}

json stats_json(const CellStats& s) {
  return {{"count", s.count}, {"mean_mm", s.mean}, {"std_mm", s.std}};
}

json metrics_json(const QualityMetrics& q) {
  return {{"ssim", q.ssim}, {"psnr_db", number_or_inf(q.psnr)}, {"mae_percent", q.mae_percent}};
}

json plausibility_json(double ssim_value) {
  const bool ok = ssim_value >= kPlausibleSsimMin && ssim_value <= kPlausibleSsimMax;
  return {{"ssim_range", {kPlausibleSsimMin, kPlausibleSsimMax}}, {"passed", ok}};
}

RenderParams render_params(const RunConfig& config, int supersample) {
  RenderParams p;
  p.contact_halfwidth = config.simulate.contact_halfwidth_mm;
  p.supersample = supersample;
  p.noise_sigma = config.simulate.noise_sigma;
  p.seed = config.seed;
  return p;
}

json frame_truth_json(const TactileFrame& f, const std::string& file) {
  json contacts = json::array();
  for (const auto& c : f.truth.contacts)
    contacts.push_back({{"label", c.label}, {"point", point_json(c.point)}, {"pixel", pixel_json(c.pixel)}});
  json j = {{"index", f.index},
            {"file", file},
            {"contact_y_mm", f.state.contact_y},
            {"roll_angle", f.state.roll_angle},
            {"contact_line", pixel_json(f.truth.contact_line)},
            {"band_rows", {f.truth.band_top, f.truth.band_bottom}},
            {"contacts", contacts}};
  j["shift_to_next_px"] = f.truth.shift_to_next ? json(*f.truth.shift_to_next) : json(nullptr);
  return j;
}

void write_frames(const fs::path& dir, const std::vector<TactileFrame>& frames, json& entries) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string file = frame_name(static_cast<int>(i));
    write_png(dir / file, frames[i].pixels);
    entries.push_back(frame_truth_json(frames[i], file));
  }
}

json simulate_fabric(const RunConfig& config, const ExtrinsicPose& pose, const fs::path& out,
                     Timer& timer) {
  const auto& sim = config.simulate;
  const CameraIntrinsics& k = config.intrinsics;
  const CylinderModel& cyl = config.cylinder;

  SimScene scene;
  scene.kind = SceneKind::Texture;
  scene.origin_x = 0.5 * sim.fabric_width_mm;
  timer.stage("texture", [&] {
    scene.texture = make_fabric_texture(sim.fabric_width_mm, sim.fabric_length_mm,
                                        sim.texture_pitch_mm, config.seed);
    write_png(out / "reference.png", render_reference(scene.texture, sim.reference_px_per_mm));
  });

  json sequences = json::object();
  for (const auto& [name, duration] : sim.durations_s) {
    const auto frames = timer.stage("render_" + name, [&] {
      const auto traj = timed_trajectory(sim.start_y_mm, sim.roll_distance_mm, duration, sim.fps, cyl, pose);
      return render_roll_sequence(scene, traj, k, cyl, render_params(config, sim.supersample));
    });
    json entries = json::array();
    timer.stage("write_" + name, [&] { write_frames(out / name, frames, entries); });

    double abs_sum = 0.0;
    int n_shifts = 0;
    for (const auto& f : frames) {
      if (f.truth.shift_to_next) {
        abs_sum += std::abs(*f.truth.shift_to_next);
        ++n_shifts;
      }
    }
    const double mean_abs = n_shifts ? abs_sum / n_shifts : 0.0;
    const json manifest = {
        {"schema_version", kSchemaVersion},
        {"scene", "fabric"},
        {"sequence", name},
        {"duration_s", duration},
        {"fps", sim.fps},
        {"pose", pose_json(pose)},
        {"reference",
         {{"file", "../reference.png"},
          {"px_per_mm", sim.reference_px_per_mm},
          {"origin_x_mm", scene.origin_x}}},
        {"frames", entries},
    };
    write_json(out / name / "manifest.json", manifest);
    sequences[name] = {{"frames", frames.size()}, {"duration_s", duration}, {"mean_abs_shift_px", mean_abs}};
  }
  return {{"scene", "fabric"},
          {"reference", "reference.png"},
          {"origin_x_mm", scene.origin_x},
          {"sequences", sequences}};
}

json simulate_grid(const RunConfig& config, const ExtrinsicPose& pose, const fs::path& out,
                   Timer& timer) {
  SimScene scene;
  scene.kind = SceneKind::HemisphereGrid;
  scene.grid = config.grid;
  const auto frames = timer.stage("render", [&] {
    std::vector<RollState> states;
    for (int i = 0; i < config.simulate.grid_frames; ++i)
      states.push_back(RollState::at(0.0, config.cylinder, pose, i));
    std::vector<TactileFrame> rendered;
    for (const auto& s : states)
      rendered.push_back(render_frame(scene, s, config.intrinsics, config.cylinder,
                                      render_params(config, config.simulate.grid_supersample)));
    return rendered;
  });
  json entries = json::array();
  timer.stage("write", [&] { write_frames(out, frames, entries); });
  write_json(out / "manifest.json", {{"schema_version", kSchemaVersion},
                                     {"scene", "grid"},
                                     {"pose", pose_json(pose)},
                                     {"frames", entries}});
  return {{"scene", "grid"}, {"frames", frames.size()}, {"pose", pose_json(pose)}};
}

// Six frames: front and back tap sets at each of the three axial positions.
json simulate_taps(const RunConfig& config, const ExtrinsicPose& pose, const fs::path& out,
                   Timer& timer) {
  const auto angles = experiment_angles();
  const auto fractions = experiment_axial_fractions();
  const std::array<std::array<int, 3>, 2> sets{{{0, 1, 2}, {2, 3, 4}}};

  json entries = json::array();
  timer.stage("render", [&] {
    int index = 0;
    for (int ax = 0; ax < 3; ++ax) {
      const double x = (fractions[ax] - 0.5) * config.cylinder.length;
      for (const auto& set : sets) {
        SimScene scene;
        scene.kind = SceneKind::SurfaceTaps;
        std::vector<double> set_angles;
        for (int a : set) set_angles.push_back(angles[a]);
        scene.taps = stick_taps(set_angles, x, config.simulate.tap_radius_mm);
        const auto frame =
            render_frame(scene, RollState::at(0.0, config.cylinder, pose, index), config.intrinsics,
                         config.cylinder, render_params(config, config.simulate.supersample));
        const std::string file = frame_name(index);
        write_png(out / file, frame.pixels);
        json truth = json::array();
        for (std::size_t i = 0; i < frame.truth.contacts.size(); ++i) {
          const auto& c = frame.truth.contacts[i];
          truth.push_back({{"angle_cell", set[i]},
                           {"axial_cell", ax},
                           {"point", point_json(c.point)},
                           {"pixel", pixel_json(c.pixel)}});
        }
        entries.push_back({{"index", index}, {"file", file}, {"contacts", truth}});
        ++index;
      }
    }
  });
  write_json(out / "manifest.json", {{"schema_version", kSchemaVersion},
                                     {"scene", "taps"},
                                     {"pose", pose_json(pose)},
                                     {"frames", entries}});
  return {{"scene", "taps"}, {"frames", entries.size()}, {"pose", pose_json(pose)}};
}

json run_simulate(const RunConfig& config, const SimulateOptions& opts, const fs::path& out,
                  Timer& timer) {
  RunConfig effective = config;
  if (!opts.scene.empty()) {
    if (opts.scene == "fabric") {
      effective.simulate.scene = SimSceneChoice::Fabric;
    } else if (opts.scene == "grid") {
      effective.simulate.scene = SimSceneChoice::Grid;
    } else if (opts.scene == "taps") {
      effective.simulate.scene = SimSceneChoice::Taps;
    } else {
      throw Error(ErrorCode::ConfigInvalid, "--scene must be fabric, grid or taps");
    }
  }
  const ExtrinsicPose pose = resolve_pose(effective);
  switch (effective.simulate.scene) {
    case SimSceneChoice::Fabric: return simulate_fabric(effective, pose, out, timer);
    case SimSceneChoice::Grid: return simulate_grid(effective, pose, out, timer);
    case SimSceneChoice::Taps: return simulate_taps(effective, pose, out, timer);
  }
  return {};
}

json run_calibrate(const RunConfig& config, const FramesOptions& opts, const fs::path& out,
                   Timer& timer) {
  const FrameSet frames = timer.stage("load", [&] { return load_frames(opts.frames, config); });
  CalibrationOptions options;
  options.detect = config.detect;
  options.init = config.pose;
  if (opts.pnp == "full") {
    options.pnp.model = PnpModel::Full;
  } else if (opts.pnp != "restricted") {
    throw Error(ErrorCode::ConfigInvalid, "--pnp must be restricted or full");
  }
  const CalibrationResult result = timer.stage("calibrate", [&] {
    return calibrate(frames.images, config.grid, config.intrinsics, config.cylinder, options);
  });

  json table = json::array();
  for (const auto& f : result.frames) {
    json row = {{"frame", frames.paths[f.frame].filename().string()}};
    if (f.estimate) {
      row["theta"] = f.estimate->theta;
      row["d"] = f.estimate->d;
      row["reprojection_rmse_px"] = f.estimate->reprojection_rmse;
      row["iterations"] = f.estimate->iterations;
    } else {
      row["error"] = f.error;
    }
    table.push_back(row);
  }
  json calib = {{"schema_version", kSchemaVersion},
                {"theta", result.pose.theta},
                {"d", result.pose.d},
                {"theta_std", result.theta_std},
                {"d_std", result.d_std},
                {"n_valid", result.n_valid},
                {"n_invalid", result.n_invalid}};
  write_json(out / "calibration.json", calib);

  json results = calib;
  results.erase("schema_version");
  results["pnp"] = opts.pnp;
  results["frames"] = table;
  if (!opts.truth.empty()) {
    const json truth = read_json(opts.truth);
    const double theta = truth.at("pose").at("theta").get<double>();
    const double d = truth.at("pose").at("d").get<double>();
    results["truth"] = {{"theta", theta}, {"d", d}};
    results["theta_error"] = result.pose.theta - theta;
    results["d_error"] = result.pose.d - d;
  }
  return results;
}

json run_localize(const RunConfig& config, const FramesOptions& opts, const fs::path& out,
                  Timer& timer) {
  RunConfig effective = config;
  if (!opts.calibration.empty()) effective.calibration_file = opts.calibration;
  const ExtrinsicPose pose = resolve_pose(effective);
  const FrameSet frames = timer.stage("load", [&] { return load_frames(opts.frames, config); });

  std::optional<json> truth;
  if (!opts.truth.empty()) truth = read_json(opts.truth);

  json per_frame = json::array();
  std::vector<LocalizationReport> reports;
  timer.stage("localize", [&] {
    for (std::size_t i = 0; i < frames.images.size(); ++i) {
      const std::string file = frames.paths[i].filename().string();
      const LocalizationResult r =
          localize_contacts(frames.images[i], config.intrinsics, pose, config.cylinder, config.localize);
      json contacts = json::array();
      std::vector<SurfacePoint> points;
      for (const auto& c : r.contacts) {
        points.push_back(c.point);
        contacts.push_back({{"pixel", pixel_json(c.region.centroid)},
                            {"area_px", c.region.area},
                            {"point", point_json(c.point)},
                            {"angle_rad", c.angle},
                            {"axial_mm", c.axial},
                            {"axial_fraction", c.axial_fraction}});
      }
      json entry = {{"frame", file}, {"contacts", contacts}, {"skipped", r.skipped.size()}};
      entry["threshold"] = r.threshold ? json(*r.threshold) : json(nullptr);

      if (truth) {
        const json* match = nullptr;
        for (const auto& f : truth->at("frames"))
          if (f.at("file").get<std::string>() == file) match = &f;
        if (!match) throw Error(ErrorCode::InputMissing, "no truth entry for " + file);
        std::vector<TruthContact> t;
        for (const auto& c : match->at("contacts"))
          t.push_back({point_from(c.at("point")), c.at("angle_cell").get<int>(), c.at("axial_cell").get<int>()});
        reports.push_back(evaluate_localization(points, t, config.gate_mm));
        json errors = json::array();
        for (const auto& m : reports.back().matches)
          errors.push_back({{"contact", m.estimate},
                            {"angle_cell", m.angle_cell},
                            {"axial_cell", m.axial_cell},
                            {"error_mm", m.error}});
        entry["matches"] = errors;
        entry["unmatched_truth"] = reports.back().unmatched_truth.size();
        entry["unmatched_estimates"] = reports.back().unmatched_estimates.size();
      }
      per_frame.push_back(entry);
    }
  });

  json results = {{"pose", pose_json(pose)}, {"frames", per_frame}};
  if (truth) {
    const LocalizationReport combined = combine_reports(reports);
    const auto angles = experiment_angles();
    const auto fractions = experiment_axial_fractions();
    const auto& reference = hardware_reference_table();
    json table = json::array();
    for (int a = 0; a < 5; ++a)
      for (int x = 0; x < 3; ++x) {
        json cell = stats_json(combined.cells[a][x]);
        cell["angle_rad"] = angles[a];
        cell["axial_fraction"] = fractions[x];
        cell["hardware_reference"] = {{"mean_mm", reference[a][x].mean}, {"std_mm", reference[a][x].std}};
        table.push_back(cell);
      }
    results["error_table"] = table;
    results["overall"] = stats_json(combined.overall);
    results["unmatched_truth"] = combined.unmatched_truth.size();
    results["unmatched_estimates"] = combined.unmatched_estimates.size();
  }
  write_json(out / "contacts.json", results);
  return results;
}

std::array<PixelPoint, 2> point_pair(const std::vector<double>& v, const char* flag) {
  if (v.size() != 4) throw Error(ErrorCode::ConfigInvalid, std::string(flag) + " needs four numbers u1 v1 u2 v2");
  return {PixelPoint{v[0], v[1]}, PixelPoint{v[2], v[3]}};
}

json run_stitch(const RunConfig& config, const StitchOptions& opts, const fs::path& out, Timer& timer) {
  const FrameSet frames = timer.stage("load", [&] { return load_frames(opts.frames, config); });
  const TactileMap map = timer.stage("stitch", [&] { return stitch(frames.images, config.mapping); });
  write_png(out / "map.png", map.pixels);

  std::optional<json> manifest;
  if (!opts.manifest.empty()) manifest = read_json(opts.manifest);
  if (!opts.align_manifest.empty()) manifest = read_json(opts.align_manifest);
  if (manifest && manifest->at("frames").size() != frames.images.size())
    throw Error(ErrorCode::InputMissing, "manifest frame count does not match the frame directory");

  json shifts = json::array();
  int exact = 0;
  int within_one = 0;
  for (std::size_t i = 0; i < map.shifts.size(); ++i) {
    const auto& s = map.shifts[i];
    json row = {{"from", i}, {"to", i + 1}, {"dy", s.dy}, {"mae", s.mae}, {"unique", s.unique}};
    if (config.mapping.search.subpixel) row["refined_dy"] = s.refined_dy;
    if (manifest) {
      const json& t = manifest->at("frames")[i].at("shift_to_next_px");
      if (!t.is_null()) {
        const int truth = static_cast<int>(std::lround(t.get<double>()));
        row["truth_dy"] = t.get<double>();
        exact += s.dy == truth;
        within_one += std::abs(s.dy - truth) <= 1;
      }
    }
    shifts.push_back(row);
  }

  json results = {{"frames", frames.images.size()},
                  {"map", {{"file", "map.png"}, {"width", map.pixels.width()}, {"height", map.pixels.height()}}},
                  {"patch_height", map.patch_height},
                  {"patch_top_row", map.patch_top_row},
                  {"offsets", map.offsets},
                  {"shifts", shifts}};
  if (manifest && !map.shifts.empty()) {
    const double n = static_cast<double>(map.shifts.size());
    results["shift_agreement"] = {{"exact_fraction", exact / n}, {"within_one_fraction", within_one / n}};
  }

  if (opts.reference.empty()) return results;

  std::array<PixelPoint, 2> map_pts;
  std::array<PixelPoint, 2> ref_pts;
  if (!opts.align_manifest.empty()) {
    const json& f = manifest->at("frames");
    const json& ref = manifest->at("reference");
    const double s = ref.at("px_per_mm").get<double>();
    const double ox = ref.at("origin_x_mm").get<double>();
    const std::size_t last = frames.images.size() - 1;
    for (std::size_t j = 0; j < 2; ++j) {
      const std::size_t i = j == 0 ? 0 : last;
      const PixelPoint line = pixel_from(f[i].at("contact_line"));
      map_pts[j] = {line.u, map.offsets[i] + line.v - map.patch_top_row};
      ref_pts[j] = {ox * s, f[i].at("contact_y_mm").get<double>() * s};
    }
  } else if (!opts.align_map.empty() || !opts.align_ref.empty()) {
    map_pts = point_pair(opts.align_map, "--align-map");
    ref_pts = point_pair(opts.align_ref, "--align-ref");
  } else {
    throw Error(ErrorCode::ConfigInvalid, "--reference needs --align-manifest or --align-map/--align-ref");
  }

  const GrayImage reference = read_gray(opts.reference);
  timer.stage("align", [&] {
    const AlignmentSpec spec = derive_affine(map_pts, ref_pts);
    const GrayImage aligned = apply_affine(map.pixels, spec.transform, reference.width(), reference.height());
    const Rect rect = covered_region(map.pixels.width(), map.pixels.height(), spec.transform,
                                     reference.width(), reference.height());
    if (rect.width <= 0 || rect.height <= 0)
      throw Error(ErrorCode::DegeneratePoints, "aligned map does not cover the reference");
    const GrayImage a = crop(aligned, rect);
    const GrayImage b = crop(reference, rect);
    write_png(out / "aligned.png", aligned);
    write_png(out / "aligned_crop.png", a);
    write_png(out / "reference_crop.png", b);

    json src = json::array();
    json dst = json::array();
    for (int i = 0; i < 3; ++i) {
      src.push_back(pixel_json(spec.source[i]));
      dst.push_back(pixel_json(spec.target[i]));
    }
    const QualityMetrics q = compare_images(a, b);
    results["alignment"] = {{"map_points", src},
                            {"reference_points", dst},
                            {"affine", spec.transform.m},
                            {"covered", {{"x", rect.x}, {"y", rect.y}, {"width", rect.width}, {"height", rect.height}}}};
    results["metrics"] = metrics_json(q);
    if (opts.real_data) results["plausibility"] = plausibility_json(q.ssim);
  });
  return results;
}

json run_evaluate(const EvaluateOptions& opts, Timer& timer) {
  const GrayImage a = read_gray(opts.image);
  const GrayImage b = read_gray(opts.reference);
  const QualityMetrics q = timer.stage("metrics", [&] { return compare_images(a, b); });
  json results = {{"image", fs::path(opts.image).filename().string()},
                  {"reference", fs::path(opts.reference).filename().string()},
                  {"width", a.width()},
                  {"height", a.height()},
                  {"metrics", metrics_json(q)}};
  if (opts.real_data) results["plausibility"] = plausibility_json(q.ssim);
  return results;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid: return kExitConfig;
    case ErrorCode::InputMissing:
    case ErrorCode::DimensionMismatch: return kExitInput;
    default: return kExitPipeline;
  }
}

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--config", common.config, "JSON configuration file");
  cmd->add_option("--seed", common.seed, "random seed (overrides the config)");
  cmd->add_option("--out-dir", common.out_dir, "output directory")->required();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cylindrical tactile sensor toolkit: simulation, calibration, localization and mapping"};
  app.require_subcommand(1);

  CommonOptions common;
  SimulateOptions sim_opts;
  FramesOptions calib_opts;
  FramesOptions loc_opts;
  StitchOptions stitch_opts;
  EvaluateOptions eval_opts;

  auto* simulate = app.add_subcommand("simulate", "render synthetic frames with ground truth");
  add_common(simulate, common);
  simulate->add_option("--scene", sim_opts.scene, "fabric, grid or taps (overrides the config)");

  auto* calibrate_cmd = app.add_subcommand("calibrate", "estimate theta and d from grid frames");
  add_common(calibrate_cmd, common);
  calibrate_cmd->add_option("--frames", calib_opts.frames, "directory of grid frames")->required();
  calibrate_cmd->add_option("--truth", calib_opts.truth, "simulator manifest with the true pose");
  calibrate_cmd->add_option("--pnp", calib_opts.pnp, "restricted or full");

  auto* localize = app.add_subcommand("localize", "locate contacts on the roller surface");
  add_common(localize, common);
  localize->add_option("--frames", loc_opts.frames, "directory of tap frames")->required();
  localize->add_option("--truth", loc_opts.truth, "simulator manifest with true contacts");
  localize->add_option("--calibration", loc_opts.calibration, "calibration.json (overrides the config)");

  auto* stitch_cmd = app.add_subcommand("stitch", "stitch a rolling sequence into a tactile map");
  add_common(stitch_cmd, common);
  stitch_cmd->add_option("--frames", stitch_opts.frames, "directory of rolling frames")->required();
  stitch_cmd->add_option("--manifest", stitch_opts.manifest, "simulator manifest to score shifts against");
  stitch_cmd->add_option("--reference", stitch_opts.reference, "reference image to align the map to");
  stitch_cmd->add_option("--align-manifest", stitch_opts.align_manifest,
                         "derive alignment points from a simulator manifest");
  stitch_cmd->add_option("--align-map", stitch_opts.align_map, "two map points: u1 v1 u2 v2")->expected(4);
  stitch_cmd->add_option("--align-ref", stitch_opts.align_ref, "two reference points: u1 v1 u2 v2")->expected(4);
  stitch_cmd->add_flag("--real-data", stitch_opts.real_data, "apply the real-data SSIM plausibility gate");

  auto* evaluate = app.add_subcommand("evaluate", "compare an image against a reference");
  add_common(evaluate, common);
  evaluate->add_option("--image", eval_opts.image, "image to score")->required();
  evaluate->add_option("--reference", eval_opts.reference, "reference image")->required();
  evaluate->add_flag("--real-data", eval_opts.real_data, "apply the real-data SSIM plausibility gate");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  Timer timer;
  const auto start = std::chrono::steady_clock::now();
  try {
    const RunConfig config = timer.stage("config", [&] { return load_run_config(common); });
    const fs::path out_dir(common.out_dir);
    fs::create_directories(out_dir);

    json results;
    if (chosen == simulate) {
      results = run_simulate(config, sim_opts, out_dir, timer);
    } else if (chosen == calibrate_cmd) {
      results = run_calibrate(config, calib_opts, out_dir, timer);
    } else if (chosen == localize) {
      results = run_localize(config, loc_opts, out_dir, timer);
    } else if (chosen == stitch_cmd) {
      results = run_stitch(config, stitch_opts, out_dir, timer);
    } else {
      results = run_evaluate(eval_opts, timer);
    }

    json report = make_report(command, config, results);
    json timings = timer.to_json();
    timings["total"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report["timings_ms"] = timings;
    write_json(out_dir / "report.json", report);

    if (results.contains("plausibility") && !results["plausibility"]["passed"].get<bool>()) {
      err << "touchroller " << command << ": SSIM " << results["metrics"]["ssim"].get<double>()
          << " outside the real-data plausibility range [" << kPlausibleSsimMin << ", "
          << kPlausibleSsimMax << "]\n";
      return kExitPipeline;
    }
    out << command << ": wrote " << (out_dir / "report.json").string() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "touchroller " << command << " [stage " << timer.current() << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    err << "touchroller " << command << " [stage " << timer.current() << "]: malformed input: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "touchroller " << command << " [stage " << timer.current() << "]: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "touchroller " << command << " [stage " << timer.current() << "]: " << e.what() << '\n';
    return kExitPipeline;
  }
}

}  // namespace touchroller
