// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>
#include <unistd.h>

#include "touchroller/calibration.hpp"
#include "touchroller/cli.hpp"
#include "touchroller/error.hpp"
#include "touchroller/geometry.hpp"
#include "touchroller/grid.hpp"
#include "touchroller/imgproc.hpp"
#include "touchroller/localization.hpp"
#include "touchroller/mapping.hpp"
#include "touchroller/metrics.hpp"
#include "touchroller/report.hpp"
#include "touchroller/simulator.hpp"

using namespace touchroller;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kRoundTripTol = 1e-6;       // mm
constexpr double kRoundTripBudget = 1.0;     // s
constexpr double kResidualTol = 1e-9;        // relative
constexpr double kCalThetaTol = 1e-3;        // rad, noiseless
constexpr double kCalDTol = 0.05;            // mm, noiseless
constexpr double kCalNoisyThetaTol = 5e-3;   // rad, 0.3 px noise
constexpr double kCalNoisyDTol = 0.3;        // mm, 0.3 px noise
constexpr double kCalBudget = 30.0;          // s
constexpr double kLocCleanTol = 0.5;         // mm
constexpr double kLocNoisyTol = 2.0;         // mm
constexpr double kExactShiftFraction = 0.95;
constexpr double kSpeedRatioTol = 0.15;
constexpr double kMinSsim = 0.9;
constexpr double kMinPsnr = 25.0;
constexpr double kMaxMae = 3.0;
constexpr double kMetricTol = 0.01;
constexpr int kExpectedPresses = 49;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Eigen::Vector3d oracle_homogeneous(const SurfacePoint& p, const CameraIntrinsics& k, const ExtrinsicPose& pose) {
  Eigen::Matrix3d K;
  K << k.fx, 0.0, k.u0, 0.0, k.fy, k.v0, 0.0, 0.0, 1.0;
  Eigen::Matrix<double, 3, 4> Rt;
  Rt.leftCols<3>() = Eigen::AngleAxisd(-pose.theta, Eigen::Vector3d::UnitX()).toRotationMatrix();
  Rt.col(3) = Eigen::Vector3d(0.0, 0.0, pose.d);
  return K * Rt * Eigen::Vector4d(p.x, p.y, p.z, 1.0);
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) std::fprintf(stderr, "touchroller %s exited %d: %s", args[0].c_str(), code, err.str().c_str());
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

Outcome geometry_round_trip() {
  const CameraIntrinsics k;
  const CylinderModel cyl;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> theta(-0.2, 0.2), d(-5.0, 5.0), phi(-1.0, 1.0), x(-50.0, 50.0);
  const auto t0 = std::chrono::steady_clock::now();
  int n = 0, tries = 0;
  double worst = 0.0;
  while (n < 10000 && tries < 1000000) {
    ++tries;
    const ExtrinsicPose pose{theta(rng), d(rng)};
    const SurfacePoint p = surface_point(cyl, phi(rng), x(rng));
    const Projection proj = project(p, k, pose);
    if (proj.depth <= 0.0 || !inside_image(proj.pixel, k)) continue;
    const SurfacePoint q = unproject(proj.pixel, k, pose, cyl);
    worst = std::max(worst, std::hypot(q.x - p.x, q.y - p.y, q.z - p.z));
    ++n;
  }
  const double elapsed = seconds_since(t0);
  return {n == 10000 && worst < kRoundTripTol && elapsed < kRoundTripBudget,
          fmt("%d points, max error %.3g mm, %.3f s", n, worst, elapsed)};
}

Outcome projection_residuals() {
  const CameraIntrinsics k{412.0, 398.0, 317.5, 243.25, 640, 480};
  const CylinderModel cyl;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> theta(-0.2, 0.2), d(-5.0, 5.0), phi(-1.2, 1.2), x(-50.0, 50.0);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const ExtrinsicPose pose{theta(rng), d(rng)};
    const SurfacePoint p = surface_point(cyl, phi(rng), x(rng));
    const Projection proj = project(p, k, pose);
    const Eigen::Vector3d h = oracle_homogeneous(p, k, pose);
    // Each scalar equation: lambda * (u, v, 1) = K [R|t] p.
    const double r[3] = {proj.depth * proj.pixel.u - h.x(), proj.depth * proj.pixel.v - h.y(), proj.depth - h.z()};
    const double scale[3] = {std::abs(h.x()) + 1.0, std::abs(h.y()) + 1.0, std::abs(h.z()) + 1.0};
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(r[j]) / scale[j]);
  }
  return {worst < kResidualTol, fmt("max relative residual %.3g over 2000 points", worst)};
}

Outcome calibration_recovery() {
  const CameraIntrinsics k;
  const CylinderModel cyl;
  const GridSpec grid;
  const ExtrinsicPose truth{0.05, 1.0};
  const auto t0 = std::chrono::steady_clock::now();

  SimScene scene;
  scene.kind = SceneKind::HemisphereGrid;
  scene.grid = grid;
  RenderParams params;
  params.supersample = 4;
  std::vector<GrayImage> frames;
  for (int i = 0; i < 10; ++i) frames.push_back(render_frame(scene, RollState::at(0.0, cyl, truth, i), k, cyl, params).pixels);
  const CalibrationResult clean = calibrate(frames, grid, k, cyl);
  const double clean_t = std::abs(clean.pose.theta - truth.theta);
  const double clean_d = std::abs(clean.pose.d - truth.d);

  const auto obj = grid_object_points(grid, cyl);
  std::vector<PixelPoint> exact;
  for (const auto& p : obj) exact.push_back(project(p, k, truth).pixel);
  double worst_t = 0.0, worst_d = 0.0;
  for (unsigned seed = 0; seed < 50; ++seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::vector<GridDetection> detections(10);
    for (auto& det : detections) {
      auto px = exact;
      for (auto& p : px) {
        p.u += noise(rng);
        p.v += noise(rng);
      }
      det.centers = px;
    }
    const CalibrationResult r = calibrate_detections(detections, grid, k, cyl);
    worst_t = std::max(worst_t, std::abs(r.pose.theta - truth.theta));
    worst_d = std::max(worst_d, std::abs(r.pose.d - truth.d));
  }
  const double elapsed = seconds_since(t0);
  const bool ok = clean.n_valid == 10 && clean_t < kCalThetaTol && clean_d < kCalDTol && worst_t < kCalNoisyThetaTol &&
                  worst_d < kCalNoisyDTol && elapsed < kCalBudget;
  return {ok, fmt("noiseless |dtheta| %.2e rad |dd| %.2e mm; 50 seeds worst %.2e rad %.3f mm; %.2f s", clean_t,
                  clean_d, worst_t, worst_d, elapsed)};
}

Outcome localization_table() {
  const CameraIntrinsics k;
  const CylinderModel cyl;
  const ExtrinsicPose pose{0.01, 2.0};
  const auto angles = experiment_angles();
  const auto fractions = experiment_axial_fractions();

  // Two tap sets per axial position so that no two contacts share a frame region.
  struct Shot {
    std::vector<ContactRegion> regions;
    std::vector<TruthContact> truth;
  };
  std::vector<Shot> shots;
  for (int ax = 0; ax < 3; ++ax) {
    for (const std::vector<int>& set : {std::vector<int>{0, 1, 2}, std::vector<int>{2, 3, 4}}) {
      SimScene scene;
      scene.kind = SceneKind::SurfaceTaps;
      std::vector<double> a;
      for (int i : set) a.push_back(angles[i]);
      const double x = (fractions[ax] - 0.5) * cyl.length;
      scene.taps = stick_taps(a, x);
      const TactileFrame f = render_frame(scene, RollState::at(0.0, cyl, pose), k, cyl);
      Shot shot;
      shot.regions = find_contact_regions(preprocess(f.pixels, {})).regions;
      for (std::size_t i = 0; i < set.size(); ++i) shot.truth.push_back({f.truth.contacts[i].point, set[i], ax});
      shots.push_back(shot);
    }
  }

  auto run = [&](double sigma, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
    std::vector<LocalizationReport> reports;
    for (const auto& shot : shots) {
      auto regions = shot.regions;
      if (sigma > 0.0)
        for (auto& r : regions) {
          r.centroid.u += noise(rng);
          r.centroid.v += noise(rng);
        }
      std::vector<SurfacePoint> pts;
      for (const auto& c : localize_regions(regions, k, pose, cyl).contacts) pts.push_back(c.point);
      reports.push_back(evaluate_localization(pts, shot.truth));
    }
    return combine_reports(reports);
  };

  const LocalizationReport clean = run(0.0, 0);
  std::vector<LocalizationReport> noisy_runs;
  for (unsigned s = 0; s < 20; ++s) noisy_runs.push_back(run(1.0, s));
  const LocalizationReport noisy = combine_reports(noisy_runs);

  const auto& ref = hardware_reference_table();
  std::printf("  localization error table, mm (simulated noiseless | 1 px noise | hardware reference)\n");
  std::printf("  %-10s %-34s %-34s %-34s\n", "angle", "x = 25%", "x = 50%", "x = 75%");
  for (int a = 0; a < 5; ++a) {
    std::printf("  %+8.1f  ", angles[a] * 180.0 / std::numbers::pi);
    for (int x = 0; x < 3; ++x)
      std::printf(" %5.3f | %5.3f+-%4.2f | %5.2f+-%4.2f   ", clean.cells[a][x].mean, noisy.cells[a][x].mean,
                  noisy.cells[a][x].std, ref[a][x].mean, ref[a][x].std);
    std::printf("\n");
  }
  bool filled = true;
  for (const auto& row : clean.cells)
    for (const auto& c : row) filled = filled && c.count > 0;
  const bool ok = filled && clean.overall.count == 18 && clean.overall.mean < kLocCleanTol &&
                  noisy.overall.mean < kLocNoisyTol;
  return {ok, fmt("noiseless mean %.3f mm over %d contacts, 1 px noise mean %.3f mm", clean.overall.mean,
                  clean.overall.count, noisy.overall.mean)};
}

// Shared simulated fabric run used by criteria 5, 6, 7 and 9.
struct FabricRun {
  fs::path root;
  bool ok = false;
  json stitch[3];
};
const char* kSequences[3] = {"slow", "medium", "fast"};

FabricRun simulate_and_stitch(const fs::path& root) {
  FabricRun run;
  run.root = root;
  if (cli({"simulate", "--seed", "11", "--out-dir", (root / "sim").string()}) != 0) return run;
  for (int i = 0; i < 3; ++i) {
    const fs::path seq = root / "sim" / kSequences[i];
    const fs::path out = root / (std::string("stitch_") + kSequences[i]);
    std::vector<std::string> args{"stitch", "--frames", seq.string(), "--manifest", (seq / "manifest.json").string(),
                                  "--seed", "11", "--out-dir", out.string()};
    if (i == 1) {
      args.insert(args.end(), {"--reference", (root / "sim" / "reference.png").string(), "--align-manifest",
                               (seq / "manifest.json").string()});
    }
    if (cli(args) != 0) return run;
    run.stitch[i] = read_json(out / "report.json")["results"];
  }
  // The remaining subcommands, so that determinism covers all of them.
  const fs::path med = root / "stitch_medium";
  if (cli({"evaluate", "--image", (med / "aligned_crop.png").string(), "--reference",
           (med / "reference_crop.png").string(), "--out-dir", (root / "evaluate").string()}) != 0)
    return run;
  std::ofstream(root / "pose.json") << R"({"pose": {"theta": 0.01, "d": 2.0}, "simulate": {"grid_frames": 3, "noise_sigma": 2.0}})";
  const std::string cfg = (root / "pose.json").string();
  for (const char* scene : {"grid", "taps"})
    if (cli({"simulate", "--scene", scene, "--config", cfg, "--seed", "11", "--out-dir",
             (root / (std::string("sim_") + scene)).string()}) != 0)
      return run;
  if (cli({"calibrate", "--frames", (root / "sim_grid").string(), "--config", cfg, "--out-dir",
           (root / "calibrate").string()}) != 0)
    return run;
  if (cli({"localize", "--frames", (root / "sim_taps").string(), "--truth",
           (root / "sim_taps" / "manifest.json").string(), "--config", cfg, "--out-dir",
           (root / "localize").string()}) != 0)
    return run;
  run.ok = true;
  return run;
}

Outcome shift_search(const FabricRun& fabric) {
  // Textured synthetic strip; patch b is patch a displaced by k rows.
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uni(0.0, 255.0);
  FloatImage noise(160, 200);
  for (double& v : noise.pixels()) v = uni(rng);
  const FloatImage smooth = gaussian_blur(noise, 1.5);
  double lo = 1e9, hi = -1e9;
  for (double v : smooth.pixels()) lo = std::min(lo, v), hi = std::max(hi, v);
  GrayImage strip(160, 200);
  for (std::size_t i = 0; i < strip.size(); ++i)
    strip.pixels()[i] = static_cast<std::uint8_t>(std::lround(255.0 * (smooth.pixels()[i] - lo) / (hi - lo)));
  auto rows = [&](int top) {
    GrayImage out(strip.width(), 70);
    for (int y = 0; y < 70; ++y)
      for (int x = 0; x < strip.width(); ++x) out(x, y) = strip(x, top + y);
    return out;
  };
  int exact = 0;
  for (int kk = -25; kk <= 25; ++kk) {
    // b(y) = a(y - k): content moves down by k rows.
    if (find_shift(rows(60), rows(60 - kk)).dy == kk) ++exact;
  }
  if (!fabric.ok) return {false, fmt("%d/51 synthetic shifts exact; fabric run failed", exact)};
  const json& agree = fabric.stitch[1]["shift_agreement"];
  const double exact_frac = agree["exact_fraction"].get<double>();
  const double within_one = agree["within_one_fraction"].get<double>();
  return {exact == 51 && exact_frac >= kExactShiftFraction && within_one == 1.0,
          fmt("%d/51 synthetic shifts exact; medium roll %.1f%% exact, %.1f%% within 1 px", exact, 100.0 * exact_frac,
              100.0 * within_one)};
}

Outcome speed_ratio(const FabricRun& fabric) {
  if (!fabric.ok) return {false, "fabric run failed"};
  double mean[3];
  for (int i = 0; i < 3; ++i) {
    double sum = 0.0;
    const json& shifts = fabric.stitch[i]["shifts"];
    for (const auto& s : shifts) sum += std::abs(s["dy"].get<int>());
    mean[i] = sum / shifts.size();
  }
  const double r_med = mean[1] / mean[0];
  const double r_fast = mean[2] / mean[0];
  const bool ok = std::abs(r_med / 1.5 - 1.0) <= kSpeedRatioTol && std::abs(r_fast / 3.0 - 1.0) <= kSpeedRatioTol;
  return {ok, fmt("mean |dy| %.2f / %.2f / %.2f px, ratio 1 : %.3f : %.3f", mean[0], mean[1], mean[2], r_med, r_fast)};
}

Outcome end_to_end(const FabricRun& fabric) {
  if (!fabric.ok) return {false, "fabric run failed"};
  const json& m = fabric.stitch[1]["metrics"];
  const double s = m["ssim"].get<double>();
  const double p = m["psnr_db"].is_string() ? std::numeric_limits<double>::infinity() : m["psnr_db"].get<double>();
  const double mae = m["mae_percent"].get<double>();
  return {s >= kMinSsim && p >= kMinPsnr && mae <= kMaxMae, fmt("SSIM %.4f, PSNR %.2f dB, MAE %.3f%%", s, p, mae)};
}

Outcome metric_identities() {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> uni(0, 200);
  GrayImage a(96, 72);
  for (auto& p : a.pixels()) p = static_cast<std::uint8_t>(uni(rng));
  GrayImage b = a;
  for (auto& p : b.pixels()) p = static_cast<std::uint8_t>(p + 10);
  const bool ident = std::abs(ssim(a, a) - 1.0) < 1e-12 && mae_percent(a, a) == 0.0 &&
                     number_or_inf(psnr(a, a)) == json("inf");
  const double mae = mae_percent(a, b);
  const double p = psnr(a, b);
  const bool closed = std::abs(mae - 3.92) <= kMetricTol && std::abs(p - 28.13) <= kMetricTol;
  return {ident && closed, fmt("identities %s; offset 10 gives MAE %.4f%%, PSNR %.4f dB", ident ? "hold" : "broken", mae, p)};
}

Outcome determinism(const FabricRun& first, const fs::path& second_root) {
  if (!first.ok) return {false, "first fabric run failed"};
  const FabricRun second = simulate_and_stitch(second_root);
  if (!second.ok) return {false, "second fabric run failed"};
  int files = 0, differ = 0;
  for (const auto& entry : fs::recursive_directory_iterator(first.root)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), first.root);
    const fs::path other = second.root / rel;
    ++files;
    if (!fs::exists(other)) {
      ++differ;
      continue;
    }
    if (rel.filename() == "report.json") {
      json a = read_json(entry.path()), b = read_json(other);
      a.erase("timings_ms");
      b.erase("timings_ms");
      if (a != b) ++differ;
    } else if (slurp(entry.path()) != slurp(other)) {
      ++differ;
    }
  }
  return {files > 0 && differ == 0, fmt("%d artifacts compared, %d differ", files, differ)};
}

Outcome coverage() {
  const CoverageNote note = coverage_note(CoverageConfig{});
  return {note.presses == kExpectedPresses, fmt("%d presses (%s)", note.presses, note.text.c_str())};
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / ("touchroller_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(scratch);

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  FabricRun fabric;
  try {
    fabric = simulate_and_stitch(scratch / "run1");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fabric run: %s\n", e.what());
  }

  report(1, "geometry round trip", geometry_round_trip);
  report(2, "projection residuals", projection_residuals);
  report(3, "calibration recovery", calibration_recovery);
  report(4, "localization", localization_table);
  report(5, "shift search", [&] { return shift_search(fabric); });
  report(6, "speed proportionality", [&] { return speed_ratio(fabric); });
  report(7, "end-to-end mapping", [&] { return end_to_end(fabric); });
  report(8, "metric identities", metric_identities);
  report(9, "determinism", [&] { return determinism(fabric, scratch / "run2"); });
  report(10, "coverage arithmetic", coverage);

  std::error_code ec;
  fs::remove_all(scratch, ec);
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
