#include "touchroller/config.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"
#include "touchroller/error.hpp"
#include "touchroller/report.hpp"

using namespace touchroller;
using nlohmann::json;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  const RunConfig c = config_from_json(json::object());
  EXPECT_EQ(c.intrinsics.fx, 400.0);
  EXPECT_EQ(c.cylinder.radius, 50.0);
  EXPECT_EQ(c.mapping.patch_height, 70);
  EXPECT_EQ(c.mapping.search.min_shift, -25);
  EXPECT_EQ(c.localize.min_area, 30);
  EXPECT_EQ(c.simulate.durations_s.size(), 3u);
}

TEST(Config, RoundTrip) {
  json doc = {{"pose", {{"theta", 0.05}, {"d", 1.0}}},
              {"seed", 12},
              {"flip_u", true},
              {"localize", {{"threshold", "fixed"}, {"fixed_threshold", 90}, {"invert", true}}},
              {"mapping", {{"overlap", "average"}, {"shift_min", -20}, {"subpixel", true}}},
              {"simulate", {{"scene", "taps"}, {"durations_s", {{"only", 3.0}}}}}};
  const RunConfig c = config_from_json(doc);
  const json out = config_to_json(c);
  const RunConfig again = config_from_json(out);
  EXPECT_EQ(config_to_json(again), out);
  EXPECT_EQ(out["pose"]["theta"], 0.05);
  EXPECT_EQ(out["localize"]["threshold"], "fixed");
  EXPECT_EQ(out["mapping"]["overlap"], "average");
  EXPECT_EQ(out["simulate"]["scene"], "taps");
  EXPECT_EQ(out["simulate"]["durations_s"], json({{"only", 3.0}}));
  EXPECT_EQ(config_hash(c), config_hash(again));
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_EQ(code_of([] { config_from_json({{"colour", 1}}); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { config_from_json({{"pose", {{"phi", 1}}}}); }), ErrorCode::ConfigInvalid);
}

TEST(Config, TypeAndBoundChecks) {
  EXPECT_EQ(code_of([] { config_from_json({{"seed", -1}}); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { config_from_json({{"mapping", {{"patch_height", 2.5}}}}); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { config_from_json({{"mapping", {{"patch_height", 1000}}}}); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { config_from_json({{"pose", {{"d", 80.0}}}}); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { config_from_json({{"detect", {{"threshold", "magic"}}}}); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { config_from_json({{"flip_u", "yes"}}); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { config_from_json({{"schema_version", 2}}); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(code_of([] { config_from_json({{"mapping", {{"shift_min", 5}, {"shift_max", 4}}}}); }),
            ErrorCode::ConfigInvalid);
}

TEST(Config, CalibrationFileMustExist) {
  touchroller::testing::ScratchDir dir("cfg");
  EXPECT_EQ(code_of([&] { config_from_json({{"calibration_file", "calib.json"}}, dir.path()); }),
            ErrorCode::ConfigInvalid);
  std::ofstream(dir / "calib.json") << R"({"theta": 0.02, "d": -1.5})";
  const RunConfig c = config_from_json({{"calibration_file", "calib.json"}}, dir.path());
  EXPECT_EQ(c.calibration_file, dir / "calib.json");
  const ExtrinsicPose pose = read_calibration_file(c.calibration_file);
  EXPECT_EQ(pose.theta, 0.02);
  EXPECT_EQ(pose.d, -1.5);
}

TEST(Config, LoadFromFile) {
  touchroller::testing::ScratchDir dir("cfgfile");
  std::ofstream(dir / "run.json") << R"({"seed": 5, "gate_mm": 10})";
  const RunConfig c = load_config(dir / "run.json");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.gate_mm, 10.0);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_EQ(code_of([&] { load_config(dir / "bad.json"); }), ErrorCode::ConfigInvalid);
}

TEST(Config, HashTracksContent) {
  RunConfig a;
  RunConfig b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Coverage, PressCounts) {
  EXPECT_EQ(coverage_note(CoverageConfig{}).presses, 49);
  EXPECT_EQ(coverage_note(CoverageConfig{}).presses_aligned, 50);
  EXPECT_EQ(coverage_note({8.0, 11.0, 8.0, 11.0}).presses, 1);
  EXPECT_EQ(coverage_note({8.0, 11.0, 1.0, 1.0}).presses, 88);
  EXPECT_NE(coverage_note(CoverageConfig{}).text.find("49 presses"), std::string::npos);
}

TEST(Report, InfinitySentinel) {
  EXPECT_EQ(number_or_inf(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(number_or_inf(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_TRUE(number_or_inf(std::nan("")).is_null());
  EXPECT_EQ(number_or_inf(2.5), 2.5);
}

TEST(Report, Envelope) {
  const json r = make_report("evaluate", RunConfig{}, {{"x", 1}});
  EXPECT_EQ(r["schema_version"], kSchemaVersion);
  EXPECT_EQ(r["command"], "evaluate");
  EXPECT_EQ(r["config_hash"], config_hash(RunConfig{}));
  EXPECT_EQ(r["coverage_note"]["presses"], 49);
  EXPECT_TRUE(r.contains("timings_ms"));
}
