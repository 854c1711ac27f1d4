#include "touchroller/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "touchroller/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace touchroller {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

// Reads keys from one JSON object and rejects any key that was not read.
class Section {
 public:
  Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
    if (!obj_.is_object()) invalid(name_ + " must be an object");
  }

  void get(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) invalid(path(key) + " must be a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) invalid(path(key) + " must be an integer");
      out = v->get<int>();
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0))
        invalid(path(key) + " must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) invalid(path(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) invalid(path(key) + " must be a string");
      out = v->get<std::string>();
    }
  }
  const json* section(const char* key) { return find(key); }
  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.contains(key)) invalid("unknown key " + path(key));
    }
  }

 private:
  const json* find(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  const json& obj_;
  std::string name_;
  std::set<std::string> used_;
};

ThresholdMode parse_threshold(const std::string& s, const std::string& where) {
  if (s == "otsu") return ThresholdMode::Otsu;
  if (s == "fixed") return ThresholdMode::Fixed;
  invalid(where + " must be \"otsu\" or \"fixed\"");
}

std::string threshold_name(ThresholdMode m) { return m == ThresholdMode::Otsu ? "otsu" : "fixed"; }

std::string scene_name(SimSceneChoice s) {
  switch (s) {
    case SimSceneChoice::Fabric: return "fabric";
    case SimSceneChoice::Grid: return "grid";
    case SimSceneChoice::Taps: return "taps";
  }
  return "fabric";
}

void read_binarize(Section& s, BinarizeParams& p) {
  std::string mode = threshold_name(p.mode);
  s.get("blur_sigma", p.blur_sigma);
  s.get("threshold", mode);
  s.get("fixed_threshold", p.fixed_threshold);
  s.get("invert", p.invert);
  p.mode = parse_threshold(mode, s.path("threshold"));
  if (!(p.blur_sigma >= 0.0 && p.blur_sigma <= 50.0)) invalid(s.path("blur_sigma") + " must be in [0, 50]");
  if (p.fixed_threshold < 0 || p.fixed_threshold > 255)
    invalid(s.path("fixed_threshold") + " must be in [0, 255]");
}

json binarize_json(const BinarizeParams& p) {
  return {{"blur_sigma", p.blur_sigma},
          {"threshold", threshold_name(p.mode)},
          {"fixed_threshold", p.fixed_threshold},
          {"invert", p.invert}};
}

void require(bool ok, const std::string& what) {
  if (!ok) invalid(what);
}

}  // namespace

RunConfig config_from_json(const json& doc, const fs::path& base_dir) {
  RunConfig c;
  Section root(doc, "");
  int schema = kSchemaVersion;
  root.get("schema_version", schema);
  require(schema == kSchemaVersion, "unsupported schema_version " + std::to_string(schema));

  if (const json* j = root.section("intrinsics")) {
    Section s(*j, "intrinsics");
    s.get("fx", c.intrinsics.fx);
    s.get("fy", c.intrinsics.fy);
    s.get("u0", c.intrinsics.u0);
    s.get("v0", c.intrinsics.v0);
    s.get("width", c.intrinsics.width);
    s.get("height", c.intrinsics.height);
    s.finish();
  }
  if (const json* j = root.section("cylinder")) {
    Section s(*j, "cylinder");
    s.get("radius", c.cylinder.radius);
    s.get("length", c.cylinder.length);
    s.finish();
  }
  if (const json* j = root.section("pose")) {
    Section s(*j, "pose");
    s.get("theta", c.pose.theta);
    s.get("d", c.pose.d);
    s.finish();
  }
  std::string calib;
  root.get("calibration_file", calib);
  root.get("flip_u", c.flip_u);
  root.get("flip_v", c.flip_v);
  root.get("seed", c.seed);
  root.get("gate_mm", c.gate_mm);

  if (const json* j = root.section("detect")) {
    Section s(*j, "detect");
    read_binarize(s, c.detect.binarize);
    s.get("open", c.detect.open);
    s.get("min_area", c.detect.min_area);
    s.get("centroid_margin", c.detect.centroid_margin);
    s.finish();
  }
  if (const json* j = root.section("localize")) {
    Section s(*j, "localize");
    read_binarize(s, c.localize.binarize);
    s.get("min_area", c.localize.min_area);
    s.finish();
  }
  if (const json* j = root.section("mapping")) {
    Section s(*j, "mapping");
    std::string overlap = "overwrite";
    s.get("patch_height", c.mapping.patch_height);
    s.get("shift_min", c.mapping.search.min_shift);
    s.get("shift_max", c.mapping.search.max_shift);
    s.get("subpixel", c.mapping.search.subpixel);
    s.get("overlap", overlap);
    s.finish();
    if (overlap == "overwrite") {
      c.mapping.overlap = OverlapMode::Overwrite;
    } else if (overlap == "average") {
      c.mapping.overlap = OverlapMode::Average;
    } else {
      invalid("mapping.overlap must be \"overwrite\" or \"average\"");
    }
  }
  if (const json* j = root.section("grid")) {
    Section s(*j, "grid");
    s.get("rows", c.grid.rows);
    s.get("cols", c.grid.cols);
    s.get("radius", c.grid.radius);
    s.get("pitch", c.grid.pitch);
    s.get("center_x", c.grid.center_x);
    s.get("center_y", c.grid.center_y);
    s.finish();
  }
  if (const json* j = root.section("simulate")) {
    Section s(*j, "simulate");
    auto& sim = c.simulate;
    std::string scene = scene_name(sim.scene);
    s.get("scene", scene);
    s.get("fabric_width_mm", sim.fabric_width_mm);
    s.get("fabric_length_mm", sim.fabric_length_mm);
    s.get("texture_pitch_mm", sim.texture_pitch_mm);
    s.get("fps", sim.fps);
    s.get("roll_distance_mm", sim.roll_distance_mm);
    s.get("start_y_mm", sim.start_y_mm);
    if (const json* d = s.section("durations_s")) {
      if (!d->is_object() || d->empty()) invalid("simulate.durations_s must be a non-empty object");
      sim.durations_s.clear();
      for (const auto& [name, value] : d->items()) {
        if (!value.is_number() || !(value.get<double>() > 0.0))
          invalid("simulate.durations_s." + name + " must be a positive number");
        sim.durations_s[name] = value.get<double>();
      }
    }
    s.get("contact_halfwidth_mm", sim.contact_halfwidth_mm);
    s.get("supersample", sim.supersample);
    s.get("noise_sigma", sim.noise_sigma);
    s.get("grid_frames", sim.grid_frames);
    s.get("grid_supersample", sim.grid_supersample);
    s.get("tap_radius_mm", sim.tap_radius_mm);
    s.get("reference_px_per_mm", sim.reference_px_per_mm);
    s.finish();
    if (scene == "fabric") {
      sim.scene = SimSceneChoice::Fabric;
    } else if (scene == "grid") {
      sim.scene = SimSceneChoice::Grid;
    } else if (scene == "taps") {
      sim.scene = SimSceneChoice::Taps;
    } else {
      invalid("simulate.scene must be fabric, grid or taps");
    }
  }
  if (const json* j = root.section("coverage")) {
    Section s(*j, "coverage");
    s.get("fabric_width_cm", c.coverage.fabric_width_cm);
    s.get("fabric_length_cm", c.coverage.fabric_length_cm);
    s.get("sensor_width_cm", c.coverage.sensor_width_cm);
    s.get("sensor_length_cm", c.coverage.sensor_length_cm);
    s.finish();
  }
  root.finish();

  try {
    c.intrinsics.validate();
    c.cylinder.validate();
    c.pose.validate(c.cylinder);
    c.grid.validate();
  } catch (const Error& e) {
    invalid(e.what());
  }
  require(c.detect.min_area >= 0 && c.localize.min_area >= 0, "min_area must be non-negative");
  require(c.detect.centroid_margin >= 0 && c.detect.centroid_margin <= 50,
          "detect.centroid_margin must be in [0, 50]");
  require(c.gate_mm > 0.0, "gate_mm must be positive");
  require(c.mapping.patch_height >= 1 && c.mapping.patch_height <= c.intrinsics.height,
          "mapping.patch_height must be in [1, image height]");
  require(c.mapping.search.min_shift <= c.mapping.search.max_shift,
          "mapping.shift_min must not exceed mapping.shift_max");
  require(std::abs(c.mapping.search.min_shift) < c.mapping.patch_height &&
              std::abs(c.mapping.search.max_shift) < c.mapping.patch_height,
          "mapping shift range must stay below the patch height");
  const auto& sim = c.simulate;
  require(sim.fabric_width_mm > 0.0 && sim.fabric_length_mm > 0.0 && sim.texture_pitch_mm > 0.0,
          "simulate fabric dimensions must be positive");
  require(sim.fps > 0.0 && sim.roll_distance_mm > 0.0, "simulate fps and roll distance must be positive");
  require(sim.start_y_mm >= 0.0, "simulate.start_y_mm must be non-negative");
  require(sim.contact_halfwidth_mm > 0.0, "simulate.contact_halfwidth_mm must be positive");
  require(sim.supersample >= 1 && sim.supersample <= 16 && sim.grid_supersample >= 1 &&
              sim.grid_supersample <= 16,
          "supersample factors must be in [1, 16]");
  require(sim.noise_sigma >= 0.0, "simulate.noise_sigma must be non-negative");
  require(sim.grid_frames >= 1 && sim.grid_frames <= 1000, "simulate.grid_frames must be in [1, 1000]");
  require(sim.tap_radius_mm > 0.0 && sim.reference_px_per_mm > 0.0,
          "tap radius and reference scale must be positive");
  require(c.coverage.fabric_width_cm > 0.0 && c.coverage.fabric_length_cm > 0.0 &&
              c.coverage.sensor_width_cm > 0.0 && c.coverage.sensor_length_cm > 0.0,
          "coverage dimensions must be positive");

  if (!calib.empty()) {
    fs::path p(calib);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    if (!fs::is_regular_file(p)) invalid("calibration_file " + p.string() + " does not exist");
    c.calibration_file = p;
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
  return config_from_json(doc, path.parent_path());
}

json config_to_json(const RunConfig& c) {
  json durations = json::object();
  for (const auto& [name, value] : c.simulate.durations_s) durations[name] = value;
  const auto& sim = c.simulate;
  return {
      {"schema_version", kSchemaVersion},
      {"intrinsics",
       {{"fx", c.intrinsics.fx},
        {"fy", c.intrinsics.fy},
        {"u0", c.intrinsics.u0},
        {"v0", c.intrinsics.v0},
        {"width", c.intrinsics.width},
        {"height", c.intrinsics.height}}},
      {"cylinder", {{"radius", c.cylinder.radius}, {"length", c.cylinder.length}}},
      {"pose", {{"theta", c.pose.theta}, {"d", c.pose.d}}},
      {"calibration_file", c.calibration_file.string()},
      {"flip_u", c.flip_u},
      {"flip_v", c.flip_v},
      {"seed", c.seed},
      {"gate_mm", c.gate_mm},
      {"detect",
       [&] {
         json j = binarize_json(c.detect.binarize);
         j["open"] = c.detect.open;
         j["min_area"] = c.detect.min_area;
         j["centroid_margin"] = c.detect.centroid_margin;
         return j;
       }()},
      {"localize",
       [&] {
         json j = binarize_json(c.localize.binarize);
         j["min_area"] = c.localize.min_area;
         return j;
       }()},
      {"mapping",
       {{"patch_height", c.mapping.patch_height},
        {"shift_min", c.mapping.search.min_shift},
        {"shift_max", c.mapping.search.max_shift},
        {"subpixel", c.mapping.search.subpixel},
        {"overlap", c.mapping.overlap == OverlapMode::Overwrite ? "overwrite" : "average"}}},
      {"grid",
       {{"rows", c.grid.rows},
        {"cols", c.grid.cols},
        {"radius", c.grid.radius},
        {"pitch", c.grid.pitch},
        {"center_x", c.grid.center_x},
        {"center_y", c.grid.center_y}}},
      {"simulate",
       {{"scene", scene_name(sim.scene)},
        {"fabric_width_mm", sim.fabric_width_mm},
        {"fabric_length_mm", sim.fabric_length_mm},
        {"texture_pitch_mm", sim.texture_pitch_mm},
        {"fps", sim.fps},
        {"roll_distance_mm", sim.roll_distance_mm},
        {"start_y_mm", sim.start_y_mm},
        {"durations_s", durations},
        {"contact_halfwidth_mm", sim.contact_halfwidth_mm},
        {"supersample", sim.supersample},
        {"noise_sigma", sim.noise_sigma},
        {"grid_frames", sim.grid_frames},
        {"grid_supersample", sim.grid_supersample},
        {"tap_radius_mm", sim.tap_radius_mm},
        {"reference_px_per_mm", sim.reference_px_per_mm}}},
      {"coverage",
       {{"fabric_width_cm", c.coverage.fabric_width_cm},
        {"fabric_length_cm", c.coverage.fabric_length_cm},
        {"sensor_width_cm", c.coverage.sensor_width_cm},
        {"sensor_length_cm", c.coverage.sensor_length_cm}}},
  };
}

std::string config_hash(const RunConfig& config) {
  const std::string text = config_to_json(config).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExtrinsicPose read_calibration_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InputMissing, "cannot open calibration file " + path.string());
  try {
    const json doc = json::parse(in);
    return {doc.at("theta").get<double>(), doc.at("d").get<double>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, "malformed calibration file " + path.string() + ": " + e.what());
  }
}

}  // namespace touchroller
