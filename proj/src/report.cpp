#include "touchroller/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "touchroller/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace touchroller {

namespace {

// ceil(a / b) that does not round 8.0000000001 up to 9.
int tiles(double extent, double tile) {
  const double q = extent / tile;
  return static_cast<int>(std::ceil(q - 1e-9 * std::max(1.0, q)));
}

std::string format_cm(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

CoverageNote coverage_note(const CoverageConfig& c) {
  CoverageNote note;
  note.presses_aligned = tiles(c.fabric_width_cm, c.sensor_width_cm) *
                         tiles(c.fabric_length_cm, c.sensor_length_cm);
  note.presses_rotated = tiles(c.fabric_width_cm, c.sensor_length_cm) *
                         tiles(c.fabric_length_cm, c.sensor_width_cm);
  note.presses = std::min(note.presses_aligned, note.presses_rotated);

  std::ostringstream s;
  s << "Covering a " << format_cm(c.fabric_width_cm) << " x " << format_cm(c.fabric_length_cm)
    << " cm fabric with a flat " << format_cm(c.sensor_width_cm) << " x "
    << format_cm(c.sensor_length_cm) << " cm sensing area needs at least " << note.presses
    << " presses (ceil(" << format_cm(c.fabric_width_cm) << "/" << format_cm(c.sensor_width_cm)
    << ")*ceil(" << format_cm(c.fabric_length_cm) << "/" << format_cm(c.sensor_length_cm)
    << ") = " << note.presses_aligned << ", rotated ceil(" << format_cm(c.fabric_width_cm) << "/"
    << format_cm(c.sensor_length_cm) << ")*ceil(" << format_cm(c.fabric_length_cm) << "/"
    << format_cm(c.sensor_width_cm) << ") = " << note.presses_rotated
    << "); the roller covers it in one roll.";
  note.text = s.str();
  return note;
}

json to_json(const CoverageNote& note) {
  return {{"presses", note.presses},
          {"presses_aligned", note.presses_aligned},
          {"presses_rotated", note.presses_rotated},
          {"rolls", 1},
          {"text", note.text}};
}

json number_or_inf(double value) {
  if (std::isnan(value)) return nullptr;
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

json make_report(const std::string& command, const RunConfig& config, json results) {
  return {{"schema_version", kSchemaVersion},
          {"command", command},
          {"config_hash", config_hash(config)},
          {"seed", config.seed},
          {"results", std::move(results)},
          {"coverage_note", to_json(coverage_note(config.coverage))},
          {"timings_ms", json::object()}};
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InputMissing, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InputMissing, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InputMissing, path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace touchroller
