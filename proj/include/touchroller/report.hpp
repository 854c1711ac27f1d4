#pragma once

// JSON run reports shared by the command-line subcommands.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "touchroller/config.hpp"

namespace touchroller {

/// Press count needed to cover a fabric with a flat sensor by tiling, for
/// comparison with a single roll.
struct CoverageNote {
  int presses = 0;          // best of the two sensor orientations
  int presses_aligned = 0;  // sensor width along fabric width
  int presses_rotated = 0;  // sensor turned 90 degrees
  std::string text;
};

CoverageNote coverage_note(const CoverageConfig& c);
nlohmann::json to_json(const CoverageNote& note);

/// Numbers that may be infinite (PSNR of identical images) are written as
/// the string "inf" / "-inf"; NaN becomes null.
nlohmann::json number_or_inf(double value);

/// Common report envelope. `timings_ms` is filled in by the caller and is the
/// only field allowed to differ between identical runs.
nlohmann::json make_report(const std::string& command, const RunConfig& config,
                           nlohmann::json results);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace touchroller
