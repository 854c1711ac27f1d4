#include "touchroller/localization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "touchroller/error.hpp"

namespace touchroller {

namespace {

double distance(const SurfacePoint& a, const SurfacePoint& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

void fill_cells(LocalizationReport& report) {
  std::array<std::array<std::vector<double>, 3>, 5> per_cell;
  std::vector<double> all;
  for (const auto& m : report.matches) {
    per_cell[m.angle_cell][m.axial_cell].push_back(m.error);
    all.push_back(m.error);
  }
  for (int a = 0; a < 5; ++a)
    for (int x = 0; x < 3; ++x) report.cells[a][x] = cell_stats(per_cell[a][x]);
  report.overall = cell_stats(all);
}

}  // namespace

CellStats cell_stats(std::span<const double> values) {
  CellStats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  if (s.count > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(acc / (s.count - 1));
  }
  return s;
}
BinaryImage preprocess(const GrayImage& frame, const BinarizeParams& params,
                       std::optional<int>* used_threshold) {
  return binarize(frame, params, used_threshold);
}

ContactRegions find_contact_regions(const BinaryImage& mask, int min_area) {
  Components comps = connected_components(mask);
  ContactRegions out;
  out.labels = std::move(comps.labels);
  for (const auto& c : comps.items) {
    if (c.m00 < min_area) continue;
    out.regions.push_back({c.centroid(), c.m00, c.box, c.label});
  }
  std::ranges::stable_sort(out.regions, [](const ContactRegion& a, const ContactRegion& b) {
    return a.area > b.area;
  });
  return out;
}

LocalizationResult localize_regions(std::span<const ContactRegion> regions,
                                    const CameraIntrinsics& k, const ExtrinsicPose& pose,
                                    const CylinderModel& cyl) {
  LocalizationResult result;
  for (const auto& region : regions) {
    const auto p = try_unproject(region.centroid, k, pose, cyl);
    if (!p) {
      result.skipped.push_back(region);
      continue;
    }
    result.contacts.push_back(
        {region, *p, central_angle(*p), p->x, (p->x + 0.5 * cyl.length) / cyl.length});
  }
  return result;
}

LocalizationResult localize_contacts(const GrayImage& frame, const CameraIntrinsics& k,
                                     const ExtrinsicPose& pose, const CylinderModel& cyl,
                                     const LocalizeParams& params) {
  std::optional<int> threshold;
  const BinaryImage mask = preprocess(frame, params.binarize, &threshold);
  const ContactRegions found = find_contact_regions(mask, params.min_area);
  LocalizationResult result = localize_regions(found.regions, k, pose, cyl);
  result.threshold = threshold;
  return result;
}

std::array<double, 5> experiment_angles() {
  constexpr double pi = std::numbers::pi;
  return {-pi / 6.0, -pi / 12.0, 0.0, pi / 12.0, pi / 6.0};
}

std::array<double, 3> experiment_axial_fractions() { return {0.25, 0.5, 0.75}; }

LocalizationReport evaluate_localization(std::span<const SurfacePoint> estimates,
                                         std::span<const TruthContact> truth, double gate_mm) {
  for (const auto& t : truth) {
    if (t.angle_cell < 0 || t.angle_cell >= 5 || t.axial_cell < 0 || t.axial_cell >= 3)
      throw Error(ErrorCode::InvalidArgument, "truth contact outside the 5x3 experiment grid");
  }

  std::vector<std::tuple<double, int, int>> candidates;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const double e = distance(estimates[i], truth[j].point);
      if (e <= gate_mm) candidates.emplace_back(e, static_cast<int>(i), static_cast<int>(j));
    }
  }
  std::ranges::sort(candidates);

  LocalizationReport report;
  std::vector<bool> est_used(estimates.size(), false);
  std::vector<bool> truth_used(truth.size(), false);
  for (const auto& [e, i, j] : candidates) {
    if (est_used[i] || truth_used[j]) continue;
    est_used[i] = true;
    truth_used[j] = true;
    report.matches.push_back({i, j, e, truth[j].angle_cell, truth[j].axial_cell});
  }
  std::ranges::sort(report.matches, {}, &ContactMatch::truth);
  for (std::size_t i = 0; i < est_used.size(); ++i)
    if (!est_used[i]) report.unmatched_estimates.push_back(static_cast<int>(i));
  for (std::size_t j = 0; j < truth_used.size(); ++j)
    if (!truth_used[j]) report.unmatched_truth.push_back(static_cast<int>(j));

  fill_cells(report);
  return report;
}

LocalizationReport combine_reports(std::span<const LocalizationReport> reports) {
  LocalizationReport out;
  for (const auto& r : reports) {
    out.matches.insert(out.matches.end(), r.matches.begin(), r.matches.end());
    out.unmatched_estimates.insert(out.unmatched_estimates.end(), r.unmatched_estimates.begin(),
                                   r.unmatched_estimates.end());
    out.unmatched_truth.insert(out.unmatched_truth.end(), r.unmatched_truth.begin(),
                               r.unmatched_truth.end());
  }
  fill_cells(out);
  return out;
}

const std::array<std::array<ReferenceCell, 3>, 5>& hardware_reference_table() {
  static const std::array<std::array<ReferenceCell, 3>, 5> table{{
      {{{9.64, 0.09}, {11.13, 0.06}, {13.75, 1.89}}},
      {{{7.53, 0.19}, {4.50, 0.08}, {8.26, 1.46}}},
      {{{5.00, 0.59}, {2.63, 0.74}, {6.89, 0.79}}},
      {{{6.42, 0.32}, {4.06, 0.26}, {6.66, 0.53}}},
      {{{8.83, 0.10}, {8.58, 0.19}, {12.34, 0.21}}},
  }};
  return table;
}

}  // namespace touchroller
