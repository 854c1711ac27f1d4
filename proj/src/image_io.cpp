#include "touchroller/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <string>
#include <utility>

#include "touchroller/error.hpp"

namespace fs = std::filesystem;

namespace touchroller {

std::uint8_t luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>(std::lround(0.299 * r + 0.587 * g + 0.114 * b));
}

GrayImage read_gray(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::InputMissing, path.string() + " not found");
  const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw Error(ErrorCode::InputMissing, "cannot decode " + path.string());
  if (mat.depth() != CV_8U)
    throw Error(ErrorCode::InvalidArgument, path.string() + " is not an 8-bit image");

  GrayImage out(mat.cols, mat.rows);
  const int channels = mat.channels();
  if (channels != 1 && channels != 3 && channels != 4)
    throw Error(ErrorCode::InvalidArgument, path.string() + " has an unsupported channel count");
  for (int y = 0; y < mat.rows; ++y) {
    const auto* src = mat.ptr<std::uint8_t>(y);
    auto dst = out.row(y);
    for (int x = 0; x < mat.cols; ++x) {
      const auto* px = src + x * channels;
      // OpenCV stores color as BGR(A).
      dst[x] = channels == 1 ? px[0] : luma601(px[2], px[1], px[0]);
    }
  }
  return out;
}

void write_png(const fs::path& path, const GrayImage& image) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  cv::Mat mat(image.height(), image.width(), CV_8UC1);
  for (int y = 0; y < image.height(); ++y) std::ranges::copy(image.row(y), mat.ptr<std::uint8_t>(y));
  if (!cv::imwrite(path.string(), mat))
    throw Error(ErrorCode::InputMissing, "cannot write " + path.string());
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::InputMissing, dir.string() + " is not a directory");
  std::vector<std::pair<long long, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::ranges::transform(ext, ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".png") continue;
    const std::string stem = entry.path().stem().string();
    auto digits = stem.end();
    while (digits != stem.begin() && std::isdigit(static_cast<unsigned char>(*(digits - 1)))) --digits;
    if (digits == stem.end()) continue;
    found.emplace_back(std::stoll(std::string(digits, stem.end())), entry.path());
  }
  if (found.empty()) throw Error(ErrorCode::InputMissing, "no numbered PNG frames in " + dir.string());
  std::ranges::sort(found);
  for (std::size_t i = 1; i < found.size(); ++i) {
    if (found[i].first == found[i - 1].first)
      throw Error(ErrorCode::InvalidArgument, "duplicate frame number " + std::to_string(found[i].first));
  }
  std::vector<fs::path> out;
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

}  // namespace touchroller
