#pragma once

#include <filesystem>
#include <vector>

#include "touchroller/image.hpp"

namespace touchroller {

/// Reads an 8-bit grayscale or RGB(A) image; color is reduced to BT.601 luma.
/// Throws InputMissing for unreadable files.
GrayImage read_gray(const std::filesystem::path& path);

/// Writes a lossless 8-bit grayscale PNG.
void write_png(const std::filesystem::path& path, const GrayImage& image);

/// BT.601 luma, rounded to the nearest level.
std::uint8_t luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// PNG frames of a directory whose stems end in a number, ordered by that
/// number. Throws InputMissing for a missing or frame-less directory and
/// InvalidArgument for duplicate frame numbers.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

}  // namespace touchroller
