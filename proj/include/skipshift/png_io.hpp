#pragma once

#include <filesystem>

#include "skipshift/image.hpp"

namespace skipshift {

RgbImage read_png_rgb(const std::filesystem::path& path);

/// Reads a single-channel PNG. When `binarize` is set, any non-zero value
/// becomes 1 (masks are stored on disk as {0, 255}).
GrayImage read_png_gray(const std::filesystem::path& path, bool binarize = false);

void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Writes a single-channel PNG. With `mask_scale`, values {0,1} are stored
/// as {0,255}.
void write_png(const std::filesystem::path& path, const GrayImage& image, bool mask_scale = false);

}  // namespace skipshift
