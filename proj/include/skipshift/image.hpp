#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace skipshift {

/// Axis-aligned pixel rectangle, origin at the top-left corner.
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool operator==(const Rect&) const = default;
};

/// Interleaved 8-bit RGB raster (row-major, 3 bytes per pixel).
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::uint8_t* pixel(int x, int y) { return &data_[offset(x, y)]; }
  const std::uint8_t* pixel(int x, int y) const { return &data_[offset(x, y)]; }

  std::span<std::uint8_t> bytes() { return data_; }
  std::span<const std::uint8_t> bytes() const { return data_; }

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single-channel 8-bit raster. Used for grayscale images and binary masks
/// (masks hold 0/1 in memory).
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return data_.size(); }

  std::uint8_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<std::uint8_t> bytes() { return data_; }
  std::span<const std::uint8_t> bytes() const { return data_; }

  std::size_t count_nonzero() const;

  bool operator==(const GrayImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ITU-R BT.601 luma, rounded half-up in exact integer arithmetic.
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

GrayImage to_grayscale(const RgbImage& image);

RgbImage crop(const RgbImage& image, const Rect& region);

/// Rotates clockwise by `quarter_turns` * 90 degrees.
RgbImage rotate_quarter_turns(const RgbImage& image, int quarter_turns);

/// Bilinear resampling with pixel-center alignment; results are rounded to
/// the nearest integer.
RgbImage resize_bilinear(const RgbImage& image, int width, int height);

/// Nearest-neighbour resampling with pixel-center alignment.
GrayImage resize_nearest(const GrayImage& image, int width, int height);

/// Otsu threshold over a 256-bin histogram. Returns the smallest t that
/// maximises between-class variance for the split {v < t} / {v >= t}, or
/// nullopt when the image holds a single intensity.
std::optional<int> otsu_threshold(const GrayImage& gray);

}  // namespace skipshift
