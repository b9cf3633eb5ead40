#include "skipshift/kernels/pixel_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "skipshift/image.hpp"

namespace skipshift::kernels {

namespace {

inline void desaturate_pixel(const std::uint8_t* in, std::uint8_t* out, double factor) {
  const double g = luma(in[0], in[1], in[2]);
  for (int c = 0; c < 3; ++c) {
    const double v = factor * in[c] + (1.0 - factor) * g;
    out[c] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
  }
}

}  // namespace

namespace serial {

void apply_lut(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Lut& lut) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = lut[in[i]];
}

std::uint64_t luma_sum(std::span<const std::uint8_t> rgb) {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i + 2 < rgb.size(); i += 3) sum += luma(rgb[i], rgb[i + 1], rgb[i + 2]);
  return sum;
}

void desaturate(std::span<const std::uint8_t> rgb, std::span<std::uint8_t> out, double factor) {
  for (std::size_t i = 0; i + 2 < rgb.size(); i += 3) desaturate_pixel(&rgb[i], &out[i], factor);
}

}  // namespace serial

namespace omp {

void apply_lut(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Lut& lut) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = lut[in[i]];
}

std::uint64_t luma_sum(std::span<const std::uint8_t> rgb) {
  const auto pixels = static_cast<std::ptrdiff_t>(rgb.size() / 3);
  std::uint64_t sum = 0;
#pragma omp parallel for schedule(static) reduction(+ : sum)
  for (std::ptrdiff_t p = 0; p < pixels; ++p) {
    sum += luma(rgb[3 * p], rgb[3 * p + 1], rgb[3 * p + 2]);
  }
  return sum;
}

void desaturate(std::span<const std::uint8_t> rgb, std::span<std::uint8_t> out, double factor) {
  const auto pixels = static_cast<std::ptrdiff_t>(rgb.size() / 3);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < pixels; ++p) desaturate_pixel(&rgb[3 * p], &out[3 * p], factor);
}

}  // namespace omp

}  // namespace skipshift::kernels
