#pragma once

#include <array>
#include <cstdint>
#include <span>

// Per-pixel kernels behind the domain-shift transforms. Each exists as a
// serial reference and an OpenMP variant; outputs must match bit for bit.

namespace skipshift::kernels {

using Lut = std::array<std::uint8_t, 256>;

namespace serial {

void apply_lut(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Lut& lut);

/// Sum of BT.601 luma over interleaved RGB pixels.
std::uint64_t luma_sum(std::span<const std::uint8_t> rgb);

/// out = round(factor * x + (1 - factor) * luma(x)) per channel.
void desaturate(std::span<const std::uint8_t> rgb, std::span<std::uint8_t> out, double factor);

}  // namespace serial

namespace omp {

void apply_lut(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, const Lut& lut);
std::uint64_t luma_sum(std::span<const std::uint8_t> rgb);
void desaturate(std::span<const std::uint8_t> rgb, std::span<std::uint8_t> out, double factor);

}  // namespace omp

}  // namespace skipshift::kernels
