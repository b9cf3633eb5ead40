#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipshift/image.hpp"
#include "skipshift/kernels/pixel_kernels.hpp"

namespace skipshift {

enum class ShiftKind { brightness, contrast, saturation };

std::string to_string(ShiftKind kind);
/// Throws std::invalid_argument for anything but the three known kinds.
ShiftKind parse_shift_kind(std::string_view text);

struct ShiftSpec {
  ShiftKind kind = ShiftKind::brightness;
  double factor = 1.0;

  /// e.g. "brightness_0.75"
  std::string label() const;
  nlohmann::json to_json() const;
  static ShiftSpec from_json(const nlohmann::json& j);

  bool operator==(const ShiftSpec&) const = default;
};

/// Factor lists per shift kind. The unshifted "original" column is evaluated
/// separately and is not part of the grid.
struct SweepGrid {
  std::vector<double> brightness{0.5, 0.75, 1.25, 1.5, 1.75};
  std::vector<double> contrast{0.5, 0.75, 1.25, 1.5, 1.75};
  std::vector<double> saturation{0.0, 0.25, 0.5, 0.75};

  /// Lists must be sorted; brightness/contrast in [0.5, 1.75], saturation in [0, 1].
  void validate() const;
  /// Grid in column order: brightness, contrast, saturation.
  std::vector<ShiftSpec> specs() const;

  nlohmann::json to_json() const;
  static SweepGrid from_json(const nlohmann::json& j);
};

enum class Execution { serial, parallel };

kernels::Lut brightness_lut(double factor);
kernels::Lut contrast_lut(double factor, double mean_luma);
double mean_luma(const RgbImage& image, Execution exec = Execution::parallel);

/// v -> clip(round(factor * v)). Requires factor > 0.
RgbImage apply_brightness(const RgbImage& image, double factor, Execution exec = Execution::parallel);

/// Per-channel LUT b -> clip(round(b * factor + mean * (1 - factor))) where
/// mean is the average luma of the image. Requires factor > 0.
RgbImage apply_contrast(const RgbImage& image, double factor, Execution exec = Execution::parallel);

/// x -> round(factor * x + (1 - factor) * luma(x)). Requires 0 <= factor <= 1.
RgbImage apply_saturation(const RgbImage& image, double factor, Execution exec = Execution::parallel);

RgbImage apply(const ShiftSpec& spec, const RgbImage& image, Execution exec = Execution::parallel);

}  // namespace skipshift
