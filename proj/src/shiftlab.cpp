#include "skipshift/shiftlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace skipshift {

namespace {

std::string format_factor(double f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", f);
  return buf;
}

void check_sorted_range(const std::vector<double>& v, double lo, double hi, const char* name) {
  if (!std::is_sorted(v.begin(), v.end())) {
    throw std::invalid_argument(std::string("sweep list '") + name + "' must be sorted");
  }
  for (double f : v) {
    if (!(f >= lo && f <= hi)) {
      throw std::invalid_argument(std::string("sweep factor ") + format_factor(f) + " for '" + name +
                                  "' outside [" + format_factor(lo) + ", " + format_factor(hi) + "]");
    }
  }
}

std::uint8_t clip_round(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

RgbImage map_lut(const RgbImage& image, const kernels::Lut& lut, Execution exec) {
  RgbImage out(image.width(), image.height());
  if (exec == Execution::serial) {
    kernels::serial::apply_lut(image.bytes(), out.bytes(), lut);
  } else {
    kernels::omp::apply_lut(image.bytes(), out.bytes(), lut);
  }
  return out;
}

}  // namespace

std::string to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::brightness: return "brightness";
    case ShiftKind::contrast: return "contrast";
    case ShiftKind::saturation: return "saturation";
  }
  throw std::invalid_argument("unknown shift kind");
}

ShiftKind parse_shift_kind(std::string_view text) {
  if (text == "brightness") return ShiftKind::brightness;
  if (text == "contrast") return ShiftKind::contrast;
  if (text == "saturation") return ShiftKind::saturation;
  throw std::invalid_argument("unknown shift kind '" + std::string(text) + "'");
}

std::string ShiftSpec::label() const { return to_string(kind) + "_" + format_factor(factor); }

nlohmann::json ShiftSpec::to_json() const { return {{"kind", to_string(kind)}, {"factor", factor}}; }

ShiftSpec ShiftSpec::from_json(const nlohmann::json& j) {
  return {parse_shift_kind(j.at("kind").get<std::string>()), j.at("factor").get<double>()};
}

void SweepGrid::validate() const {
  check_sorted_range(brightness, 0.5, 1.75, "brightness");
  check_sorted_range(contrast, 0.5, 1.75, "contrast");
  check_sorted_range(saturation, 0.0, 1.0, "saturation");
}

std::vector<ShiftSpec> SweepGrid::specs() const {
  std::vector<ShiftSpec> out;
  for (double f : brightness) out.push_back({ShiftKind::brightness, f});
  for (double f : contrast) out.push_back({ShiftKind::contrast, f});
  for (double f : saturation) out.push_back({ShiftKind::saturation, f});
  return out;
}

nlohmann::json SweepGrid::to_json() const {
  return {{"brightness", brightness}, {"contrast", contrast}, {"saturation", saturation}};
}

SweepGrid SweepGrid::from_json(const nlohmann::json& j) {
  SweepGrid g;
  if (j.contains("brightness")) g.brightness = j.at("brightness").get<std::vector<double>>();
  if (j.contains("contrast")) g.contrast = j.at("contrast").get<std::vector<double>>();
  if (j.contains("saturation")) g.saturation = j.at("saturation").get<std::vector<double>>();
  g.validate();
  return g;
}

kernels::Lut brightness_lut(double factor) {
  kernels::Lut lut{};
  for (int b = 0; b < 256; ++b) lut[b] = clip_round(factor * b);
  return lut;
}

kernels::Lut contrast_lut(double factor, double mean) {
  kernels::Lut lut{};
  for (int b = 0; b < 256; ++b) lut[b] = clip_round(b * factor + mean * (1.0 - factor));
  return lut;
}

double mean_luma(const RgbImage& image, Execution exec) {
  if (image.empty()) throw std::invalid_argument("empty image");
  const std::uint64_t sum = exec == Execution::serial ? kernels::serial::luma_sum(image.bytes())
                                                      : kernels::omp::luma_sum(image.bytes());
  return static_cast<double>(sum) / static_cast<double>(image.pixel_count());
}

RgbImage apply_brightness(const RgbImage& image, double factor, Execution exec) {
  if (!(factor > 0.0)) throw std::invalid_argument("brightness factor must be positive");
  return map_lut(image, brightness_lut(factor), exec);
}

RgbImage apply_contrast(const RgbImage& image, double factor, Execution exec) {
  if (!(factor > 0.0)) throw std::invalid_argument("contrast factor must be positive");
  return map_lut(image, contrast_lut(factor, mean_luma(image, exec)), exec);
}

RgbImage apply_saturation(const RgbImage& image, double factor, Execution exec) {
  if (!(factor >= 0.0 && factor <= 1.0)) {
    throw std::invalid_argument("saturation factor must lie in [0, 1]");
  }
  RgbImage out(image.width(), image.height());
  if (exec == Execution::serial) {
    kernels::serial::desaturate(image.bytes(), out.bytes(), factor);
  } else {
    kernels::omp::desaturate(image.bytes(), out.bytes(), factor);
  }
  return out;
}

RgbImage apply(const ShiftSpec& spec, const RgbImage& image, Execution exec) {
  switch (spec.kind) {
    case ShiftKind::brightness: return apply_brightness(image, spec.factor, exec);
    case ShiftKind::contrast: return apply_contrast(image, spec.factor, exec);
    case ShiftKind::saturation: return apply_saturation(image, spec.factor, exec);
  }
  throw std::invalid_argument("unknown shift kind");
}

}  // namespace skipshift
