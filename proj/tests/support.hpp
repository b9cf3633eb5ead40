#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "skipshift/image.hpp"
#include "skipshift/rng.hpp"
#include "skipshift/stand_in_source.hpp"
#include "skipshift/synth_data.hpp"

namespace skipshift::testing {

inline RgbImage random_image(std::mt19937_64& gen, int w, int h) {
  RgbImage img(w, h);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(byte(gen));
  return img;
}

inline const TemplateSet& stand_in_templates() {
  static const TemplateSet set = [] {
    const auto regions = stand_in_regions();
    return extract_templates(render_stand_in_source(2024), regions);
  }();
  return set;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("skipshift_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace skipshift::testing
