#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "skipshift/image.hpp"
#include "skipshift/synth_data.hpp"

namespace skipshift {

/// Lazily loads dataset images and masks by manifest index, caching them in
/// memory and logging every file it reads. Thread-safe.
class SampleStore {
 public:
  SampleStore(std::filesystem::path dataset_dir, DatasetManifest manifest);

  const DatasetManifest& manifest() const { return manifest_; }
  const std::filesystem::path& dataset_dir() const { return dir_; }

  const RgbImage& image(int index);
  /// Mask with values {0, 1}.
  const GrayImage& mask(int index);

  /// Relative paths (as in the manifest) of every file read so far.
  std::set<std::string> accessed_paths() const;
  void clear_access_log();

 private:
  const ManifestEntry& entry(int index) const;

  std::filesystem::path dir_;
  DatasetManifest manifest_;
  mutable std::mutex mutex_;
  std::map<int, RgbImage> images_;
  std::map<int, GrayImage> masks_;
  std::set<std::string> accessed_;
};

}  // namespace skipshift
