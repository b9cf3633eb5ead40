#include "skipshift/sample_store.hpp"

#include <stdexcept>

#include "skipshift/png_io.hpp"

namespace skipshift {

SampleStore::SampleStore(std::filesystem::path dataset_dir, DatasetManifest manifest)
    : dir_(std::move(dataset_dir)), manifest_(std::move(manifest)) {}

const ManifestEntry& SampleStore::entry(int index) const {
  if (index < 0 || index >= static_cast<int>(manifest_.entries.size()) ||
      manifest_.entries[index].index != index) {
    throw std::out_of_range("no manifest entry with index " + std::to_string(index));
  }
  return manifest_.entries[index];
}

const RgbImage& SampleStore::image(int index) {
  const auto& e = entry(index);
  std::lock_guard lock(mutex_);
  accessed_.insert(e.image_path);
  auto it = images_.find(index);
  if (it == images_.end()) it = images_.emplace(index, read_png_rgb(dir_ / e.image_path)).first;
  return it->second;
}

const GrayImage& SampleStore::mask(int index) {
  const auto& e = entry(index);
  std::lock_guard lock(mutex_);
  accessed_.insert(e.mask_path);
  auto it = masks_.find(index);
  if (it == masks_.end()) {
    it = masks_.emplace(index, read_png_gray(dir_ / e.mask_path, /*binarize=*/true)).first;
  }
  return it->second;
}

std::set<std::string> SampleStore::accessed_paths() const {
  std::lock_guard lock(mutex_);
  return accessed_;
}

void SampleStore::clear_access_log() {
  std::lock_guard lock(mutex_);
  accessed_.clear();
}

}  // namespace skipshift
