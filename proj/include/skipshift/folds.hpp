#pragma once

#include <cstdint>
#include <vector>

#include "skipshift/synth_data.hpp"

namespace skipshift {

/// Manifest sample indices of one cross-validation fold.
struct FoldPartition {
  std::vector<int> train;
  std::vector<int> val;
};

/// k-fold partition of the manifest's train split, stratified by density
/// class: each class is shuffled (seeded) and dealt round-robin, continuing
/// the rotation across classes, so fold sizes and per-class counts differ by
/// at most one. Requires k >= 2 and at least k train samples per class.
std::vector<FoldPartition> stratified_folds(const DatasetManifest& manifest, int k, std::uint64_t seed);

}  // namespace skipshift
