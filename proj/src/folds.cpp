#include "skipshift/folds.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

#include "skipshift/rng.hpp"

namespace skipshift {

std::vector<FoldPartition> stratified_folds(const DatasetManifest& manifest, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("fold count must be >= 2");
  std::array<std::vector<int>, 2> by_class;
  for (const auto& e : manifest.entries) {
    if (e.split != Split::train) continue;
    by_class[e.density == DensityClass::low ? 0 : 1].push_back(e.index);
  }
  for (int c = 0; c < 2; ++c) {
    if (static_cast<int>(by_class[c].size()) < k) {
      throw std::invalid_argument("too few " + to_string(c == 0 ? DensityClass::low : DensityClass::high) +
                                  "-density train samples (" + std::to_string(by_class[c].size()) +
                                  ") for " + std::to_string(k) + " folds");
    }
  }

  std::vector<std::vector<int>> val(k);
  int next = 0;
  for (int c = 0; c < 2; ++c) {
    auto& idx = by_class[c];
    Rng rng(derive_seed(seed, 0xF01D0000ULL + c));
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    for (int sample : idx) {
      val[next].push_back(sample);
      next = (next + 1) % k;
    }
  }

  std::vector<FoldPartition> folds(k);
  for (int f = 0; f < k; ++f) {
    std::sort(val[f].begin(), val[f].end());
    folds[f].val = val[f];
    for (int g = 0; g < k; ++g) {
      if (g != f) folds[f].train.insert(folds[f].train.end(), val[g].begin(), val[g].end());
    }
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

}  // namespace skipshift
