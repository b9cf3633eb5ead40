#pragma once

#include <span>
#include <vector>

#include "skipshift/shift_metric.hpp"

// Feature-statistics kernels. The OpenMP variants split work across feature
// dimensions (channels); every dimension is computed with the same
// arithmetic in both variants, so results are bit-identical.

namespace skipshift::kernels {

/// Pooling windows along one axis: [begin[i], end[i]).
struct Windows {
  std::vector<int> begin;
  std::vector<int> end;
};

Windows pooling_windows(int extent, int cells);

namespace serial {

void pool_chw(std::span<const float> map, int channels, int height, int width, const Windows& rows,
              const Windows& cols, FeatureMatrix& out);

std::vector<DimensionShift> layer_hellinger(const FeatureMatrix& reference,
                                            const FeatureMatrix& shifted, int bins);

}  // namespace serial

namespace omp {

void pool_chw(std::span<const float> map, int channels, int height, int width, const Windows& rows,
              const Windows& cols, FeatureMatrix& out);

std::vector<DimensionShift> layer_hellinger(const FeatureMatrix& reference,
                                            const FeatureMatrix& shifted, int bins);

}  // namespace omp

}  // namespace skipshift::kernels
