#include "skipshift/kernels/feature_kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>

namespace skipshift::kernels {

Windows pooling_windows(int extent, int cells) {
  Windows w;
  w.begin.resize(cells);
  w.end.resize(cells);
  for (int i = 0; i < cells; ++i) {
    w.begin[i] = static_cast<int>((static_cast<long long>(i) * extent) / cells);
    w.end[i] = static_cast<int>((static_cast<long long>(i + 1) * extent + cells - 1) / cells);
  }
  return w;
}

namespace {

void pool_channel(std::span<const float> map, int c, int height, int width, const Windows& rows,
                  const Windows& cols, FeatureMatrix& out, std::size_t row_offset) {
  const float* plane = map.data() + static_cast<std::size_t>(c) * height * width;
  const int grid_w = static_cast<int>(cols.begin.size());
  for (std::size_t gy = 0; gy < rows.begin.size(); ++gy) {
    for (int gx = 0; gx < grid_w; ++gx) {
      double sum = 0.0;
      for (int y = rows.begin[gy]; y < rows.end[gy]; ++y) {
        for (int x = cols.begin[gx]; x < cols.end[gx]; ++x) sum += plane[y * width + x];
      }
      const double n = static_cast<double>(rows.end[gy] - rows.begin[gy]) *
                       static_cast<double>(cols.end[gx] - cols.begin[gx]);
      const std::size_t row = row_offset + gy * grid_w + gx;
      out.values[row * out.dims + c] = static_cast<float>(sum / n);
    }
  }
}

std::size_t prepare_output(int channels, const Windows& rows, const Windows& cols, FeatureMatrix& out) {
  if (out.dims == 0) out.dims = channels;
  if (out.dims != channels) throw ShapeError("feature dimension changed between appended maps");
  const std::size_t offset = out.rows();
  out.values.resize((offset + rows.begin.size() * cols.begin.size()) * channels);
  return offset;
}

// Joint range of one dimension over both sets; false if a value is not finite.
bool dimension_range(const FeatureMatrix& a, const FeatureMatrix& b, int d, JointRange& range) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const FeatureMatrix* m : {&a, &b}) {
    const std::size_t n = m->rows();
    for (std::size_t r = 0; r < n; ++r) {
      const double v = m->at(r, d);
      if (!std::isfinite(v)) return false;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  range.beta = lo;
  range.alpha = hi - lo;
  return true;
}

// Distance from raw bin counts: BC = sum sqrt(cp * cq) / sqrt(Np * Nq). The
// integer-valued products keep P == Q exactly at BC = 1.
DimensionShift dimension_shift(const FeatureMatrix& ref, const FeatureMatrix& shifted, int d,
                               int bins, std::vector<double>& cp, std::vector<double>& cq,
                               bool& finite) {
  JointRange range;
  if (!dimension_range(ref, shifted, d, range)) {
    finite = false;
    return {};
  }
  if (range.degenerate()) return {0.0, true};
  std::fill(cp.begin(), cp.end(), 0.0);
  std::fill(cq.begin(), cq.end(), 0.0);
  for (std::size_t r = 0; r < ref.rows(); ++r) cp[bin_index(ref.at(r, d), range, bins)] += 1.0;
  for (std::size_t r = 0; r < shifted.rows(); ++r) cq[bin_index(shifted.at(r, d), range, bins)] += 1.0;
  double overlap = 0.0;
  for (int b = 0; b < bins; ++b) overlap += std::sqrt(cp[b] * cq[b]);
  const double norm = std::sqrt(static_cast<double>(ref.rows()) * static_cast<double>(shifted.rows()));
  const double bc = std::clamp(overlap / norm, 0.0, 1.0);
  return {std::sqrt(1.0 - bc), false};
}

void check_layer_inputs(const FeatureMatrix& ref, const FeatureMatrix& shifted, int bins) {
  if (bins < 2) throw std::invalid_argument("bin count must be >= 2");
  if (ref.dims != shifted.dims) throw ShapeError("reference and shifted feature dimensions differ");
  if (ref.rows() == 0 || shifted.rows() == 0) throw std::invalid_argument("empty feature set");
}

}  // namespace

namespace serial {

void pool_chw(std::span<const float> map, int channels, int height, int width, const Windows& rows,
              const Windows& cols, FeatureMatrix& out) {
  const std::size_t offset = prepare_output(channels, rows, cols, out);
  for (int c = 0; c < channels; ++c) pool_channel(map, c, height, width, rows, cols, out, offset);
}

std::vector<DimensionShift> layer_hellinger(const FeatureMatrix& ref, const FeatureMatrix& shifted,
                                            int bins) {
  check_layer_inputs(ref, shifted, bins);
  std::vector<DimensionShift> out(ref.dims);
  std::vector<double> cp(bins);
  std::vector<double> cq(bins);
  bool finite = true;
  for (int d = 0; d < ref.dims && finite; ++d) {
    out[d] = dimension_shift(ref, shifted, d, bins, cp, cq, finite);
  }
  if (!finite) throw std::invalid_argument("non-finite feature value");
  return out;
}

}  // namespace serial

namespace omp {

void pool_chw(std::span<const float> map, int channels, int height, int width, const Windows& rows,
              const Windows& cols, FeatureMatrix& out) {
  const std::size_t offset = prepare_output(channels, rows, cols, out);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) pool_channel(map, c, height, width, rows, cols, out, offset);
}

std::vector<DimensionShift> layer_hellinger(const FeatureMatrix& ref, const FeatureMatrix& shifted,
                                            int bins) {
  check_layer_inputs(ref, shifted, bins);
  std::vector<DimensionShift> out(ref.dims);
  std::atomic<bool> all_finite{true};
#pragma omp parallel
  {
    std::vector<double> cp(bins);
    std::vector<double> cq(bins);
#pragma omp for schedule(dynamic, 4)
    for (int d = 0; d < ref.dims; ++d) {
      bool finite = true;
      out[d] = dimension_shift(ref, shifted, d, bins, cp, cq, finite);
      if (!finite) all_finite = false;
    }
  }
  if (!all_finite) throw std::invalid_argument("non-finite feature value");
  return out;
}

}  // namespace omp

}  // namespace skipshift::kernels
