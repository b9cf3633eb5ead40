#include "skipshift/shift_metric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skipshift/kernels/feature_kernels.hpp"

namespace skipshift {

void FeatureMatrix::append(const FeatureMatrix& other) {
  if (other.values.empty()) return;
  if (dims == 0) dims = other.dims;
  if (dims != other.dims) throw ShapeError("cannot append features of different dimension");
  values.insert(values.end(), other.values.begin(), other.values.end());
}

PoolingResult pool_and_flatten(std::span<const float> map, int channels, int height, int width,
                               int image_side, std::string_view tap) {
  const std::string name(tap);
  if (image_side <= 0 || image_side % 32 != 0) {
    throw ShapeError("tap '" + name + "': image side " + std::to_string(image_side) +
                     " is not a positive multiple of 32");
  }
  if (height != width) {
    throw ShapeError("tap '" + name + "': feature map is " + std::to_string(height) + "x" +
                     std::to_string(width) + ", expected a square map");
  }
  if (map.size() != static_cast<std::size_t>(channels) * height * width) {
    throw ShapeError("tap '" + name + "': buffer size does not match (D, h, w)");
  }
  const int grid = image_side / 32;
  if (height < grid) {
    throw ShapeError("tap '" + name + "': map side " + std::to_string(height) +
                     " is smaller than the pooling grid " + std::to_string(grid));
  }
  PoolingResult result;
  result.adaptive = height % grid != 0;
  const auto rows = kernels::pooling_windows(height, grid);
  const auto cols = kernels::pooling_windows(width, grid);
  kernels::omp::pool_chw(map, channels, height, width, rows, cols, result.features);
  return result;
}

JointRange joint_range(std::span<const double> reference, std::span<const double> shifted) {
  if (reference.empty() || shifted.empty()) {
    throw std::invalid_argument("joint range needs two non-empty value sets");
  }
  const auto [rlo, rhi] = std::minmax_element(reference.begin(), reference.end());
  const auto [slo, shi] = std::minmax_element(shifted.begin(), shifted.end());
  const double lo = std::min(*rlo, *slo);
  const double hi = std::max(*rhi, *shi);
  return {hi - lo, lo};
}

int bin_index(double value, const JointRange& range, int bins) {
  if (range.degenerate()) return 0;
  const auto edge = [&](int b) { return (static_cast<double>(b) / bins) * range.alpha + range.beta; };
  int b = static_cast<int>(std::floor((value - range.beta) / range.alpha * bins));
  b = std::clamp(b, 0, bins - 1);
  // Settle on the bin whose literal edges [edge(b), edge(b+1)) contain the
  // value, so rounding in the division above never moves a boundary value.
  while (b > 0 && value < edge(b)) --b;
  while (b < bins - 1 && value >= edge(b + 1)) ++b;
  return b;
}

std::vector<double> bin_relative(std::span<const double> values, const JointRange& range, int bins) {
  if (bins < 2) throw std::invalid_argument("bin count must be >= 2");
  if (range.alpha < 0.0) throw std::invalid_argument("range span must be non-negative");
  if (values.empty()) throw std::invalid_argument("cannot bin an empty value set");
  std::vector<double> hist(bins, 0.0);
  for (double v : values) hist[bin_index(v, range, bins)] += 1.0;
  const double n = static_cast<double>(values.size());
  for (auto& h : hist) h /= n;
  return hist;
}

double hellinger(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw std::invalid_argument("histograms must have equal, non-zero length");
  double sum_p = 0.0;
  double sum_q = 0.0;
  double overlap = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) {
    if (!(p[b] >= 0.0) || !(q[b] >= 0.0)) throw std::invalid_argument("histogram entries must be non-negative");
    sum_p += p[b];
    sum_q += q[b];
    overlap += std::sqrt(p[b] * q[b]);
  }
  if (std::abs(sum_p - 1.0) > 1e-9 || std::abs(sum_q - 1.0) > 1e-9) {
    throw std::invalid_argument("histograms must sum to 1");
  }
  // Dividing by the actual masses keeps identical inputs at exactly BC = 1.
  const double bc = std::clamp(overlap / std::sqrt(sum_p * sum_q), 0.0, 1.0);
  return std::sqrt(1.0 - bc);
}

std::vector<DimensionShift> layer_hellinger(const FeatureMatrix& reference,
                                            const FeatureMatrix& shifted, int bins, bool parallel) {
  return parallel ? kernels::omp::layer_hellinger(reference, shifted, bins)
                  : kernels::serial::layer_hellinger(reference, shifted, bins);
}

}  // namespace skipshift
