#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skipshift {

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A set of D-dimensional feature vectors, stored row-major (one row per
/// vector). Rows from several images are simply appended.
struct FeatureMatrix {
  int dims = 0;
  std::vector<float> values;

  std::size_t rows() const { return dims == 0 ? 0 : values.size() / static_cast<std::size_t>(dims); }
  float at(std::size_t row, int dim) const { return values[row * dims + dim]; }
  void append(const FeatureMatrix& other);
};

struct PoolingResult {
  FeatureMatrix features;
  /// Set when the map side is not a multiple of the grid side and
  /// near-equal adaptive windows were used instead of a uniform stride.
  bool adaptive = false;
};

/// Average-pools one (D, h, w) map (CHW, h == w) onto a (side/32)^2 grid with
/// kernel = stride = h / (side/32), then flattens to K = (side/32)^2 vectors
/// of dimension D. `tap` names the layer in error messages.
PoolingResult pool_and_flatten(std::span<const float> map, int channels, int height, int width,
                               int image_side, std::string_view tap);

/// Offset (beta) and span (alpha) of the union of two value sets.
struct JointRange {
  double alpha = 0.0;
  double beta = 0.0;

  bool degenerate() const { return alpha == 0.0; }
};

JointRange joint_range(std::span<const double> reference, std::span<const double> shifted);

/// Bin of `value` among `bins` equal-width bins over [beta, beta + alpha].
/// Bins are half-open except the last, which also takes the maximum; a
/// degenerate range puts everything into bin 0.
int bin_index(double value, const JointRange& range, int bins);

/// Relative-frequency histogram; entries sum to 1.
std::vector<double> bin_relative(std::span<const double> values, const JointRange& range, int bins);

/// Hellinger distance sqrt(1 - BC) with BC = sum_b sqrt(p_b q_b), clamped to
/// [0, 1]. Both histograms must have equal length, non-negative entries and
/// sum to 1 within 1e-9.
double hellinger(std::span<const double> p, std::span<const double> q);

struct DimensionShift {
  double distance = 0.0;
  bool degenerate = false;
};

/// Per-dimension distances between two feature sets: joint range per
/// dimension, binning of both sets, Hellinger distance.
std::vector<DimensionShift> layer_hellinger(const FeatureMatrix& reference,
                                            const FeatureMatrix& shifted, int bins,
                                            bool parallel = true);

}  // namespace skipshift
