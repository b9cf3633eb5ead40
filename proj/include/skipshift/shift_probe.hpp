#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipshift/model_zoo.hpp"
#include "skipshift/shift_metric.hpp"
#include "skipshift/shiftlab.hpp"

namespace skipshift {

/// Pooled, flattened activations of an image set: per tap, K = (side/32)^2
/// rows per image.
struct FeatureSet {
  std::vector<std::string> taps;
  std::map<std::string, FeatureMatrix> features;
  /// Taps whose maps needed adaptive (near-equal window) pooling.
  std::set<std::string> adaptive_taps;
  int images = 0;
  int image_side = 0;

  const FeatureMatrix& at(const std::string& tap) const;
};

/// Runs `images` (square, side a multiple of 32) through the network in
/// batches and pools each requested tap as soon as it is produced.
FeatureSet collect_features(SkipUNet& network, const std::vector<RgbImage>& images,
                            const std::vector<std::string>& taps, int batch_size = 4);

struct LayerShift {
  std::string tap;
  std::vector<double> distances;
  int degenerate_dims = 0;
  bool adaptive_pooling = false;

  /// Arithmetic mean over all dimensions.
  double mean() const;
};

struct LayerShiftReport {
  std::string shift;  // label, e.g. "brightness_0.75"
  int bins = 0;
  int images = 0;
  std::string model;
  int fold = -1;
  std::vector<LayerShift> layers;

  const LayerShift& layer(const std::string& tap) const;
  nlohmann::json to_json() const;
  static LayerShiftReport from_json(const nlohmann::json& j);
  /// tap,dims,mean_distance,degenerate_dims,adaptive
  std::string means_csv() const;
};

/// Per-tap distances between two feature sets with identical tap lists.
std::vector<LayerShift> compare_features(const FeatureSet& reference, const FeatureSet& shifted, int bins,
                                         bool parallel = true);

/// Shifted set = `shift` applied to the reference images.
LayerShiftReport probe(SkipUNet& network, const std::vector<std::string>& taps,
                       const std::vector<RgbImage>& reference, const ShiftSpec& shift, int bins,
                       int batch_size = 4);

/// Layer means of several per-fold reports (same shift, taps and bins).
struct FoldAggregate {
  std::string shift;
  std::vector<std::string> taps;
  /// fold_means[f][t]
  std::vector<std::vector<double>> fold_means;

  double mean(const std::string& tap) const;
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

FoldAggregate aggregate_folds(const std::vector<LayerShiftReport>& reports);

/// One <tap>.npy per tap plus features.json describing the set.
void write_feature_set(const std::filesystem::path& dir, const FeatureSet& set);
FeatureSet read_feature_set(const std::filesystem::path& dir);

}  // namespace skipshift
