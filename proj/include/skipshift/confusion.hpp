#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace skipshift {

/// C x C pixel counts (rows = ground truth, columns = prediction)
/// accumulated over a whole evaluation set.
class ConfusionAccumulator {
 public:
  explicit ConfusionAccumulator(int classes);

  int classes() const { return classes_; }
  void add(int truth, int prediction, std::uint64_t count = 1);
  void add(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> prediction);
  void merge(const ConfusionAccumulator& other);

  std::uint64_t at(int truth, int prediction) const { return counts_[truth * classes_ + prediction]; }
  std::uint64_t total() const;

  /// TP / (TP + FP + FN) from the accumulated counts. A class absent from
  /// both truth and prediction scores 1.
  double iou(int cls) const;
  std::vector<double> ious() const;
  double mean_iou() const;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;
};

}  // namespace skipshift
