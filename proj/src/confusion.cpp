#include "skipshift/confusion.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace skipshift {

ConfusionAccumulator::ConfusionAccumulator(int classes) : classes_(classes) {
  if (classes < 2) throw std::invalid_argument("confusion matrix needs at least 2 classes");
  counts_.assign(static_cast<std::size_t>(classes) * classes, 0);
}

void ConfusionAccumulator::add(int truth, int prediction, std::uint64_t count) {
  if (truth < 0 || truth >= classes_ || prediction < 0 || prediction >= classes_) {
    throw std::out_of_range("class label out of range: " + std::to_string(truth) + "/" +
                            std::to_string(prediction));
  }
  counts_[truth * classes_ + prediction] += count;
}

void ConfusionAccumulator::add(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> prediction) {
  if (truth.size() != prediction.size()) throw std::invalid_argument("truth/prediction size mismatch");
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes_ || prediction[i] >= classes_) throw std::out_of_range("class label out of range");
    ++counts_[truth[i] * classes_ + prediction[i]];
  }
}

void ConfusionAccumulator::merge(const ConfusionAccumulator& other) {
  if (other.classes_ != classes_) throw std::invalid_argument("class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionAccumulator::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

double ConfusionAccumulator::iou(int cls) const {
  const std::uint64_t tp = at(cls, cls);
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  for (int k = 0; k < classes_; ++k) {
    if (k == cls) continue;
    fp += at(k, cls);
    fn += at(cls, k);
  }
  const std::uint64_t denom = tp + fp + fn;
  return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

std::vector<double> ConfusionAccumulator::ious() const {
  std::vector<double> out(classes_);
  for (int c = 0; c < classes_; ++c) out[c] = iou(c);
  return out;
}

double ConfusionAccumulator::mean_iou() const {
  const auto v = ious();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace skipshift
