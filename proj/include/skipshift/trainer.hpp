#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "skipshift/confusion.hpp"
#include "skipshift/folds.hpp"
#include "skipshift/model_zoo.hpp"
#include "skipshift/rng.hpp"
#include "skipshift/sample_store.hpp"
#include "skipshift/shiftlab.hpp"

namespace skipshift {

struct TrainConfig {
  int batch_size = 8;
  double initial_lr = 1e-4;
  /// Step decay: lr *= decay_factor at floor(m * epochs) for each m.
  std::vector<double> decay_milestones{0.5, 0.75};
  double decay_factor = 0.1;
  int epochs = 50;
  int folds = 5;
  /// Square training crop; 0 trains on the full image.
  int crop_size = 0;
  /// Geometric augmentation only (flip, rotation, scaling, cropping).
  bool augment = true;
  double scale_min = 0.75;
  double scale_max = 1.25;
  double dice_smooth = 1.0;
  /// Class whose IoU the sweep reports (cells).
  int class_of_interest = 1;
  std::uint64_t seed = 42;
  std::uint64_t fold_seed = 7;

  void validate() const;
  double learning_rate(int epoch) const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// (3, H, W) float in [0, 1].
torch::Tensor image_to_tensor(const RgbImage& image);
/// (H, W) int64 labels.
torch::Tensor mask_to_tensor(const GrayImage& mask);

/// Applies the same random geometric transform to an image (bilinear) and
/// its label map (nearest): flips, quarter-turn rotation, isotropic scaling,
/// then a random crop (reflect-padding when smaller) to `crop_size`, or back
/// to the input size when crop_size is 0.
std::pair<torch::Tensor, torch::Tensor> augment_pair(const torch::Tensor& image, const torch::Tensor& labels,
                                                     Rng& rng, const TrainConfig& cfg);

/// Pixel-mean cross-entropy plus (1 - soft Dice averaged over classes).
torch::Tensor segmentation_loss(const torch::Tensor& logits, const torch::Tensor& labels, double dice_smooth);

/// Argmax over classes (first maximum wins), as uint8 (B, H, W).
torch::Tensor predict_labels(SkipUNet& network, const torch::Tensor& batch);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_miou = 0.0;
  double learning_rate = 0.0;

  nlohmann::json to_json() const;
};

struct TrainOutcome {
  SkipUNet model{nullptr};
  /// -1 when no epoch finished.
  int best_epoch = -1;
  double best_val_miou = 0.0;
  std::vector<EpochRecord> log;
  bool aborted = false;
  std::string diagnostic;
};

/// Trains `spec` on the fold's train part and returns the weights of the
/// epoch with the highest validation mIoU (earliest on ties). A non-finite
/// loss aborts training; the best weights so far are still returned.
TrainOutcome train_one(const PrunedUNetSpec& spec, SampleStore& store, const FoldPartition& fold,
                       const TrainConfig& cfg, std::uint64_t seed,
                       const std::optional<std::filesystem::path>& pretrained_encoder = std::nullopt,
                       const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Runs inference over `indices` (optionally shifted) and accumulates a
/// single confusion matrix for the whole set.
ConfusionAccumulator evaluate_confusion(SkipUNet& network, SampleStore& store, const std::vector<int>& indices,
                                        const std::optional<ShiftSpec>& shift, int batch_size = 8);

/// Per-class IoU from the accumulated confusion matrix.
std::vector<double> evaluate(SkipUNet& network, SampleStore& store, const std::vector<int>& indices,
                             const std::optional<ShiftSpec>& shift, int batch_size = 8);

struct IoUCell {
  /// NaN marks a failed fold.
  std::vector<double> fold_values;
  std::vector<std::string> errors;

  bool complete() const;
  double mean() const;
  double stddev() const;
};

/// Rows = model specs, columns = "original" followed by the sweep columns.
struct IoUMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  int folds = 0;
  std::vector<std::vector<IoUCell>> cells;

  const IoUCell& cell(const std::string& row, const std::string& column) const;
  std::string to_csv() const;
  nlohmann::json to_json() const;
  static IoUMatrix from_json(const nlohmann::json& j);
};

/// Evaluation of one trained (spec, fold) checkpoint on every column.
struct JobEvaluation {
  std::string spec;
  int fold = 0;
  std::vector<std::pair<std::string, double>> column_iou;
  std::string error;

  nlohmann::json to_json() const;
  static JobEvaluation from_json(const nlohmann::json& j);
};

/// Evaluates a checkpoint on the unshifted test set and every grid shift.
JobEvaluation evaluate_job(SkipUNet& network, const std::string& spec_name, int fold, SampleStore& store,
                           const std::vector<int>& test_indices, const SweepGrid& grid,
                           const TrainConfig& cfg);

IoUMatrix assemble_matrix(const std::vector<std::string>& spec_names, const SweepGrid& grid, int folds,
                          const std::vector<JobEvaluation>& jobs);

struct SweepOptions {
  int workers = 1;
  /// When set, checkpoints and logs are cached here and reused if present.
  std::optional<std::filesystem::path> work_dir;
  std::optional<std::filesystem::path> pretrained_encoder;
  std::function<void(const std::string&)> progress;
};

/// Trains every (spec, fold) pair once, evaluates on the original test set
/// and each grid factor, and aggregates the cell IoU per spec and column.
IoUMatrix run_sweep(const std::vector<PrunedUNetSpec>& specs, const SweepGrid& grid, const TrainConfig& cfg,
                    SampleStore& store, const SweepOptions& options = {});

void save_checkpoint(SkipUNet& network, const std::filesystem::path& path);
SkipUNet load_checkpoint(const PrunedUNetSpec& spec, const std::filesystem::path& path);

}  // namespace skipshift
