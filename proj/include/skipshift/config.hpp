#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipshift/image.hpp"
#include "skipshift/model_zoo.hpp"
#include "skipshift/shiftlab.hpp"
#include "skipshift/synth_data.hpp"
#include "skipshift/trainer.hpp"

namespace skipshift {

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSection {
  /// Empty selects the built-in procedural stand-in frame.
  std::string source_image;
  std::uint64_t stand_in_seed = 2024;
  /// background, 3 cells, 3 artifacts; empty selects the stand-in regions.
  std::vector<Rect> regions;
  int count = 1000;
  std::uint64_t master_seed = 1234;
  GeneratorParams generator;
};

struct ModelSection {
  std::vector<int> encoder_depths{18, 34};
  std::vector<int> prune_levels{0, 1, 2, 3, 4};
  std::array<int, 5> decoder_channels{256, 128, 64, 32, 16};
  int num_classes = 2;
  /// Optional encoder weight file shared by every spec of matching depth.
  std::string pretrained_encoder;

  std::vector<PrunedUNetSpec> specs() const;
};

struct ProbeSection {
  std::vector<std::string> taps{"encoder_0", "encoder_1", "encoder_2", "encoder_3", "encoder_4",
                                "decoder_3", "decoder_2", "decoder_1", "decoder_0"};
  int bins = 100;
  std::vector<ShiftSpec> shifts{{ShiftKind::brightness, 0.75}};
  /// Spec names to probe; empty probes every trained spec.
  std::vector<std::string> models;
  int batch_size = 4;
  bool dump_features = false;
};

struct ExperimentConfig {
  std::string output_dir = "runs/experiment";
  DatasetSection dataset;
  ModelSection model;
  TrainConfig training;
  SweepGrid sweep;
  ProbeSection probe;
  int workers = 1;

  /// Throws ConfigError on any inconsistency.
  void validate() const;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);

  /// SHA-256 of the canonical JSON of one top-level section.
  std::string section_hash(std::string_view section) const;
};

/// Expands ${VAR} and ${VAR:-default} in every string value. An unset
/// variable without default is a ConfigError.
nlohmann::json expand_environment(const nlohmann::json& j);

/// Reads a JSON config, expands environment references, applies the
/// SKIPSHIFT_OUTPUT_DIR override and validates. Relative paths are resolved
/// against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);

/// 200 images at 256^2, depth 18 baseline + L1, 2 folds, 15 epochs.
ExperimentConfig desk_preset();
/// 1000 images at 512^2, depths 18/34, L0..L4, 5 folds, 50 epochs.
ExperimentConfig paper_preset();

/// Replaces the scale-dependent fields (dataset size, image size, model
/// list, folds, epochs, crop) with those of the given preset.
void apply_scale(ExperimentConfig& config, const ExperimentConfig& preset);

}  // namespace skipshift
