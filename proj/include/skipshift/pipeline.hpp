#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "skipshift/config.hpp"
#include "skipshift/run_record.hpp"
#include "skipshift/shift_probe.hpp"
#include "skipshift/synth_data.hpp"
#include "skipshift/trainer.hpp"

namespace skipshift {

struct PipelineOptions {
  bool force = false;
  /// 0 keeps the config's worker count.
  int workers = 0;
  std::function<void(const std::string&)> log;
};

enum class StageResult { ran, cached, partial };

std::string to_string(StageResult r);

/// Stage runner over one output directory:
///   dataset/   images, masks, manifest.json, templates.json
///   training/  per spec and fold: checkpoint, training log, evaluation
///   results/   iou_matrix.csv + iou_matrix.json
///   probe/     per spec, fold and shift: report JSON + layer-mean CSV
///   plots/     SVG figures
/// Each stage is keyed by a hash of its config sections and upstream
/// artifacts; a completed stage with an unchanged key is skipped unless
/// forced.
class Pipeline {
 public:
  Pipeline(ExperimentConfig config, PipelineOptions options = {});

  const ExperimentConfig& config() const { return config_; }
  const RunRecord& record() const { return record_; }
  std::filesystem::path output_dir() const { return config_.output_dir; }
  std::filesystem::path dataset_dir() const { return output_dir() / "dataset"; }
  std::filesystem::path training_dir() const { return output_dir() / "training"; }
  std::filesystem::path results_dir() const { return output_dir() / "results"; }
  std::filesystem::path probe_dir() const { return output_dir() / "probe"; }
  std::filesystem::path plots_dir() const { return output_dir() / "plots"; }

  StageResult generate();
  /// Trains and evaluates every (spec, fold); partial if any job failed.
  StageResult train();
  StageResult probe();
  StageResult report();

  /// generate, train, probe, report. Returns false if a stage failed.
  bool run();

  DatasetManifest manifest() const;
  IoUMatrix iou_matrix() const;
  /// Per-fold reports for one spec and shift, ordered by fold.
  std::vector<LayerShiftReport> probe_reports(const std::string& spec, const ShiftSpec& shift) const;
  std::vector<std::string> probed_specs() const;

  std::string generate_key() const;
  std::string train_key() const;
  std::string probe_key() const;
  std::string report_key() const;

 private:
  void log(const std::string& msg) const;
  bool skip(const std::string& stage, const std::string& key, const std::filesystem::path& dir);
  void complete(const std::string& stage, const std::string& key, std::vector<std::string> artifacts,
                const std::string& status = "completed", const std::string& message = "");

  ExperimentConfig config_;
  PipelineOptions options_;
  RunRecord record_;
};

/// Loads the template source (PNG or stand-in) and cuts the templates.
TemplateSet load_templates(const DatasetSection& dataset);

}  // namespace skipshift
