#include "skipshift/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "skipshift/fs_util.hpp"
#include "skipshift/plots.hpp"
#include "skipshift/png_io.hpp"
#include "skipshift/sample_store.hpp"
#include "skipshift/stand_in_source.hpp"

namespace skipshift {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(StageResult r) {
  switch (r) {
    case StageResult::ran:
      return "ran";
    case StageResult::cached:
      return "cached";
    case StageResult::partial:
      return "partial";
  }
  return "?";
}

TemplateSet load_templates(const DatasetSection& dataset) {
  const RgbImage source = dataset.source_image.empty() ? render_stand_in_source(dataset.stand_in_seed)
                                                       : read_png_rgb(dataset.source_image);
  if (dataset.regions.empty()) {
    const auto regions = stand_in_regions();
    return extract_templates(source, regions);
  }
  return extract_templates(source, dataset.regions);
}

Pipeline::Pipeline(ExperimentConfig config, PipelineOptions options)
    : config_(std::move(config)), options_(std::move(options)), record_(RunRecord::open(config_.output_dir)) {
  if (options_.workers > 0) config_.workers = options_.workers;
  config_.validate();
  record_.set_config_hash(sha256_hex(config_.to_json().dump()));
}

void Pipeline::log(const std::string& msg) const {
  if (options_.log) options_.log(msg);
}

bool Pipeline::skip(const std::string& stage, const std::string& key, const fs::path& dir) {
  if (!options_.force && record_.completed(stage, key)) {
    log(stage + ": cached (" + key.substr(0, 12) + ")");
    return true;
  }
  if (options_.force && fs::exists(dir)) fs::remove_all(dir);
  return false;
}

void Pipeline::complete(const std::string& stage, const std::string& key, std::vector<std::string> artifacts,
                        const std::string& status, const std::string& message) {
  StageEvent e;
  e.stage = stage;
  e.status = status;
  e.key = key;
  e.artifacts = std::move(artifacts);
  e.message = message;
  record_.append(std::move(e));
}

std::string Pipeline::generate_key() const {
  json k = {{"dataset", config_.to_json().at("dataset")}};
  if (!config_.dataset.source_image.empty()) {
    if (!fs::exists(config_.dataset.source_image)) {
      throw IoError("source image not found: " + config_.dataset.source_image);
    }
    k["source_sha256"] = sha256_file(config_.dataset.source_image);
    k.at("dataset").erase("source_image");
  }
  return sha256_hex(k.dump());
}

std::string Pipeline::train_key() const {
  json k = {{"model", config_.section_hash("model")},
            {"training", config_.section_hash("training")},
            {"sweep", config_.section_hash("sweep")},
            {"manifest", sha256_file(dataset_dir() / "manifest.json")}};
  if (!config_.model.pretrained_encoder.empty()) k["pretrained"] = sha256_file(config_.model.pretrained_encoder);
  return sha256_hex(k.dump());
}

std::string Pipeline::probe_key() const {
  return sha256_hex(json{{"probe", config_.section_hash("probe")},
                         {"matrix", sha256_file(results_dir() / "iou_matrix.json")},
                         {"train", train_key()}}
                        .dump());
}

std::string Pipeline::report_key() const {
  json k = {{"matrix", sha256_file(results_dir() / "iou_matrix.json")}};
  for (const auto& f : list_files(output_dir(), probe_dir())) {
    if (f.size() > 5 && f.ends_with(".json")) k["probe"][f] = sha256_file(output_dir() / f);
  }
  return sha256_hex(k.dump());
}

StageResult Pipeline::generate() {
  const std::string key = generate_key();
  if (skip("generate", key, dataset_dir())) return StageResult::cached;
  const TemplateSet templates = load_templates(config_.dataset);
  log("generate: " + std::to_string(config_.dataset.count) + " samples at " +
      std::to_string(config_.dataset.generator.image_size) + "px");
  if (fs::exists(dataset_dir())) fs::remove_all(dataset_dir());
  build_dataset(templates, config_.dataset.count, config_.dataset.master_seed, config_.dataset.generator,
                dataset_dir());
  json regions = config_.to_json().at("dataset").at("regions");
  if (regions.empty()) {
    for (const auto& r : stand_in_regions()) regions.push_back({r.x, r.y, r.width, r.height});
  }
  write_text_atomic(dataset_dir() / "templates.json",
                    json{{"template_hash", templates.content_hash()},
                         {"source", config_.dataset.source_image.empty() ? "stand-in" : config_.dataset.source_image},
                         {"regions", regions}}
                            .dump(2) +
                        "\n");
  complete("generate", key, list_files(output_dir(), dataset_dir()));
  return StageResult::ran;
}

DatasetManifest Pipeline::manifest() const {
  const auto path = dataset_dir() / "manifest.json";
  if (!fs::exists(path)) throw IoError("dataset not generated yet: " + path.string() + " is missing");
  return DatasetManifest::load(path);
}

IoUMatrix Pipeline::iou_matrix() const {
  const auto path = results_dir() / "iou_matrix.json";
  if (!fs::exists(path)) throw IoError("no IoU matrix yet: " + path.string() + " is missing");
  return IoUMatrix::from_json(json::parse(read_text(path)));
}

StageResult Pipeline::train() {
  const std::string key = train_key();
  if (skip("train", key, training_dir())) return StageResult::cached;
  if (options_.force && fs::exists(results_dir())) fs::remove_all(results_dir());
  SampleStore store(dataset_dir(), manifest());
  SweepOptions opts;
  opts.workers = config_.workers;
  opts.work_dir = training_dir();
  if (!config_.model.pretrained_encoder.empty()) opts.pretrained_encoder = config_.model.pretrained_encoder;
  opts.progress = [this](const std::string& m) { log("train: " + m); };
  const IoUMatrix matrix = run_sweep(config_.model.specs(), config_.sweep, config_.training, store, opts);
  fs::create_directories(results_dir());
  write_text_atomic(results_dir() / "iou_matrix.csv", matrix.to_csv());
  write_text_atomic(results_dir() / "iou_matrix.json", matrix.to_json().dump(2) + "\n");

  std::vector<std::string> failures;
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    for (const auto& e : matrix.cells[r].front().errors) failures.push_back(matrix.rows[r] + " " + e);
  }
  auto artifacts = list_files(output_dir(), training_dir());
  for (const auto& f : list_files(output_dir(), results_dir())) artifacts.push_back(f);
  if (!failures.empty()) {
    std::string msg;
    for (const auto& f : failures) msg += f + "; ";
    complete("train", key, artifacts, "partial", msg);
    return StageResult::partial;
  }
  complete("train", key, artifacts);
  return StageResult::ran;
}

std::vector<std::string> Pipeline::probed_specs() const {
  if (!config_.probe.models.empty()) return config_.probe.models;
  std::vector<std::string> names;
  for (const auto& s : config_.model.specs()) names.push_back(s.name());
  return names;
}

std::vector<LayerShiftReport> Pipeline::probe_reports(const std::string& spec, const ShiftSpec& shift) const {
  std::vector<LayerShiftReport> out;
  for (int f = 0; f < config_.training.folds; ++f) {
    const auto path = probe_dir() / spec / ("fold" + std::to_string(f)) / (shift.label() + ".json");
    if (fs::exists(path)) out.push_back(LayerShiftReport::from_json(json::parse(read_text(path))));
  }
  return out;
}

StageResult Pipeline::probe() {
  const std::string key = probe_key();
  if (skip("probe", key, probe_dir())) return StageResult::cached;
  if (fs::exists(probe_dir())) fs::remove_all(probe_dir());
  const auto m = manifest();
  SampleStore store(dataset_dir(), m);
  std::vector<RgbImage> reference;
  for (int i : m.indices(Split::test)) reference.push_back(store.image(i));

  std::vector<std::string> failures;
  for (const auto& spec : config_.model.specs()) {
    const auto names = probed_specs();
    if (std::find(names.begin(), names.end(), spec.name()) == names.end()) continue;
    for (int f = 0; f < config_.training.folds; ++f) {
      const std::string tag = spec.name() + "/fold" + std::to_string(f);
      const auto ckpt = training_dir() / spec.name() / ("fold" + std::to_string(f)) / "checkpoint.pt";
      try {
        auto net = load_checkpoint(spec, ckpt);
        log("probe: " + tag);
        const auto ref = collect_features(net, reference, config_.probe.taps, config_.probe.batch_size);
        const auto out_dir = probe_dir() / spec.name() / ("fold" + std::to_string(f));
        fs::create_directories(out_dir);
        if (config_.probe.dump_features) write_feature_set(out_dir / "features" / "reference", ref);
        for (const auto& shift : config_.probe.shifts) {
          std::vector<RgbImage> shifted;
          for (const auto& img : reference) shifted.push_back(apply(shift, img));
          const auto sh = collect_features(net, shifted, config_.probe.taps, config_.probe.batch_size);
          if (config_.probe.dump_features) write_feature_set(out_dir / "features" / shift.label(), sh);
          LayerShiftReport r;
          r.shift = shift.label();
          r.bins = config_.probe.bins;
          r.images = static_cast<int>(reference.size());
          r.model = spec.name();
          r.fold = f;
          r.layers = compare_features(ref, sh, config_.probe.bins);
          write_text_atomic(out_dir / (shift.label() + ".json"), r.to_json().dump() + "\n");
          write_text_atomic(out_dir / (shift.label() + "_means.csv"), r.means_csv());
        }
      } catch (const std::exception& e) {
        failures.push_back(tag + ": " + e.what());
        log("probe: " + tag + " failed: " + e.what());
      }
    }
    for (const auto& shift : config_.probe.shifts) {
      const auto reports = probe_reports(spec.name(), shift);
      if (reports.empty()) continue;
      const auto agg = aggregate_folds(reports);
      write_text_atomic(probe_dir() / spec.name() / (shift.label() + "_folds.json"), agg.to_json().dump(2) + "\n");
      write_text_atomic(probe_dir() / spec.name() / (shift.label() + "_folds.csv"), agg.to_csv());
    }
  }
  const auto artifacts = list_files(output_dir(), probe_dir());
  if (!failures.empty()) {
    std::string msg;
    for (const auto& f : failures) msg += f + "; ";
    complete("probe", key, artifacts, "partial", msg);
    return StageResult::partial;
  }
  complete("probe", key, artifacts);
  return StageResult::ran;
}

StageResult Pipeline::report() {
  const std::string key = report_key();
  if (skip("report", key, plots_dir())) return StageResult::cached;
  if (fs::exists(plots_dir())) fs::remove_all(plots_dir());
  fs::create_directories(plots_dir());
  const IoUMatrix matrix = iou_matrix();
  for (ShiftKind kind : {ShiftKind::brightness, ShiftKind::contrast, ShiftKind::saturation}) {
    write_text_atomic(plots_dir() / ("iou_" + to_string(kind) + ".svg"), iou_heatmap_svg(matrix, kind));
  }
  for (const auto& spec : probed_specs()) {
    for (const auto& shift : config_.probe.shifts) {
      const auto reports = probe_reports(spec, shift);
      if (reports.empty()) continue;
      write_text_atomic(plots_dir() / ("layer_shift_" + spec + "_" + shift.label() + ".svg"),
                        layer_shift_svg(reports, spec + ", " + shift.label()));
    }
  }
  complete("report", key, list_files(output_dir(), plots_dir()));
  return StageResult::ran;
}

bool Pipeline::run() {
  generate();
  const bool trained = train() != StageResult::partial;
  const bool probed = probe() != StageResult::partial;
  report();
  return trained && probed;
}

}  // namespace skipshift
