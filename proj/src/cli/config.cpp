#include "skipshift/config.hpp"

#include <cstdlib>
#include <regex>
#include <set>

#include "skipshift/fs_util.hpp"

namespace skipshift {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.width, r.height}); }

Rect rect_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("a region must be [x, y, width, height]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

std::string expand_string(const std::string& s) {
  static const std::regex ref(R"(\$\{([A-Za-z_][A-Za-z0-9_]*)(:-([^}]*))?\})");
  std::string out;
  auto begin = std::sregex_iterator(s.begin(), s.end(), ref);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(s, last, m.position(0) - last);
    const std::string name = m[1].str();
    const char* value = std::getenv(name.c_str());
    if (value != nullptr && *value != '\0') {
      out += value;
    } else if (m[2].matched) {
      out += m[3].str();
    } else {
      throw ConfigError("environment variable " + name + " is not set and has no default");
    }
    last = m.position(0) + m.length(0);
  }
  out.append(s, last, std::string::npos);
  return out;
}

template <typename Fn>
auto config_guard(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

std::vector<PrunedUNetSpec> ModelSection::specs() const {
  std::vector<PrunedUNetSpec> out;
  for (int d : encoder_depths) {
    for (int l : prune_levels) {
      PrunedUNetSpec s;
      s.encoder_depth = d;
      s.prune_level = l;
      s.decoder_channels = decoder_channels;
      s.num_classes = num_classes;
      out.push_back(s);
    }
  }
  return out;
}

void ExperimentConfig::validate() const {
  config_guard("invalid configuration", [&] {
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    if (dataset.count < 10) throw ConfigError("dataset.count must be >= 10");
    if (!dataset.regions.empty() && dataset.regions.size() != 7) {
      throw ConfigError("dataset.regions needs 7 rectangles (background, 3 cells, 3 artifacts)");
    }
    dataset.generator.validate();
    if (dataset.generator.image_size % 32 != 0) throw ConfigError("generator.image_size must be a multiple of 32");
    if (model.encoder_depths.empty() || model.prune_levels.empty()) throw ConfigError("model list is empty");
    for (const auto& s : model.specs()) s.validate();
    training.validate();
    if (training.crop_size > dataset.generator.image_size) {
      throw ConfigError("training.crop_size exceeds the image size");
    }
    sweep.validate();
    if (probe.bins < 2) throw ConfigError("probe.bins must be >= 2");
    if (probe.taps.empty()) throw ConfigError("probe.taps is empty");
    if (probe.batch_size < 1) throw ConfigError("probe.batch_size must be >= 1");
    std::set<std::string> known;
    for (const auto& t : tap_points(model.specs().front())) known.insert(t.name);
    for (const auto& t : probe.taps) {
      if (known.count(t) == 0) throw ConfigError("unknown probe tap '" + t + "'");
    }
    std::set<std::string> names;
    for (const auto& s : model.specs()) names.insert(s.name());
    for (const auto& m : probe.models) {
      if (names.count(m) == 0) throw ConfigError("probe model '" + m + "' is not in the model list");
    }
    for (const auto& s : probe.shifts) {
      if (s.kind == ShiftKind::saturation ? (s.factor < 0.0 || s.factor > 1.0) : !(s.factor > 0.0)) {
        throw ConfigError("probe shift " + s.label() + " out of range");
      }
    }
    if (workers < 1) throw ConfigError("workers must be >= 1");
    return 0;
  });
}

json ExperimentConfig::to_json() const {
  json regions = json::array();
  for (const auto& r : dataset.regions) regions.push_back(rect_json(r));
  json shifts = json::array();
  for (const auto& s : probe.shifts) shifts.push_back(s.to_json());
  return {{"output_dir", output_dir},
          {"workers", workers},
          {"dataset",
           {{"source_image", dataset.source_image},
            {"stand_in_seed", dataset.stand_in_seed},
            {"regions", regions},
            {"count", dataset.count},
            {"master_seed", dataset.master_seed},
            {"generator", dataset.generator.to_json()}}},
          {"model",
           {{"encoder_depths", model.encoder_depths},
            {"prune_levels", model.prune_levels},
            {"decoder_channels", model.decoder_channels},
            {"num_classes", model.num_classes},
            {"pretrained_encoder", model.pretrained_encoder}}},
          {"training", training.to_json()},
          {"sweep", sweep.to_json()},
          {"probe",
           {{"taps", probe.taps},
            {"bins", probe.bins},
            {"shifts", shifts},
            {"models", probe.models},
            {"batch_size", probe.batch_size},
            {"dump_features", probe.dump_features}}}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  return config_guard("invalid configuration", [&] {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    ExperimentConfig c;
    c.output_dir = j.value("output_dir", c.output_dir);
    c.workers = j.value("workers", c.workers);
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      c.dataset.source_image = d.value("source_image", c.dataset.source_image);
      c.dataset.stand_in_seed = d.value("stand_in_seed", c.dataset.stand_in_seed);
      if (d.contains("regions")) {
        for (const auto& r : d.at("regions")) c.dataset.regions.push_back(rect_from_json(r));
      }
      c.dataset.count = d.value("count", c.dataset.count);
      c.dataset.master_seed = d.value("master_seed", c.dataset.master_seed);
      if (d.contains("generator")) c.dataset.generator = GeneratorParams::from_json(d.at("generator"));
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.encoder_depths = m.value("encoder_depths", c.model.encoder_depths);
      c.model.prune_levels = m.value("prune_levels", c.model.prune_levels);
      if (m.contains("decoder_channels")) c.model.decoder_channels = m.at("decoder_channels").get<std::array<int, 5>>();
      c.model.num_classes = m.value("num_classes", c.model.num_classes);
      c.model.pretrained_encoder = m.value("pretrained_encoder", c.model.pretrained_encoder);
    }
    if (j.contains("training")) c.training = TrainConfig::from_json(j.at("training"));
    if (j.contains("sweep")) c.sweep = SweepGrid::from_json(j.at("sweep"));
    if (j.contains("probe")) {
      const auto& p = j.at("probe");
      c.probe.taps = p.value("taps", c.probe.taps);
      c.probe.bins = p.value("bins", c.probe.bins);
      if (p.contains("shifts")) {
        c.probe.shifts.clear();
        for (const auto& s : p.at("shifts")) c.probe.shifts.push_back(ShiftSpec::from_json(s));
      }
      c.probe.models = p.value("models", c.probe.models);
      c.probe.batch_size = p.value("batch_size", c.probe.batch_size);
      c.probe.dump_features = p.value("dump_features", c.probe.dump_features);
    }
    c.validate();
    return c;
  });
}

std::string ExperimentConfig::section_hash(std::string_view section) const {
  const json j = to_json();
  const std::string key(section);
  if (!j.contains(key)) throw std::invalid_argument("no config section '" + key + "'");
  return sha256_hex(j.at(key).dump());
}

json expand_environment(const json& j) {
  if (j.is_string()) return expand_string(j.get<std::string>());
  if (j.is_array()) {
    json out = json::array();
    for (const auto& e : j) out.push_back(expand_environment(e));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = expand_environment(it.value());
    return out;
  }
  return j;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  json raw;
  try {
    raw = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  json j = expand_environment(raw);
  if (const char* out = std::getenv("SKIPSHIFT_OUTPUT_DIR"); out != nullptr && *out != '\0') {
    j["output_dir"] = out;
  }
  auto cfg = ExperimentConfig::from_json(j);
  const fs::path base = path.parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(cfg.dataset.source_image);
  resolve(cfg.model.pretrained_encoder);
  return cfg;
}

ExperimentConfig desk_preset() {
  ExperimentConfig c;
  c.output_dir = "runs/desk";
  c.dataset.count = 200;
  c.dataset.generator.image_size = 256;
  c.model.encoder_depths = {18};
  c.model.prune_levels = {0, 1};
  c.training.folds = 2;
  c.training.epochs = 15;
  c.training.crop_size = 256;
  return c;
}

ExperimentConfig paper_preset() {
  ExperimentConfig c;
  c.output_dir = "runs/paper";
  c.dataset.count = 1000;
  c.dataset.generator.image_size = 512;
  c.model.encoder_depths = {18, 34};
  c.model.prune_levels = {0, 1, 2, 3, 4};
  c.training.folds = 5;
  c.training.epochs = 50;
  c.training.crop_size = 0;
  return c;
}

void apply_scale(ExperimentConfig& config, const ExperimentConfig& preset) {
  config.dataset.count = preset.dataset.count;
  config.dataset.generator.image_size = preset.dataset.generator.image_size;
  config.model.encoder_depths = preset.model.encoder_depths;
  config.model.prune_levels = preset.model.prune_levels;
  config.training.folds = preset.training.folds;
  config.training.epochs = preset.training.epochs;
  config.training.crop_size = preset.training.crop_size;
  config.probe.models.clear();
  config.validate();
}

}  // namespace skipshift
