#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skipshift/image.hpp"

namespace skipshift {

/// A cut-out patch plus its per-pixel foreground (0/1).
struct Template {
  RgbImage pixels;
  GrayImage mask;
};

/// One background patch, three cell templates and three artifact templates.
struct TemplateSet {
  RgbImage background;
  std::array<Template, 3> cells;
  std::array<Template, 3> artifacts;

  /// SHA-256 over every pixel and mask byte, with dimensions.
  std::string content_hash() const;
};

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `regions` holds 7 rectangles: background, 3 cells, 3 artifacts.
/// Foregrounds are the dark class of a per-template Otsu split on luma.
/// Throws ImageError for out-of-bounds regions and TemplateError for a wrong
/// region count or an empty foreground.
TemplateSet extract_templates(const RgbImage& source, std::span<const Rect> regions);

enum class DensityClass { low, high };

std::string to_string(DensityClass density);
DensityClass parse_density(std::string_view text);

struct GeneratorParams {
  int canvas_size = 1500;
  int image_size = 512;
  int min_cells = 1;
  int max_cells = 100;
  int artifact_count = 3;
  /// n_cells <= threshold is low density.
  int density_threshold = 50;

  void validate() const;
  nlohmann::json to_json() const;
  static GeneratorParams from_json(const nlohmann::json& j);
};

/// Top-left anchor of a pasted template on the canvas.
struct Placement {
  int template_index = 0;
  int x = 0;
  int y = 0;
};

/// Full-resolution composite before the final downscale, with the placement
/// record needed to replay the mask independently.
struct Composite {
  RgbImage canvas;
  GrayImage mask;
  int rotation_degrees = 0;
  std::vector<Placement> cells;
  std::vector<Placement> artifacts;
};

struct SyntheticSample {
  RgbImage image;
  GrayImage mask;
  int n_cells = 0;
  DensityClass density = DensityClass::low;
  std::uint64_t seed = 0;
  int rotation_degrees = 0;
};

Composite compose_canvas(const TemplateSet& templates, std::uint64_t seed,
                         const GeneratorParams& params = {});

SyntheticSample generate_sample(const TemplateSet& templates, std::uint64_t seed,
                                const GeneratorParams& params = {});

enum class Split { train, test };

std::string to_string(Split split);

struct ManifestEntry {
  int index = 0;
  std::string image_path;  // relative to the dataset directory
  std::string mask_path;
  std::uint64_t seed = 0;
  int n_cells = 0;
  DensityClass density = DensityClass::low;
  Split split = Split::train;
};

struct DatasetManifest {
  int count = 0;
  std::uint64_t master_seed = 0;
  std::string template_hash;
  GeneratorParams params;
  std::vector<ManifestEntry> entries;

  std::vector<int> indices(Split split) const;

  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);

  void save(const std::filesystem::path& path) const;
  static DatasetManifest load(const std::filesystem::path& path);
};

/// Assigns round(0.2 * n) test samples, apportioned across density classes by
/// largest remainder; members are drawn by a seeded shuffle per class.
void assign_stratified_split(std::vector<ManifestEntry>& entries, std::uint64_t master_seed,
                             double test_fraction = 0.2);

/// Generates `count` samples (OpenMP-parallel, seeds derived from
/// master_seed and the sample index) and, when `dataset_dir` is given, writes
/// images/ masks/ and manifest.json there.
DatasetManifest build_dataset(const TemplateSet& templates, int count, std::uint64_t master_seed,
                              const GeneratorParams& params,
                              const std::optional<std::filesystem::path>& dataset_dir);

}  // namespace skipshift
