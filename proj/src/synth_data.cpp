#include "skipshift/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>

#include "skipshift/fs_util.hpp"
#include "skipshift/png_io.hpp"
#include "skipshift/rng.hpp"

namespace skipshift {

namespace fs = std::filesystem;

namespace {

Template cut_template(const RgbImage& source, const Rect& region, const std::string& label) {
  Template t;
  t.pixels = crop(source, region);
  const GrayImage gray = to_grayscale(t.pixels);
  const auto threshold = otsu_threshold(gray);
  t.mask = GrayImage(gray.width(), gray.height());
  if (threshold) {
    for (std::size_t i = 0; i < gray.pixel_count(); ++i) {
      t.mask.bytes()[i] = gray.bytes()[i] < *threshold ? 1 : 0;
    }
  }
  if (t.mask.count_nonzero() == 0) {
    throw TemplateError("degenerate template '" + label + "': empty foreground after Otsu thresholding");
  }
  return t;
}

void append_image(std::string& buf, const RgbImage& img) {
  buf += std::to_string(img.width()) + "x" + std::to_string(img.height()) + ";";
  buf.append(reinterpret_cast<const char*>(img.bytes().data()), img.bytes().size());
}

void append_image(std::string& buf, const GrayImage& img) {
  buf += std::to_string(img.width()) + "x" + std::to_string(img.height()) + ";";
  buf.append(reinterpret_cast<const char*>(img.bytes().data()), img.bytes().size());
}

void paste(RgbImage& canvas, GrayImage* mask, const Template& t, int x0, int y0) {
  for (int y = 0; y < t.mask.height(); ++y) {
    for (int x = 0; x < t.mask.width(); ++x) {
      if (t.mask.at(x, y) == 0) continue;
      std::copy_n(t.pixels.pixel(x, y), 3, canvas.pixel(x0 + x, y0 + y));
      if (mask != nullptr) mask->at(x0 + x, y0 + y) = 1;
    }
  }
}

Placement place(Rng& rng, const std::array<Template, 3>& pool, int canvas) {
  Placement p;
  p.template_index = static_cast<int>(rng.below(pool.size()));
  const auto& t = pool[p.template_index];
  p.x = rng.uniform_int(0, canvas - t.pixels.width());
  p.y = rng.uniform_int(0, canvas - t.pixels.height());
  return p;
}

std::string sample_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%05d.png", index);
  return buf;
}

}  // namespace

std::string TemplateSet::content_hash() const {
  std::string buf;
  append_image(buf, background);
  for (const auto& group : {&cells, &artifacts}) {
    for (const auto& t : *group) {
      append_image(buf, t.pixels);
      append_image(buf, t.mask);
    }
  }
  return sha256_hex(buf);
}

TemplateSet extract_templates(const RgbImage& source, std::span<const Rect> regions) {
  if (regions.size() != 7) {
    throw TemplateError("expected 7 template regions (background, 3 cells, 3 artifacts), got " +
                        std::to_string(regions.size()));
  }
  // Bounds first, so an out-of-range region is reported before any template
  // is judged degenerate.
  for (const auto& r : regions) (void)crop(source, r);

  TemplateSet set;
  set.background = crop(source, regions[0]);
  for (int i = 0; i < 3; ++i) {
    set.cells[i] = cut_template(source, regions[1 + i], "cell " + std::to_string(i));
    set.artifacts[i] = cut_template(source, regions[4 + i], "artifact " + std::to_string(i));
  }
  return set;
}

std::string to_string(DensityClass density) {
  return density == DensityClass::low ? "low" : "high";
}

DensityClass parse_density(std::string_view text) {
  if (text == "low") return DensityClass::low;
  if (text == "high") return DensityClass::high;
  throw std::invalid_argument("unknown density class '" + std::string(text) + "'");
}

std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

void GeneratorParams::validate() const {
  if (canvas_size <= 0 || image_size <= 0) throw std::invalid_argument("sizes must be positive");
  if (min_cells < 0 || max_cells < min_cells) throw std::invalid_argument("invalid cell-count range");
  if (artifact_count < 0) throw std::invalid_argument("artifact_count must be >= 0");
}

nlohmann::json GeneratorParams::to_json() const {
  return {{"canvas_size", canvas_size},
          {"image_size", image_size},
          {"min_cells", min_cells},
          {"max_cells", max_cells},
          {"artifact_count", artifact_count},
          {"density_threshold", density_threshold}};
}

GeneratorParams GeneratorParams::from_json(const nlohmann::json& j) {
  GeneratorParams p;
  p.canvas_size = j.value("canvas_size", p.canvas_size);
  p.image_size = j.value("image_size", p.image_size);
  p.min_cells = j.value("min_cells", p.min_cells);
  p.max_cells = j.value("max_cells", p.max_cells);
  p.artifact_count = j.value("artifact_count", p.artifact_count);
  p.density_threshold = j.value("density_threshold", p.density_threshold);
  p.validate();
  return p;
}

Composite compose_canvas(const TemplateSet& templates, std::uint64_t seed,
                         const GeneratorParams& params) {
  params.validate();
  const int canvas_size = params.canvas_size;
  for (const auto* pool : {&templates.cells, &templates.artifacts}) {
    for (const auto& t : *pool) {
      if (t.pixels.width() > canvas_size || t.pixels.height() > canvas_size) {
        throw TemplateError("template larger than the canvas");
      }
    }
  }

  Rng rng(seed);
  Composite out;
  const int turns = static_cast<int>(rng.below(4));
  out.rotation_degrees = 90 * turns;
  out.canvas = resize_bilinear(rotate_quarter_turns(templates.background, turns), canvas_size,
                               canvas_size);
  out.mask = GrayImage(canvas_size, canvas_size);

  const int n = rng.uniform_int(params.min_cells, params.max_cells);
  out.cells.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Placement p = place(rng, templates.cells, canvas_size);
    paste(out.canvas, &out.mask, templates.cells[p.template_index], p.x, p.y);
    out.cells.push_back(p);
  }
  // Artifacts go on top of the cells; the mask is left untouched.
  for (int i = 0; i < params.artifact_count; ++i) {
    const Placement p = place(rng, templates.artifacts, canvas_size);
    paste(out.canvas, nullptr, templates.artifacts[p.template_index], p.x, p.y);
    out.artifacts.push_back(p);
  }
  return out;
}

SyntheticSample generate_sample(const TemplateSet& templates, std::uint64_t seed,
                                const GeneratorParams& params) {
  Composite c = compose_canvas(templates, seed, params);
  SyntheticSample s;
  s.image = resize_bilinear(c.canvas, params.image_size, params.image_size);
  s.mask = resize_nearest(c.mask, params.image_size, params.image_size);
  s.n_cells = static_cast<int>(c.cells.size());
  s.density = s.n_cells <= params.density_threshold ? DensityClass::low : DensityClass::high;
  s.seed = seed;
  s.rotation_degrees = c.rotation_degrees;
  return s;
}

std::vector<int> DatasetManifest::indices(Split split) const {
  std::vector<int> out;
  for (const auto& e : entries) {
    if (e.split == split) out.push_back(e.index);
  }
  return out;
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& e : entries) {
    samples.push_back({{"index", e.index},
                       {"image", e.image_path},
                       {"mask", e.mask_path},
                       {"seed", e.seed},
                       {"n_cells", e.n_cells},
                       {"density_class", to_string(e.density)},
                       {"split", to_string(e.split)}});
  }
  return {{"generation_params",
           {{"count", count},
            {"master_seed", master_seed},
            {"template_hash", template_hash},
            {"generator", params.to_json()}}},
          {"samples", samples}};
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  const auto& gp = j.at("generation_params");
  m.count = gp.at("count").get<int>();
  m.master_seed = gp.at("master_seed").get<std::uint64_t>();
  m.template_hash = gp.at("template_hash").get<std::string>();
  m.params = GeneratorParams::from_json(gp.at("generator"));
  for (const auto& s : j.at("samples")) {
    ManifestEntry e;
    e.index = s.at("index").get<int>();
    e.image_path = s.at("image").get<std::string>();
    e.mask_path = s.at("mask").get<std::string>();
    e.seed = s.at("seed").get<std::uint64_t>();
    e.n_cells = s.at("n_cells").get<int>();
    e.density = parse_density(s.at("density_class").get<std::string>());
    const auto split = s.at("split").get<std::string>();
    if (split != "train" && split != "test") throw std::invalid_argument("bad split '" + split + "'");
    e.split = split == "train" ? Split::train : Split::test;
    m.entries.push_back(std::move(e));
  }
  if (static_cast<int>(m.entries.size()) != m.count) {
    throw std::invalid_argument("manifest sample count does not match generation_params.count");
  }
  return m;
}

void DatasetManifest::save(const fs::path& path) const {
  write_text_atomic(path, to_json().dump(2) + "\n");
}

DatasetManifest DatasetManifest::load(const fs::path& path) {
  return from_json(nlohmann::json::parse(read_text(path)));
}

void assign_stratified_split(std::vector<ManifestEntry>& entries, std::uint64_t master_seed,
                             double test_fraction) {
  const auto n = static_cast<long long>(entries.size());
  const auto total_test = static_cast<long long>(std::llround(test_fraction * n));

  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    members[entries[i].density == DensityClass::low ? 0 : 1].push_back(i);
  }

  // Largest-remainder apportionment of the test quota across classes.
  std::array<long long, 2> quota{};
  std::array<double, 2> remainder{};
  long long assigned = 0;
  for (int c = 0; c < 2; ++c) {
    const double exact = n == 0 ? 0.0 : static_cast<double>(total_test) * members[c].size() / n;
    quota[c] = static_cast<long long>(std::floor(exact));
    remainder[c] = exact - quota[c];
    assigned += quota[c];
  }
  while (assigned < total_test) {
    const int c = remainder[0] >= remainder[1] ? 0 : 1;
    ++quota[c];
    remainder[c] = -1.0;
    ++assigned;
  }

  for (int c = 0; c < 2; ++c) {
    auto& idx = members[c];
    Rng rng(derive_seed(master_seed, 0x5EED5B17ULL + c));
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[rng.below(i)]);
    }
    for (std::size_t i = 0; i < idx.size(); ++i) {
      entries[idx[i]].split = static_cast<long long>(i) < quota[c] ? Split::test : Split::train;
    }
  }
}

DatasetManifest build_dataset(const TemplateSet& templates, int count, std::uint64_t master_seed,
                              const GeneratorParams& params,
                              const std::optional<fs::path>& dataset_dir) {
  if (count < 10) throw std::invalid_argument("dataset count must be >= 10");
  params.validate();

  DatasetManifest manifest;
  manifest.count = count;
  manifest.master_seed = master_seed;
  manifest.template_hash = templates.content_hash();
  manifest.params = params;
  manifest.entries.resize(count);

  if (dataset_dir) {
    fs::create_directories(*dataset_dir / "images");
    fs::create_directories(*dataset_dir / "masks");
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
      const std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(i));
      SyntheticSample s = generate_sample(templates, seed, params);
      ManifestEntry& e = manifest.entries[i];
      e.index = i;
      e.seed = seed;
      e.n_cells = s.n_cells;
      e.density = s.density;
      e.image_path = "images/" + sample_name(i);
      e.mask_path = "masks/" + sample_name(i);
      if (dataset_dir) {
        write_png(*dataset_dir / e.image_path, s.image);
        write_png(*dataset_dir / e.mask_path, s.mask, /*mask_scale=*/true);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  assign_stratified_split(manifest.entries, master_seed);
  if (dataset_dir) manifest.save(*dataset_dir / "manifest.json");
  return manifest;
}

}  // namespace skipshift
