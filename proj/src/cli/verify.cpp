#include "skipshift/verify.hpp"

#include <cmath>
#include <sstream>

#include "skipshift/pipeline.hpp"
#include "skipshift/shift_metric.hpp"

namespace skipshift {

namespace fs = std::filesystem;

namespace {

std::string num(double v, int digits = 6) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << std::fixed << v;
  return ss.str();
}

RgbImage random_image(Rng& rng, int w, int h) {
  RgbImage img(w, h);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

}  // namespace

bool VerifyReport::hard_passed() const {
  for (const auto& c : checks) {
    if (!c.soft && !c.passed) return false;
  }
  return true;
}

std::string VerifyReport::to_text() const {
  std::ostringstream ss;
  for (const auto& c : checks) {
    ss << (c.passed ? "PASS" : (c.soft ? "WARN" : "FAIL")) << (c.soft ? " [soft] " : " ") << c.name
       << ": measured " << c.measured << ", expected " << c.expected << '\n';
  }
  return ss.str();
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"passed", c.passed},
                   {"soft", c.soft},
                   {"measured", c.measured},
                   {"expected", c.expected}});
  }
  return {{"passed", hard_passed()}, {"checks", arr}};
}

const std::map<std::pair<int, int>, std::int64_t>& reference_parameter_counts() {
  static const std::map<std::pair<int, int>, std::int64_t> table = {
      {{18, 0}, 14328354}, {{18, 1}, 14309922}, {{18, 2}, 14273058}, {{18, 3}, 14125602}, {{18, 4}, 13535778},
      {{34, 0}, 24436514}, {{34, 1}, 24418082}, {{34, 2}, 24381218}, {{34, 3}, 24233762}, {{34, 4}, 23643938}};
  return table;
}

VerifyReport run_verify(const ExperimentConfig& config) {
  VerifyReport report;
  auto add = [&](std::string name, bool ok, std::string measured, std::string expected, bool soft = false) {
    report.checks.push_back({std::move(name), ok, soft, std::move(measured), std::move(expected)});
  };

  for (const auto& [key, expected] : reference_parameter_counts()) {
    PrunedUNetSpec spec;
    spec.encoder_depth = key.first;
    spec.prune_level = key.second;
    spec.decoder_channels = config.model.decoder_channels;
    spec.num_classes = config.model.num_classes;
    std::int64_t measured = -1;
    std::string err;
    try {
      measured = count_parameters(spec);
    } catch (const std::exception& e) {
      err = e.what();
    }
    add("parameter count " + spec.name(), measured == expected, err.empty() ? std::to_string(measured) : err,
        std::to_string(expected));
  }

  {
    const std::vector<double> p{0.25, 0.75}, q{0.5, 0.5}, r{1.0, 0.0}, s{0.0, 1.0};
    const double same = hellinger(p, p);
    add("hellinger identical", same == 0.0, num(same, 12), "0");
    const double disjoint = hellinger(r, s);
    add("hellinger disjoint", disjoint == 1.0, num(disjoint, 12), "1");
    const double half = hellinger(q, r);
    add("hellinger [0.5,0.5] vs [1,0]", std::abs(half - 0.541196) <= 1e-6, num(half, 9), "0.541196 +/- 1e-6");
    const std::vector<double> vals{0.0, 0.5, 1.0};
    const auto hist = bin_relative(vals, joint_range(vals, vals), 2);
    // 0.5 sits on the lower edge of the upper bin; 1.0 is in the closed last bin.
    add("binning {0,0.5,1} B=2", std::abs(hist[0] - 1.0 / 3.0) < 1e-15 && std::abs(hist[1] - 2.0 / 3.0) < 1e-15,
        "[" + num(hist[0]) + ", " + num(hist[1]) + "]", "[1/3, 2/3]");
  }

  {
    Rng rng(99);
    bool identity = true, contrast_fixed = true, saturation_idem = true;
    for (int i = 0; i < 20; ++i) {
      const RgbImage img = random_image(rng, 16 + static_cast<int>(rng.below(17)), 16 + static_cast<int>(rng.below(17)));
      for (ShiftKind k : {ShiftKind::brightness, ShiftKind::contrast, ShiftKind::saturation}) {
        if (!(apply({k, 1.0}, img) == img)) identity = false;
      }
      const RgbImage gray = apply_saturation(img, 0.0);
      for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        if (!(apply_saturation(gray, s) == gray)) saturation_idem = false;
      }
    }
    for (double f : {0.5, 0.75, 1.25, 1.5, 1.75}) {
      for (int m = 0; m < 256; ++m) {
        if (contrast_lut(f, m)[m] != m) contrast_fixed = false;
      }
    }
    add("transforms: factor 1 is identity", identity, identity ? "byte-exact" : "differs", "byte-exact");
    add("contrast keeps the mean fixed", contrast_fixed, contrast_fixed ? "fixed" : "moved", "fixed");
    add("full desaturation is idempotent", saturation_idem, saturation_idem ? "idempotent" : "differs", "idempotent");
  }

  try {
    const TemplateSet templates = load_templates(config.dataset);
    GeneratorParams params = config.dataset.generator;
    bool same = true;
    for (std::uint64_t i = 0; i < 3; ++i) {
      const auto seed = derive_seed(config.dataset.master_seed, i);
      const auto a = generate_sample(templates, seed, params);
      const auto b = generate_sample(templates, seed, params);
      same = same && a.image == b.image && a.mask == b.mask && a.n_cells == b.n_cells;
    }
    add("generator determinism", same, same ? "bit-identical" : "differs", "bit-identical");
  } catch (const std::exception& e) {
    add("generator determinism", false, e.what(), "bit-identical");
  }

  const Pipeline pipeline(config);
  if (fs::exists(pipeline.results_dir() / "iou_matrix.json")) {
    const IoUMatrix m = pipeline.iou_matrix();
    PrunedUNetSpec base;
    base.encoder_depth = config.model.encoder_depths.front();
    const std::string base_name = base.name();
    if (std::find(m.rows.begin(), m.rows.end(), base_name) != m.rows.end()) {
      const auto& orig = m.cell(base_name, "original");
      bool dominates = orig.complete();
      std::string worst;
      for (const auto& col : m.columns) {
        if (col == "original") continue;
        const auto& c = m.cell(base_name, col);
        if (!c.complete() || !orig.complete() || c.mean() > orig.mean()) {
          dominates = false;
          worst += col + " ";
        }
      }
      add(base_name + " original IoU >= every shifted column", dominates,
          dominates ? "holds" : "violated at " + worst, "holds", true);
      PrunedUNetSpec l1 = base;
      l1.prune_level = 1;
      if (std::find(m.rows.begin(), m.rows.end(), l1.name()) != m.rows.end()) {
        const auto& c1 = m.cell(l1.name(), "original");
        const bool ok = c1.complete() && orig.complete() && c1.mean() >= orig.mean();
        add(l1.name() + " in-domain IoU >= " + base_name, ok,
            c1.complete() && orig.complete() ? num(c1.mean(), 4) + " vs " + num(orig.mean(), 4) : "n/a", ">=", true);
      }
    }
  }
  for (const auto& spec : pipeline.probed_specs()) {
    for (const auto& shift : config.probe.shifts) {
      const auto reports = pipeline.probe_reports(spec, shift);
      if (reports.empty()) continue;
      const auto agg = aggregate_folds(reports);
      const auto& taps = agg.taps;
      const bool has = std::find(taps.begin(), taps.end(), "encoder_0") != taps.end() &&
                       std::find(taps.begin(), taps.end(), "encoder_4") != taps.end();
      if (!has) continue;
      const double first = agg.mean("encoder_0");
      const double bottleneck = agg.mean("encoder_4");
      add(spec + " " + shift.label() + " shift decreases toward the bottleneck", first > bottleneck,
          num(first, 4) + " vs " + num(bottleneck, 4), "encoder_0 > encoder_4", true);
    }
  }
  return report;
}

}  // namespace skipshift
