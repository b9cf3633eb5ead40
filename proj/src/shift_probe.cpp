#include "skipshift/shift_probe.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "skipshift/fs_util.hpp"
#include "skipshift/npy.hpp"
#include "skipshift/trainer.hpp"

namespace skipshift {

namespace fs = std::filesystem;

const FeatureMatrix& FeatureSet::at(const std::string& tap) const {
  auto it = features.find(tap);
  if (it == features.end()) throw std::out_of_range("feature set has no tap '" + tap + "'");
  return it->second;
}

FeatureSet collect_features(SkipUNet& network, const std::vector<RgbImage>& images,
                            const std::vector<std::string>& taps, int batch_size) {
  if (images.empty()) throw std::invalid_argument("cannot collect features of an empty image set");
  if (taps.empty()) throw std::invalid_argument("no taps requested");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  FeatureSet set;
  set.taps = taps;
  set.images = static_cast<int>(images.size());
  set.image_side = images.front().width();
  for (const auto& img : images) {
    if (img.width() != img.height() || img.width() != set.image_side) {
      throw ShapeError("probe images must be square and equally sized");
    }
  }
  for (const auto& t : taps) set.features[t];

  const bool was_training = network->is_training();
  network->eval();
  torch::NoGradGuard guard;
  for (std::size_t start = 0; start < images.size(); start += batch_size) {
    const std::size_t end = std::min(images.size(), start + batch_size);
    std::vector<torch::Tensor> xb;
    for (std::size_t k = start; k < end; ++k) xb.push_back(image_to_tensor(images[k]));
    auto maps = tap_features(network, torch::stack(xb), taps);
    for (const auto& tap : taps) {
      auto batch = maps.at(tap).to(torch::kFloat32).contiguous();
      const int c = static_cast<int>(batch.size(1));
      const int h = static_cast<int>(batch.size(2));
      const int w = static_cast<int>(batch.size(3));
      for (std::int64_t b = 0; b < batch.size(0); ++b) {
        auto m = batch[b].contiguous();
        auto pooled = pool_and_flatten(std::span<const float>(m.data_ptr<float>(), m.numel()), c, h, w,
                                       set.image_side, tap);
        if (pooled.adaptive) set.adaptive_taps.insert(tap);
        set.features[tap].append(pooled.features);
      }
    }
  }
  if (was_training) network->train();
  return set;
}

double LayerShift::mean() const {
  if (distances.empty()) return 0.0;
  double s = 0.0;
  for (double d : distances) s += d;
  return s / static_cast<double>(distances.size());
}

const LayerShift& LayerShiftReport::layer(const std::string& tap) const {
  for (const auto& l : layers) {
    if (l.tap == tap) return l;
  }
  throw std::out_of_range("report has no tap '" + tap + "'");
}

nlohmann::json LayerShiftReport::to_json() const {
  nlohmann::json jl = nlohmann::json::array();
  for (const auto& l : layers) {
    jl.push_back({{"tap", l.tap},
                  {"dims", l.distances.size()},
                  {"mean", l.mean()},
                  {"degenerate_dims", l.degenerate_dims},
                  {"adaptive_pooling", l.adaptive_pooling},
                  {"distances", l.distances}});
  }
  return {{"shift", shift}, {"bins", bins}, {"images", images}, {"model", model}, {"fold", fold}, {"layers", jl}};
}

LayerShiftReport LayerShiftReport::from_json(const nlohmann::json& j) {
  LayerShiftReport r;
  r.shift = j.at("shift").get<std::string>();
  r.bins = j.at("bins").get<int>();
  r.images = j.at("images").get<int>();
  r.model = j.value("model", "");
  r.fold = j.value("fold", -1);
  for (const auto& jl : j.at("layers")) {
    LayerShift l;
    l.tap = jl.at("tap").get<std::string>();
    l.distances = jl.at("distances").get<std::vector<double>>();
    l.degenerate_dims = jl.value("degenerate_dims", 0);
    l.adaptive_pooling = jl.value("adaptive_pooling", false);
    r.layers.push_back(std::move(l));
  }
  return r;
}

std::string LayerShiftReport::means_csv() const {
  std::ostringstream ss;
  ss.precision(8);
  ss << std::fixed << "tap,dims,mean_distance,degenerate_dims,adaptive\n";
  for (const auto& l : layers) {
    ss << l.tap << ',' << l.distances.size() << ',' << l.mean() << ',' << l.degenerate_dims << ','
       << (l.adaptive_pooling ? 1 : 0) << '\n';
  }
  return ss.str();
}

std::vector<LayerShift> compare_features(const FeatureSet& reference, const FeatureSet& shifted, int bins,
                                         bool parallel) {
  if (reference.taps != shifted.taps) throw std::invalid_argument("feature sets have different taps");
  std::vector<LayerShift> out;
  for (const auto& tap : reference.taps) {
    LayerShift l;
    l.tap = tap;
    std::vector<DimensionShift> dims;
    try {
      dims = layer_hellinger(reference.at(tap), shifted.at(tap), bins, parallel);
    } catch (const std::exception& e) {
      throw ShapeError("tap " + tap + ": " + e.what());
    }
    for (const auto& d : dims) {
      l.distances.push_back(d.distance);
      if (d.degenerate) ++l.degenerate_dims;
    }
    l.adaptive_pooling = reference.adaptive_taps.count(tap) > 0 || shifted.adaptive_taps.count(tap) > 0;
    out.push_back(std::move(l));
  }
  return out;
}

LayerShiftReport probe(SkipUNet& network, const std::vector<std::string>& taps,
                       const std::vector<RgbImage>& reference, const ShiftSpec& shift, int bins, int batch_size) {
  std::vector<RgbImage> shifted;
  shifted.reserve(reference.size());
  for (const auto& img : reference) shifted.push_back(apply(shift, img));
  const auto ref_features = collect_features(network, reference, taps, batch_size);
  const auto shift_features = collect_features(network, shifted, taps, batch_size);
  LayerShiftReport r;
  r.shift = shift.label();
  r.bins = bins;
  r.images = static_cast<int>(reference.size());
  r.model = network->spec().name();
  r.layers = compare_features(ref_features, shift_features, bins);
  return r;
}

double FoldAggregate::mean(const std::string& tap) const {
  const auto it = std::find(taps.begin(), taps.end(), tap);
  if (it == taps.end()) throw std::out_of_range("aggregate has no tap '" + tap + "'");
  const std::size_t t = it - taps.begin();
  double s = 0.0;
  for (const auto& f : fold_means) s += f[t];
  return fold_means.empty() ? 0.0 : s / static_cast<double>(fold_means.size());
}

nlohmann::json FoldAggregate::to_json() const {
  nlohmann::json means = nlohmann::json::object();
  for (const auto& t : taps) means[t] = mean(t);
  return {{"shift", shift}, {"taps", taps}, {"fold_means", fold_means}, {"mean", means}};
}

std::string FoldAggregate::to_csv() const {
  std::ostringstream ss;
  ss.precision(8);
  ss << std::fixed << "tap,mean";
  for (std::size_t f = 0; f < fold_means.size(); ++f) ss << ",fold" << f;
  ss << '\n';
  for (std::size_t t = 0; t < taps.size(); ++t) {
    ss << taps[t] << ',' << mean(taps[t]);
    for (const auto& f : fold_means) ss << ',' << f[t];
    ss << '\n';
  }
  return ss.str();
}

FoldAggregate aggregate_folds(const std::vector<LayerShiftReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("no reports to aggregate");
  FoldAggregate a;
  a.shift = reports.front().shift;
  for (const auto& l : reports.front().layers) a.taps.push_back(l.tap);
  for (const auto& r : reports) {
    if (r.shift != a.shift || r.bins != reports.front().bins) {
      throw std::invalid_argument("reports differ in shift or bin count");
    }
    std::vector<double> means;
    for (const auto& t : a.taps) means.push_back(r.layer(t).mean());
    a.fold_means.push_back(std::move(means));
  }
  return a;
}

void write_feature_set(const fs::path& dir, const FeatureSet& set) {
  fs::create_directories(dir);
  for (const auto& tap : set.taps) write_npy(dir / (tap + ".npy"), set.at(tap));
  nlohmann::json j = {{"taps", set.taps},
                      {"images", set.images},
                      {"image_side", set.image_side},
                      {"adaptive_taps", set.adaptive_taps}};
  write_text_atomic(dir / "features.json", j.dump(2) + "\n");
}

FeatureSet read_feature_set(const fs::path& dir) {
  FeatureSet set;
  std::vector<std::string> taps;
  if (fs::exists(dir / "features.json")) {
    const auto j = nlohmann::json::parse(read_text(dir / "features.json"));
    taps = j.at("taps").get<std::vector<std::string>>();
    set.images = j.value("images", 0);
    set.image_side = j.value("image_side", 0);
    set.adaptive_taps = j.value("adaptive_taps", std::set<std::string>{});
  } else {
    // Externally produced features: every .npy file is one tap.
    if (!fs::is_directory(dir)) throw IoError("feature directory not found: " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".npy") taps.push_back(e.path().stem().string());
    }
    std::sort(taps.begin(), taps.end());
    if (taps.empty()) throw IoError("no .npy feature files in " + dir.string());
  }
  set.taps = taps;
  for (const auto& t : taps) set.features[t] = read_npy(dir / (t + ".npy"));
  return set;
}

}  // namespace skipshift
