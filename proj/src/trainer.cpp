#include "skipshift/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "skipshift/fs_util.hpp"

namespace skipshift {

namespace fs = std::filesystem;
namespace F = torch::nn::functional;

namespace {

// torch's global generator and weight init are shared between worker threads.
std::mutex& init_mutex() {
  static std::mutex m;
  return m;
}

std::vector<torch::Tensor> snapshot_state(SkipUNet& network) {
  std::vector<torch::Tensor> state;
  torch::NoGradGuard guard;
  for (const auto& p : network->parameters()) state.push_back(p.detach().clone());
  for (const auto& b : network->buffers()) state.push_back(b.detach().clone());
  return state;
}

void restore_state(SkipUNet& network, const std::vector<torch::Tensor>& state) {
  torch::NoGradGuard guard;
  std::size_t i = 0;
  for (auto& p : network->parameters()) p.copy_(state.at(i++));
  for (auto& b : network->buffers()) b.copy_(state.at(i++));
}

torch::Tensor reflect_pad_to(const torch::Tensor& chw, int target) {
  const int h = static_cast<int>(chw.size(1));
  const int w = static_cast<int>(chw.size(2));
  if (h >= target && w >= target) return chw;
  const int ph = std::max(0, target - h);
  const int pw = std::max(0, target - w);
  auto padded = F::pad(chw.unsqueeze(0),
                       F::PadFuncOptions({pw / 2, pw - pw / 2, ph / 2, ph - ph / 2}).mode(torch::kReflect));
  return padded.squeeze(0);
}

// Source index of each output pixel for pixel-centre aligned nearest scaling.
torch::Tensor nearest_indices(std::int64_t in, std::int64_t out) {
  auto idx = torch::empty({out}, torch::kInt64);
  auto* p = idx.data_ptr<std::int64_t>();
  for (std::int64_t i = 0; i < out; ++i) p[i] = std::min(in - 1, ((2 * i + 1) * in) / (2 * out));
  return idx;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(initial_lr > 0.0)) throw std::invalid_argument("initial_lr must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (crop_size < 0 || crop_size % 32 != 0) throw std::invalid_argument("crop_size must be 0 or a multiple of 32");
  if (!(scale_min > 0.0) || scale_max < scale_min) throw std::invalid_argument("invalid scale range");
  if (!(decay_factor > 0.0)) throw std::invalid_argument("decay_factor must be positive");
  for (double m : decay_milestones) {
    if (m <= 0.0 || m >= 1.0) throw std::invalid_argument("decay milestones must lie in (0, 1)");
  }
  if (dice_smooth < 0.0) throw std::invalid_argument("dice_smooth must be >= 0");
}

double TrainConfig::learning_rate(int epoch) const {
  double lr = initial_lr;
  for (double m : decay_milestones) {
    if (epoch >= static_cast<int>(std::floor(m * epochs))) lr *= decay_factor;
  }
  return lr;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"batch_size", batch_size},   {"optimizer", "adam"},
          {"initial_lr", initial_lr},   {"decay_milestones", decay_milestones},
          {"decay_factor", decay_factor}, {"epochs", epochs},
          {"folds", folds},             {"crop_size", crop_size},
          {"augment", augment},         {"scale_min", scale_min},
          {"scale_max", scale_max},     {"dice_smooth", dice_smooth},
          {"class_of_interest", class_of_interest}, {"seed", seed},
          {"fold_seed", fold_seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("optimizer") && j.at("optimizer") != "adam") {
    throw std::invalid_argument("only the adam optimizer is supported");
  }
  c.batch_size = j.value("batch_size", c.batch_size);
  c.initial_lr = j.value("initial_lr", c.initial_lr);
  c.decay_milestones = j.value("decay_milestones", c.decay_milestones);
  c.decay_factor = j.value("decay_factor", c.decay_factor);
  c.epochs = j.value("epochs", c.epochs);
  c.folds = j.value("folds", c.folds);
  c.crop_size = j.value("crop_size", c.crop_size);
  c.augment = j.value("augment", c.augment);
  c.scale_min = j.value("scale_min", c.scale_min);
  c.scale_max = j.value("scale_max", c.scale_max);
  c.dice_smooth = j.value("dice_smooth", c.dice_smooth);
  c.class_of_interest = j.value("class_of_interest", c.class_of_interest);
  c.seed = j.value("seed", c.seed);
  c.fold_seed = j.value("fold_seed", c.fold_seed);
  c.validate();
  return c;
}

torch::Tensor image_to_tensor(const RgbImage& image) {
  auto bytes = image.bytes();
  auto hwc = torch::from_blob(const_cast<std::uint8_t*>(bytes.data()), {image.height(), image.width(), 3},
                              torch::kUInt8);
  return hwc.permute({2, 0, 1}).to(torch::kFloat32).div(255.0).contiguous();
}

torch::Tensor mask_to_tensor(const GrayImage& mask) {
  auto bytes = mask.bytes();
  return torch::from_blob(const_cast<std::uint8_t*>(bytes.data()), {mask.height(), mask.width()}, torch::kUInt8)
      .to(torch::kInt64);
}

std::pair<torch::Tensor, torch::Tensor> augment_pair(const torch::Tensor& image, const torch::Tensor& labels,
                                                     Rng& rng, const TrainConfig& cfg) {
  if (image.dim() != 3 || labels.dim() != 2 || image.size(1) != labels.size(0) ||
      image.size(2) != labels.size(1)) {
    throw ShapeError("augment_pair expects (C, H, W) and (H, W) with matching extent");
  }
  const int target = cfg.crop_size > 0 ? cfg.crop_size : static_cast<int>(image.size(1));
  auto img = image;
  auto lab = labels.to(torch::kFloat32).unsqueeze(0);

  if (rng.coin()) {
    img = img.flip({2});
    lab = lab.flip({2});
  }
  if (rng.coin()) {
    img = img.flip({1});
    lab = lab.flip({1});
  }
  const int turns = static_cast<int>(rng.below(4));
  if (turns != 0) {
    img = torch::rot90(img, turns, {1, 2});
    lab = torch::rot90(lab, turns, {1, 2});
  }
  const double s = rng.uniform(cfg.scale_min, cfg.scale_max);
  const auto h = img.size(1);
  const auto w = img.size(2);
  const std::int64_t nh = std::max<std::int64_t>(1, std::llround(h * s));
  const std::int64_t nw = std::max<std::int64_t>(1, std::llround(w * s));
  if (nh != h || nw != w) {
    img = F::interpolate(img.unsqueeze(0), F::InterpolateFuncOptions()
                                               .size(std::vector<std::int64_t>{nh, nw})
                                               .mode(torch::kBilinear)
                                               .align_corners(false))
              .squeeze(0);
    lab = lab.index_select(1, nearest_indices(h, nh)).index_select(2, nearest_indices(w, nw));
  }
  img = reflect_pad_to(img, target);
  lab = reflect_pad_to(lab, target);
  const int y0 = static_cast<int>(rng.below(img.size(1) - target + 1));
  const int x0 = static_cast<int>(rng.below(img.size(2) - target + 1));
  img = img.slice(1, y0, y0 + target).slice(2, x0, x0 + target).contiguous();
  lab = lab.slice(1, y0, y0 + target).slice(2, x0, x0 + target);
  return {img, lab.squeeze(0).round().to(torch::kInt64).contiguous()};
}

torch::Tensor segmentation_loss(const torch::Tensor& logits, const torch::Tensor& labels, double dice_smooth) {
  const auto classes = logits.size(1);
  auto ce = F::cross_entropy(logits, labels);
  auto prob = logits.softmax(1);
  auto onehot = F::one_hot(labels, classes).permute({0, 3, 1, 2}).to(prob.dtype());
  auto inter = (prob * onehot).sum({0, 2, 3});
  auto denom = prob.sum({0, 2, 3}) + onehot.sum({0, 2, 3});
  auto dice = (2.0 * inter + dice_smooth) / (denom + dice_smooth);
  return ce + (1.0 - dice.mean());
}

torch::Tensor predict_labels(SkipUNet& network, const torch::Tensor& batch) {
  torch::NoGradGuard guard;
  auto logits = network->forward(batch);
  // Strict comparison keeps the lowest class index on exact ties.
  auto best = logits.select(1, 0).clone();
  auto label = torch::zeros_like(best, torch::kUInt8);
  for (std::int64_t c = 1; c < logits.size(1); ++c) {
    auto v = logits.select(1, c);
    auto better = v > best;
    best = torch::where(better, v, best);
    label.masked_fill_(better, static_cast<std::uint8_t>(c));
  }
  return label;
}

nlohmann::json EpochRecord::to_json() const {
  return {{"epoch", epoch}, {"train_loss", train_loss}, {"val_miou", val_miou}, {"learning_rate", learning_rate}};
}

TrainOutcome train_one(const PrunedUNetSpec& spec, SampleStore& store, const FoldPartition& fold,
                       const TrainConfig& cfg, std::uint64_t seed,
                       const std::optional<fs::path>& pretrained_encoder,
                       const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  spec.validate();
  if (fold.train.empty() || fold.val.empty()) throw std::invalid_argument("fold has an empty train or val part");
  const auto& manifest = store.manifest();
  for (const auto* part : {&fold.train, &fold.val}) {
    for (int i : *part) {
      if (i < 0 || i >= static_cast<int>(manifest.entries.size())) {
        throw std::invalid_argument("fold references unknown sample " + std::to_string(i));
      }
      if (manifest.entries[i].split == Split::test) {
        throw std::invalid_argument("fold references test-split sample " + std::to_string(i));
      }
    }
  }

  TrainOutcome out;
  {
    std::lock_guard lock(init_mutex());
    torch::manual_seed(seed);
    out.model = build_model(spec);
  }
  if (pretrained_encoder) load_encoder_weights(out.model, *pretrained_encoder);

  std::vector<torch::Tensor> images, labels;
  images.reserve(fold.train.size());
  for (int i : fold.train) {
    images.push_back(image_to_tensor(store.image(i)));
    labels.push_back(mask_to_tensor(store.mask(i)));
  }

  torch::optim::Adam optimizer(out.model->parameters(), torch::optim::AdamOptions(cfg.initial_lr));
  std::vector<torch::Tensor> best_state;
  Rng rng(derive_seed(seed, 0xA06ULL));
  std::vector<std::size_t> order(fold.train.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate(epoch);
    for (auto& group : optimizer.param_groups()) {
      static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
    }
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    out.model->train();
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<torch::Tensor> xb, yb;
      for (std::size_t k = start; k < end; ++k) {
        if (cfg.augment) {
          auto [x, y] = augment_pair(images[order[k]], labels[order[k]], rng, cfg);
          xb.push_back(x);
          yb.push_back(y);
        } else {
          xb.push_back(images[order[k]]);
          yb.push_back(labels[order[k]]);
        }
      }
      auto logits = out.model->forward(torch::stack(xb));
      auto loss = segmentation_loss(logits, torch::stack(yb), cfg.dice_smooth);
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        std::ostringstream ss;
        ss << "non-finite loss " << value << " at epoch " << epoch << ", batch " << batches << " (" << spec.name()
           << ")";
        out.aborted = true;
        out.diagnostic = ss.str();
        break;
      }
      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
      loss_sum += value;
      ++batches;
    }
    if (out.aborted) break;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / std::max(1, batches);
    rec.val_miou = evaluate_confusion(out.model, store, fold.val, std::nullopt, cfg.batch_size).mean_iou();
    rec.learning_rate = lr;
    out.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (out.best_epoch < 0 || rec.val_miou > out.best_val_miou) {
      out.best_epoch = epoch;
      out.best_val_miou = rec.val_miou;
      best_state = snapshot_state(out.model);
    }
  }
  if (!best_state.empty()) restore_state(out.model, best_state);
  out.model->eval();
  return out;
}

ConfusionAccumulator evaluate_confusion(SkipUNet& network, SampleStore& store, const std::vector<int>& indices,
                                        const std::optional<ShiftSpec>& shift, int batch_size) {
  if (indices.empty()) throw std::invalid_argument("evaluation set is empty");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  const bool was_training = network->is_training();
  network->eval();
  ConfusionAccumulator acc(network->spec().num_classes);
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t end = std::min(indices.size(), start + batch_size);
    std::vector<torch::Tensor> xb;
    for (std::size_t k = start; k < end; ++k) {
      const RgbImage& img = store.image(indices[k]);
      xb.push_back(shift ? image_to_tensor(apply(*shift, img)) : image_to_tensor(img));
    }
    auto pred = predict_labels(network, torch::stack(xb)).contiguous();
    for (std::size_t k = start; k < end; ++k) {
      const GrayImage& mask = store.mask(indices[k]);
      auto p = pred[static_cast<std::int64_t>(k - start)].contiguous();
      if (static_cast<std::size_t>(p.numel()) != mask.pixel_count()) {
        throw ShapeError("prediction and mask sizes differ for sample " + std::to_string(indices[k]));
      }
      acc.add(mask.bytes(), std::span<const std::uint8_t>(p.data_ptr<std::uint8_t>(), p.numel()));
    }
  }
  if (was_training) network->train();
  return acc;
}

std::vector<double> evaluate(SkipUNet& network, SampleStore& store, const std::vector<int>& indices,
                             const std::optional<ShiftSpec>& shift, int batch_size) {
  return evaluate_confusion(network, store, indices, shift, batch_size).ious();
}

bool IoUCell::complete() const {
  return !fold_values.empty() &&
         std::all_of(fold_values.begin(), fold_values.end(), [](double v) { return std::isfinite(v); });
}

double IoUCell::mean() const {
  if (!complete()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : fold_values) s += v;
  return s / static_cast<double>(fold_values.size());
}

double IoUCell::stddev() const {
  if (!complete()) return std::numeric_limits<double>::quiet_NaN();
  if (fold_values.size() < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double v : fold_values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(fold_values.size() - 1));
}

const IoUCell& IoUMatrix::cell(const std::string& row, const std::string& column) const {
  const auto r = std::find(rows.begin(), rows.end(), row);
  const auto c = std::find(columns.begin(), columns.end(), column);
  if (r == rows.end() || c == columns.end()) throw std::out_of_range("no IoU cell " + row + "/" + column);
  return cells[r - rows.begin()][c - columns.begin()];
}

std::string IoUMatrix::to_csv() const {
  std::ostringstream ss;
  ss.precision(6);
  ss << std::fixed << "spec";
  for (const auto& c : columns) ss << ',' << c;
  ss << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ss << rows[r];
    for (const auto& cell : cells[r]) {
      ss << ',';
      if (cell.complete()) ss << cell.mean();
    }
    ss << '\n';
  }
  return ss.str();
}

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

nlohmann::json IoUMatrix::to_json() const {
  nlohmann::json jcells = nlohmann::json::array();
  for (const auto& row : cells) {
    nlohmann::json jrow = nlohmann::json::array();
    for (const auto& cell : row) {
      nlohmann::json folds_j = nlohmann::json::array();
      for (double v : cell.fold_values) folds_j.push_back(finite_or_null(v));
      jrow.push_back({{"folds", folds_j},
                      {"mean", finite_or_null(cell.mean())},
                      {"std", finite_or_null(cell.stddev())},
                      {"errors", cell.errors}});
    }
    jcells.push_back(jrow);
  }
  return {{"rows", rows}, {"columns", columns}, {"folds", folds}, {"cells", jcells}};
}

IoUMatrix IoUMatrix::from_json(const nlohmann::json& j) {
  IoUMatrix m;
  m.rows = j.at("rows").get<std::vector<std::string>>();
  m.columns = j.at("columns").get<std::vector<std::string>>();
  m.folds = j.at("folds").get<int>();
  for (const auto& jrow : j.at("cells")) {
    std::vector<IoUCell> row;
    for (const auto& jc : jrow) {
      IoUCell c;
      for (const auto& v : jc.at("folds")) {
        c.fold_values.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
      }
      c.errors = jc.value("errors", std::vector<std::string>{});
      row.push_back(std::move(c));
    }
    m.cells.push_back(std::move(row));
  }
  return m;
}

nlohmann::json JobEvaluation::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& [name, v] : column_iou) cols.push_back({{"column", name}, {"iou", v}});
  return {{"spec", spec}, {"fold", fold}, {"columns", cols}, {"error", error}};
}

JobEvaluation JobEvaluation::from_json(const nlohmann::json& j) {
  JobEvaluation e;
  e.spec = j.at("spec").get<std::string>();
  e.fold = j.at("fold").get<int>();
  for (const auto& c : j.at("columns")) e.column_iou.emplace_back(c.at("column"), c.at("iou").get<double>());
  e.error = j.value("error", "");
  return e;
}

JobEvaluation evaluate_job(SkipUNet& network, const std::string& spec_name, int fold, SampleStore& store,
                           const std::vector<int>& test_indices, const SweepGrid& grid, const TrainConfig& cfg) {
  JobEvaluation e;
  e.spec = spec_name;
  e.fold = fold;
  auto cls = [&](const std::optional<ShiftSpec>& shift) {
    return evaluate_confusion(network, store, test_indices, shift, cfg.batch_size).iou(cfg.class_of_interest);
  };
  e.column_iou.emplace_back("original", cls(std::nullopt));
  for (const auto& s : grid.specs()) e.column_iou.emplace_back(s.label(), cls(s));
  return e;
}

IoUMatrix assemble_matrix(const std::vector<std::string>& spec_names, const SweepGrid& grid, int folds,
                          const std::vector<JobEvaluation>& jobs) {
  IoUMatrix m;
  m.rows = spec_names;
  m.columns.push_back("original");
  for (const auto& s : grid.specs()) m.columns.push_back(s.label());
  m.folds = folds;
  m.cells.assign(m.rows.size(), std::vector<IoUCell>(m.columns.size()));
  for (auto& row : m.cells) {
    for (auto& c : row) c.fold_values.assign(folds, std::numeric_limits<double>::quiet_NaN());
  }
  for (const auto& job : jobs) {
    const auto r = std::find(m.rows.begin(), m.rows.end(), job.spec);
    if (r == m.rows.end() || job.fold < 0 || job.fold >= folds) {
      throw std::invalid_argument("evaluation for unknown job " + job.spec + "/" + std::to_string(job.fold));
    }
    auto& row = m.cells[r - m.rows.begin()];
    if (!job.error.empty()) {
      for (auto& c : row) c.errors.push_back("fold " + std::to_string(job.fold) + ": " + job.error);
      continue;
    }
    for (const auto& [column, v] : job.column_iou) {
      const auto c = std::find(m.columns.begin(), m.columns.end(), column);
      if (c == m.columns.end()) continue;
      if (v < 0.0 || v > 1.0) throw std::logic_error("IoU outside [0, 1]");
      row[c - m.columns.begin()].fold_values[job.fold] = v;
    }
  }
  return m;
}

void save_checkpoint(SkipUNet& network, const fs::path& path) {
  fs::create_directories(path.parent_path());
  commit_atomically(path, [&](const fs::path& tmp) { torch::save(network, tmp.string()); });
}

SkipUNet load_checkpoint(const PrunedUNetSpec& spec, const fs::path& path) {
  if (!fs::exists(path)) throw IoError("checkpoint not found: " + path.string());
  auto net = build_model(spec);
  try {
    torch::load(net, path.string());
  } catch (const c10::Error& e) {
    throw IoError("cannot load checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  net->eval();
  return net;
}

namespace {

struct Job {
  PrunedUNetSpec spec;
  int fold = 0;
};

std::string job_key(const Job& job, const FoldPartition& part, const TrainConfig& cfg, const SampleStore& store,
                    const std::optional<fs::path>& pretrained) {
  nlohmann::json k = {{"spec", job.spec.to_json()},
                      {"fold", job.fold},
                      {"train", part.train},
                      {"val", part.val},
                      {"train_config", cfg.to_json()},
                      {"dataset", store.manifest().to_json()}};
  if (pretrained) k["pretrained"] = sha256_file(*pretrained);
  return sha256_hex(k.dump());
}

std::string eval_key(const std::string& train_key, const SweepGrid& grid, const std::vector<int>& test) {
  return sha256_hex(nlohmann::json{{"train", train_key}, {"grid", grid.to_json()}, {"test", test}}.dump());
}

bool key_matches(const fs::path& key_file, const std::string& key) {
  return fs::exists(key_file) && read_text(key_file) == key;
}

}  // namespace

IoUMatrix run_sweep(const std::vector<PrunedUNetSpec>& specs, const SweepGrid& grid, const TrainConfig& cfg,
                    SampleStore& store, const SweepOptions& options) {
  cfg.validate();
  grid.validate();
  if (specs.empty()) throw std::invalid_argument("no model specs to sweep");
  const auto partitions = stratified_folds(store.manifest(), cfg.folds, cfg.fold_seed);
  const auto test = store.manifest().indices(Split::test);
  if (test.empty()) throw std::invalid_argument("dataset has no test split");

  std::vector<Job> jobs;
  std::vector<std::string> names;
  for (const auto& s : specs) {
    s.validate();
    names.push_back(s.name());
    for (int f = 0; f < cfg.folds; ++f) jobs.push_back({s, f});
  }

  std::vector<JobEvaluation> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto report = [&](const std::string& msg) {
    if (!options.progress) return;
    std::lock_guard lock(progress_mutex);
    options.progress(msg);
  };

  auto worker = [&]() {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      const auto& part = partitions[job.fold];
      const std::string tag = job.spec.name() + "/fold" + std::to_string(job.fold);
      JobEvaluation& result = results[j];
      try {
        const std::string tkey = job_key(job, part, cfg, store, options.pretrained_encoder);
        const std::string ekey = eval_key(tkey, grid, test);
        std::optional<fs::path> dir;
        if (options.work_dir) dir = *options.work_dir / job.spec.name() / ("fold" + std::to_string(job.fold));

        if (dir && key_matches(*dir / "eval.key", ekey) && fs::exists(*dir / "eval.json")) {
          result = JobEvaluation::from_json(nlohmann::json::parse(read_text(*dir / "eval.json")));
          report(tag + ": cached");
          continue;
        }
        SkipUNet net{nullptr};
        if (dir && key_matches(*dir / "checkpoint.key", tkey) && fs::exists(*dir / "checkpoint.pt")) {
          net = load_checkpoint(job.spec, *dir / "checkpoint.pt");
          report(tag + ": checkpoint cached");
        } else {
          report(tag + ": training");
          std::string log;
          auto outcome = train_one(job.spec, store, part, cfg, derive_seed(cfg.seed, job.fold),
                                   options.pretrained_encoder, [&](const EpochRecord& r) {
                                     log += r.to_json().dump() + "\n";
                                     std::ostringstream ss;
                                     ss << tag << ": epoch " << r.epoch << " loss " << r.train_loss << " val mIoU "
                                        << r.val_miou;
                                     report(ss.str());
                                   });
          if (outcome.aborted) {
            log += nlohmann::json{{"aborted", true}, {"diagnostic", outcome.diagnostic}}.dump() + "\n";
            report(tag + ": " + outcome.diagnostic);
          }
          log += nlohmann::json{{"best_epoch", outcome.best_epoch}, {"best_val_miou", outcome.best_val_miou}}.dump() +
                 "\n";
          if (outcome.best_epoch < 0) throw std::runtime_error(outcome.diagnostic);
          net = outcome.model;
          if (dir) {
            fs::create_directories(*dir);
            write_text_atomic(*dir / "train_log.jsonl", log);
            save_checkpoint(net, *dir / "checkpoint.pt");
            write_text_atomic(*dir / "checkpoint.key", tkey);
          }
        }
        result = evaluate_job(net, job.spec.name(), job.fold, store, test, grid, cfg);
        if (dir) {
          write_text_atomic(*dir / "eval.json", result.to_json().dump(2) + "\n");
          write_text_atomic(*dir / "eval.key", ekey);
        }
        report(tag + ": evaluated");
      } catch (const std::exception& e) {
        result = JobEvaluation{};
        result.spec = job.spec.name();
        result.fold = job.fold;
        result.error = e.what();
        report(tag + ": failed: " + e.what());
      }
    }
  };

  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(jobs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return assemble_matrix(names, grid, cfg.folds, results);
}

}  // namespace skipshift
