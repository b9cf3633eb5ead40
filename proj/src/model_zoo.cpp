#include "skipshift/model_zoo.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace skipshift {

namespace nn = torch::nn;
namespace fs = std::filesystem;

namespace {

nn::Conv2d conv(int in, int out, int kernel, int stride, int padding, bool bias) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(bias));
}

std::array<int, 4> stage_blocks(int depth) {
  if (depth == 18) return {2, 2, 2, 2};
  if (depth == 34) return {3, 4, 6, 3};
  throw std::invalid_argument("encoder depth must be 18 or 34, got " + std::to_string(depth));
}

std::string shape_string(const torch::Tensor& t) {
  std::ostringstream ss;
  ss << t.sizes();
  return ss.str();
}

}  // namespace

void PrunedUNetSpec::validate() const {
  (void)stage_blocks(encoder_depth);
  if (prune_level < 0 || prune_level > 4) {
    throw std::invalid_argument("prune level must lie in 0..4, got " + std::to_string(prune_level));
  }
  for (int c : decoder_channels) {
    if (c <= 0) throw std::invalid_argument("decoder channel widths must be positive");
  }
  if (in_channels <= 0 || num_classes < 2) throw std::invalid_argument("invalid input/class count");
}

std::string PrunedUNetSpec::name() const {
  return "resnet" + std::to_string(encoder_depth) + "_L" + std::to_string(prune_level);
}

nlohmann::json PrunedUNetSpec::to_json() const {
  return {{"encoder_depth", encoder_depth},
          {"prune_level", prune_level},
          {"decoder_channels", decoder_channels},
          {"in_channels", in_channels},
          {"num_classes", num_classes}};
}

PrunedUNetSpec PrunedUNetSpec::from_json(const nlohmann::json& j) {
  PrunedUNetSpec s;
  s.encoder_depth = j.value("encoder_depth", s.encoder_depth);
  s.prune_level = j.value("prune_level", s.prune_level);
  if (j.contains("decoder_channels")) s.decoder_channels = j.at("decoder_channels").get<std::array<int, 5>>();
  s.in_channels = j.value("in_channels", s.in_channels);
  s.num_classes = j.value("num_classes", s.num_classes);
  s.validate();
  return s;
}

std::vector<LayerTapPoint> tap_points(const PrunedUNetSpec& spec) {
  const auto& dec = spec.decoder_channels;
  return {{"encoder_0", 64, 2},     {"encoder_1", 64, 4},     {"encoder_2", 128, 8},
          {"encoder_3", 256, 16},   {"encoder_4", 512, 32},   {"decoder_3", dec[0], 16},
          {"decoder_2", dec[1], 8}, {"decoder_1", dec[2], 4}, {"decoder_0", dec[3], 2}};
}

BasicBlockImpl::BasicBlockImpl(int in_channels, int out_channels, int stride) {
  conv1 = register_module("conv1", conv(in_channels, out_channels, 3, stride, 1, false));
  bn1 = register_module("bn1", nn::BatchNorm2d(out_channels));
  conv2 = register_module("conv2", conv(out_channels, out_channels, 3, 1, 1, false));
  bn2 = register_module("bn2", nn::BatchNorm2d(out_channels));
  if (stride != 1 || in_channels != out_channels) {
    downsample = register_module(
        "downsample", nn::Sequential(conv(in_channels, out_channels, 1, stride, 0, false),
                                     nn::BatchNorm2d(out_channels)));
  }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
  auto out = torch::relu(bn1(conv1(x)));
  out = bn2(conv2(out));
  const auto identity = downsample ? downsample->forward(x) : x;
  return torch::relu(out + identity);
}

ResNetEncoderImpl::ResNetEncoderImpl(int depth, int in_channels) : depth_(depth) {
  const auto blocks = stage_blocks(depth);
  conv1 = register_module("conv1", conv(in_channels, 64, 7, 2, 3, false));
  bn1 = register_module("bn1", nn::BatchNorm2d(64));
  maxpool = register_module("maxpool", nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).padding(1)));
  const std::array<int, 4> widths{64, 128, 256, 512};
  int in = 64;
  for (int s = 0; s < 4; ++s) {
    nn::Sequential stage;
    for (int b = 0; b < blocks[s]; ++b) {
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      stage->push_back(BasicBlock(in, widths[s], stride));
      in = widths[s];
    }
    layers[s] = register_module("layer" + std::to_string(s + 1), stage);
  }
}

std::array<torch::Tensor, 5> ResNetEncoderImpl::forward(const torch::Tensor& x) {
  std::array<torch::Tensor, 5> f;
  f[0] = torch::relu(bn1(conv1(x)));
  f[1] = layers[0]->forward(maxpool(f[0]));
  f[2] = layers[1]->forward(f[1]);
  f[3] = layers[2]->forward(f[2]);
  f[4] = layers[3]->forward(f[3]);
  return f;
}

DecoderBlockImpl::DecoderBlockImpl(int in_channels, int skip_channels, int out_channels)
    : in_channels_(in_channels), skip_channels_(skip_channels) {
  conv1 = register_module("conv1", conv(in_channels + skip_channels, out_channels, 3, 1, 1, false));
  bn1 = register_module("bn1", nn::BatchNorm2d(out_channels));
  conv2 = register_module("conv2", conv(out_channels, out_channels, 3, 1, 1, false));
  bn2 = register_module("bn2", nn::BatchNorm2d(out_channels));
}

torch::Tensor DecoderBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& skip) {
  auto up = torch::nn::functional::interpolate(
      x, torch::nn::functional::InterpolateFuncOptions()
             .scale_factor(std::vector<double>{2.0, 2.0})
             .mode(torch::kNearest));
  if (skip.defined()) up = torch::cat({up, skip}, 1);
  up = torch::relu(bn1(conv1(up)));
  return torch::relu(bn2(conv2(up)));
}

SkipUNetImpl::SkipUNetImpl(const PrunedUNetSpec& spec) : spec_(spec) {
  spec_.validate();
  encoder_ = register_module("encoder", ResNetEncoder(spec_.encoder_depth, spec_.in_channels));
  const auto& dec = spec_.decoder_channels;
  int in = 512;
  for (int i = 0; i < 5; ++i) {
    // Block i consumes skip level 4 - i; block 4 runs at full resolution without a skip.
    const int level = 4 - i;
    const int skip = (level >= 1 && level > spec_.prune_level) ? kSkipChannels[level - 1] : 0;
    blocks_.push_back(register_module("decoder_block" + std::to_string(i), DecoderBlock(in, skip, dec[i])));
    in = dec[i];
  }
  head_ = register_module("segmentation_head", conv(dec[4], spec_.num_classes, 3, 1, 1, true));
  initialize_weights(*this);
}

torch::Tensor SkipUNetImpl::forward(const torch::Tensor& x) { return forward(x, nullptr); }

torch::Tensor SkipUNetImpl::forward(const torch::Tensor& x, ForwardObserver* observer) {
  if (x.dim() != 4 || x.size(1) != spec_.in_channels) {
    throw ShapeError("expected input (B, " + std::to_string(spec_.in_channels) + ", H, W), got " +
                     shape_string(x));
  }
  if (x.size(2) % 32 != 0 || x.size(3) % 32 != 0) {
    throw ShapeError("input height and width must be multiples of 32, got " + shape_string(x));
  }
  const auto features = encoder_->forward(x);
  if (observer != nullptr) {
    for (int i = 0; i < 5; ++i) observer->on_tap("encoder_" + std::to_string(i), features[i]);
  }
  torch::Tensor y = features[4];
  for (int i = 0; i < 5; ++i) {
    const int level = 4 - i;
    torch::Tensor skip;
    if (blocks_[i]->skip_channels() > 0) {
      skip = features[level - 1];
      if (observer != nullptr) skip = observer->on_skip(level, skip);
    }
    y = blocks_[i]->forward(y, skip);
    if (observer != nullptr && i < 4) observer->on_tap("decoder_" + std::to_string(3 - i), y);
  }
  return head_(y);
}

void initialize_weights(nn::Module& module) {
  torch::NoGradGuard guard;
  for (auto& m : module.modules(/*include_self=*/false)) {
    if (auto* c = m->as<nn::Conv2d>()) {
      nn::init::kaiming_uniform_(c->weight, 0.0, torch::kFanIn, torch::kReLU);
      if (c->bias.defined()) nn::init::zeros_(c->bias);
    } else if (auto* bn = m->as<nn::BatchNorm2d>()) {
      nn::init::ones_(bn->weight);
      nn::init::zeros_(bn->bias);
    }
  }
}

SkipUNet build_model(const PrunedUNetSpec& spec) { return SkipUNet(spec); }

std::int64_t count_parameters(const nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) {
    if (p.requires_grad()) n += p.numel();
  }
  return n;
}

std::int64_t count_parameters(const PrunedUNetSpec& spec) {
  auto model = build_model(spec);
  return count_parameters(*model);
}

namespace {

class TapRecorder : public ForwardObserver {
 public:
  explicit TapRecorder(const std::set<std::string>& wanted) : wanted_(wanted) {}
  void on_tap(const std::string& name, const torch::Tensor& activation) override {
    if (wanted_.count(name) != 0) recorded[name] = activation.detach();
  }
  std::map<std::string, torch::Tensor> recorded;

 private:
  const std::set<std::string>& wanted_;
};

}  // namespace

std::map<std::string, torch::Tensor> tap_features(SkipUNet& network, const torch::Tensor& batch,
                                                  const std::vector<std::string>& taps,
                                                  torch::Tensor* logits) {
  std::set<std::string> known;
  for (const auto& t : tap_points(network->spec())) known.insert(t.name);
  std::set<std::string> wanted;
  for (const auto& t : taps) {
    if (known.count(t) == 0) throw std::invalid_argument("unknown tap '" + t + "'");
    wanted.insert(t);
  }
  TapRecorder recorder(wanted);
  auto out = network->forward(batch, &recorder);
  if (logits != nullptr) *logits = out;
  return std::move(recorder.recorded);
}

namespace {

// Flattened leaf tensors of an archive, keyed by dotted path.
void collect_archive(torch::serialize::InputArchive& archive, const std::string& prefix,
                     std::map<std::string, torch::Tensor>& out) {
  for (const auto& key : archive.keys()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    torch::Tensor t;
    if (archive.try_read(key, t, /*is_buffer=*/false) || archive.try_read(key, t, /*is_buffer=*/true)) {
      out[name] = t;
      continue;
    }
    torch::serialize::InputArchive child;
    if (archive.try_read(key, child)) collect_archive(child, name, out);
  }
}

}  // namespace

void save_encoder_weights(SkipUNet& network, const fs::path& path) {
  torch::serialize::OutputArchive archive;
  network->encoder()->save(archive);
  archive.save_to(path.string());
}

void load_encoder_weights(SkipUNet& network, const fs::path& path) {
  if (!fs::exists(path)) throw WeightFileError("encoder weight file not found: " + path.string());
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw WeightFileError("cannot read encoder weight file " + path.string() + ": " + e.what_without_backtrace());
  }
  std::map<std::string, torch::Tensor> stored;
  collect_archive(archive, "", stored);

  auto& encoder = *network->encoder();
  // Registration order, so errors name the first offending entry of the forward graph.
  std::vector<std::pair<std::string, torch::Tensor>> targets;
  std::set<std::string> target_names;
  for (const auto& item : encoder.named_parameters()) targets.emplace_back(item.key(), item.value());
  for (const auto& item : encoder.named_buffers()) targets.emplace_back(item.key(), item.value());
  for (const auto& [name, t] : targets) target_names.insert(name);

  for (const auto& [name, target] : targets) {
    const auto it = stored.find(name);
    if (it == stored.end()) {
      throw WeightFileError("encoder weight mismatch at '" + name + "': missing from " + path.string());
    }
    if (it->second.sizes() != target.sizes()) {
      throw WeightFileError("encoder weight mismatch at '" + name + "': expected shape " +
                            shape_string(target) + ", file has " + shape_string(it->second));
    }
  }
  for (const auto& [name, tensor] : stored) {
    if (target_names.count(name) == 0) {
      throw WeightFileError("encoder weight mismatch at '" + name +
                            "': not part of a ResNet" + std::to_string(encoder.depth()) + " encoder");
    }
  }
  torch::NoGradGuard guard;
  for (auto& [name, target] : targets) target.copy_(stored.at(name));
}

}  // namespace skipshift
