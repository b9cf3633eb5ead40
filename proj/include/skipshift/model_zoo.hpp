#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "skipshift/shift_metric.hpp"

namespace skipshift {

/// Residual U-net variant: ResNet18/34 encoder, five-block decoder, and the
/// `prune_level` uppermost long-range skip connections removed.
struct PrunedUNetSpec {
  int encoder_depth = 18;
  int prune_level = 0;
  std::array<int, 5> decoder_channels{256, 128, 64, 32, 16};
  int in_channels = 3;
  int num_classes = 2;

  void validate() const;
  /// e.g. "resnet18_L1"; L0 is the baseline.
  std::string name() const;

  nlohmann::json to_json() const;
  static PrunedUNetSpec from_json(const nlohmann::json& j);

  bool operator==(const PrunedUNetSpec&) const = default;
};

/// Encoder widths feeding the four skip levels, top-down (level 1 first).
inline constexpr std::array<int, 4> kSkipChannels{64, 64, 128, 256};

struct LayerTapPoint {
  std::string name;
  int channels = 0;
  int downsample = 1;
};

/// encoder_0..encoder_4 (encoder_4 = bottleneck), then decoder_3..decoder_0,
/// in forward-pass order. decoder_l runs at the resolution of encoder_l.
std::vector<LayerTapPoint> tap_points(const PrunedUNetSpec& spec);

/// Passive forward-pass observer. on_skip may replace the tensor carried by a
/// skip connection (level 1..4, top-down); it is only called for skips that
/// exist in the network.
class ForwardObserver {
 public:
  virtual ~ForwardObserver() = default;
  virtual void on_tap(const std::string& name, const torch::Tensor& activation) {}
  virtual torch::Tensor on_skip(int level, torch::Tensor activation) { return activation; }
};

class BasicBlockImpl : public torch::nn::Module {
 public:
  BasicBlockImpl(int in_channels, int out_channels, int stride);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
  torch::nn::Sequential downsample{nullptr};
};
TORCH_MODULE(BasicBlock);

/// ResNet trunk without pooling head. Parameter names follow the usual
/// torchvision layout (conv1, bn1, layer1.0.conv1, ...).
class ResNetEncoderImpl : public torch::nn::Module {
 public:
  ResNetEncoderImpl(int depth, int in_channels);
  /// Stem output (/2) and the four stage outputs (/4 ... /32).
  std::array<torch::Tensor, 5> forward(const torch::Tensor& x);
  int depth() const { return depth_; }

 private:
  int depth_;
  torch::nn::Conv2d conv1{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr};
  torch::nn::MaxPool2d maxpool{nullptr};
  std::array<torch::nn::Sequential, 4> layers;
};
TORCH_MODULE(ResNetEncoder);

/// x2 nearest upsample, optional skip concat, two 3x3 conv-BN-ReLU layers.
class DecoderBlockImpl : public torch::nn::Module {
 public:
  DecoderBlockImpl(int in_channels, int skip_channels, int out_channels);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& skip);
  int skip_channels() const { return skip_channels_; }
  int input_width() const { return in_channels_ + skip_channels_; }

 private:
  int in_channels_;
  int skip_channels_;
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
};
TORCH_MODULE(DecoderBlock);

class SkipUNetImpl : public torch::nn::Module {
 public:
  explicit SkipUNetImpl(const PrunedUNetSpec& spec);

  /// (B, 3, H, W) -> (B, num_classes, H, W) logits. H and W must be multiples
  /// of 32 (ShapeError otherwise).
  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor forward(const torch::Tensor& x, ForwardObserver* observer);

  const PrunedUNetSpec& spec() const { return spec_; }
  ResNetEncoder& encoder() { return encoder_; }
  const std::vector<DecoderBlock>& decoder_blocks() const { return blocks_; }

 private:
  PrunedUNetSpec spec_;
  ResNetEncoder encoder_{nullptr};
  std::vector<DecoderBlock> blocks_;
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(SkipUNet);

/// He-uniform convolutions, unit/zero batch-norm affine parameters.
void initialize_weights(torch::nn::Module& module);

SkipUNet build_model(const PrunedUNetSpec& spec);

std::int64_t count_parameters(const torch::nn::Module& module);
/// Trainable parameters of build_model(spec).
std::int64_t count_parameters(const PrunedUNetSpec& spec);

/// Runs one forward pass and returns the requested activations, keyed by
/// tap name. Throws std::invalid_argument for an unknown tap.
std::map<std::string, torch::Tensor> tap_features(SkipUNet& network, const torch::Tensor& batch,
                                                  const std::vector<std::string>& taps,
                                                  torch::Tensor* logits = nullptr);

class WeightFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes encoder parameters and batch-norm buffers as a torch archive.
void save_encoder_weights(SkipUNet& network, const std::filesystem::path& path);

/// Replaces every encoder parameter and buffer from `path`; the decoder is
/// untouched. The file must hold exactly the encoder's tensors with matching
/// shapes, otherwise WeightFileError names the first offending entry and
/// nothing is modified.
void load_encoder_weights(SkipUNet& network, const std::filesystem::path& path);

}  // namespace skipshift
