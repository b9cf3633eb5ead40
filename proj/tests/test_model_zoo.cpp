#include <gtest/gtest.h>

#include <torch/torch.h>

#include "skipshift/model_zoo.hpp"
#include "support.hpp"

namespace skipshift {
namespace {

using testing::TempDir;

PrunedUNetSpec make_spec(int depth, int level) {
  PrunedUNetSpec s;
  s.encoder_depth = depth;
  s.prune_level = level;
  return s;
}

TEST(ParameterCounts, ReproduceTheTable) {
  const std::int64_t r18[5] = {14328354, 14309922, 14273058, 14125602, 13535778};
  const std::int64_t r34[5] = {24436514, 24418082, 24381218, 24233762, 23643938};
  for (int l = 0; l < 5; ++l) {
    EXPECT_EQ(count_parameters(make_spec(18, l)), r18[l]) << "resnet18 L" << l;
    EXPECT_EQ(count_parameters(make_spec(34, l)), r34[l]) << "resnet34 L" << l;
  }
}

TEST(ParameterCounts, PruneDeltasFactorIntoSkipTimesDecoderWidth) {
  // Removing skip level l drops 9 * C_skip * C_dec weights from the first
  // convolution of the decoder block that consumed it; nothing else changes.
  const std::array<int, 5> dec{256, 128, 64, 32, 16};
  for (int depth : {18, 34}) {
    for (int l = 1; l <= 4; ++l) {
      const std::int64_t expected = 9LL * kSkipChannels[l - 1] * dec[4 - l];
      EXPECT_EQ(count_parameters(make_spec(depth, l - 1)) - count_parameters(make_spec(depth, l)), expected);
    }
  }
  EXPECT_EQ(count_parameters(make_spec(18, 0)) - count_parameters(make_spec(18, 1)), 18432);
  EXPECT_EQ(count_parameters(make_spec(18, 1)) - count_parameters(make_spec(18, 2)), 36864);
  EXPECT_EQ(count_parameters(make_spec(18, 2)) - count_parameters(make_spec(18, 3)), 147456);
  EXPECT_EQ(count_parameters(make_spec(18, 3)) - count_parameters(make_spec(18, 4)), 589824);
}

TEST(Structure, L1DiffersFromBaselineOnlyInTopDecoderBlock) {
  SkipUNet a = build_model(make_spec(34, 0));
  SkipUNet b = build_model(make_spec(34, 1));
  auto pa = a->named_parameters();
  auto pb = b->named_parameters();
  ASSERT_EQ(pa.size(), pb.size());
  std::vector<std::string> differing;
  for (const auto& item : pa) {
    ASSERT_TRUE(pb.contains(item.key()));
    if (item.value().sizes() != pb[item.key()].sizes()) differing.push_back(item.key());
  }
  EXPECT_EQ(differing, std::vector<std::string>{"decoder_block3.conv1.weight"});
  EXPECT_EQ(a->decoder_blocks()[3]->input_width() - b->decoder_blocks()[3]->input_width(), 64);
}

TEST(Structure, L4HasNoSkipConcatenations) {
  SkipUNet net = build_model(make_spec(18, 4));
  for (const auto& block : net->decoder_blocks()) EXPECT_EQ(block->skip_channels(), 0);
  SkipUNet base = build_model(make_spec(18, 0));
  const std::vector<int> skips{256, 128, 64, 64, 0};
  for (int i = 0; i < 5; ++i) EXPECT_EQ(base->decoder_blocks()[i]->skip_channels(), skips[i]);
}

TEST(Forward, OutputShapeAndInputChecks) {
  torch::NoGradGuard ng;
  SkipUNet net = build_model(make_spec(18, 2));
  net->eval();
  const auto out = net->forward(torch::rand({2, 3, 64, 96}));
  EXPECT_EQ(out.sizes(), (std::vector<std::int64_t>{2, 2, 64, 96}));
  EXPECT_THROW(net->forward(torch::rand({1, 3, 48, 64})), ShapeError);
  EXPECT_THROW(net->forward(torch::rand({1, 1, 64, 64})), ShapeError);
}

TEST(Taps, ShapesFollowTheTapTable) {
  torch::NoGradGuard ng;
  SkipUNet net = build_model(make_spec(18, 0));
  net->eval();
  std::vector<std::string> names;
  for (const auto& t : tap_points(net->spec())) names.push_back(t.name);
  const auto feats = tap_features(net, torch::rand({1, 3, 128, 128}), names);
  ASSERT_EQ(feats.size(), 9u);
  for (const auto& t : tap_points(net->spec())) {
    EXPECT_EQ(feats.at(t.name).sizes(), (std::vector<std::int64_t>{1, t.channels, 128 / t.downsample, 128 / t.downsample}))
        << t.name;
  }
}

TEST(Taps, Encoder1At512Is64By128By128) {
  torch::NoGradGuard ng;
  SkipUNet net = build_model(make_spec(18, 0));
  net->eval();
  const auto feats = tap_features(net, torch::rand({1, 3, 512, 512}), {"encoder_1"});
  EXPECT_EQ(feats.at("encoder_1").sizes(), (std::vector<std::int64_t>{1, 64, 128, 128}));
}

TEST(Taps, ObservationIsPassive) {
  torch::NoGradGuard ng;
  torch::manual_seed(3);
  SkipUNet net = build_model(make_spec(18, 1));
  net->eval();
  const auto x = torch::rand({2, 3, 64, 64});
  const auto plain = net->forward(x);
  torch::Tensor logits;
  const auto feats = tap_features(net, x, {"encoder_0", "decoder_2"}, &logits);
  EXPECT_TRUE(torch::equal(plain, logits));
  EXPECT_EQ(feats.size(), 2u);
  torch::Tensor none;
  EXPECT_TRUE(tap_features(net, x, {}, &none).empty());
  EXPECT_TRUE(torch::equal(plain, none));
  EXPECT_THROW(tap_features(net, x, {"encoder_9"}), std::invalid_argument);
}

class ZeroSkips : public ForwardObserver {
 public:
  torch::Tensor on_skip(int, torch::Tensor activation) override {
    ++calls;
    return torch::zeros_like(activation);
  }
  int calls = 0;
};

TEST(Pruning, ZeroingSkipsOnlyMattersWhenSkipsExist) {
  torch::NoGradGuard ng;
  const auto x = torch::rand({1, 3, 64, 64});
  SkipUNet l4 = build_model(make_spec(18, 4));
  l4->eval();
  ZeroSkips z4;
  EXPECT_TRUE(torch::equal(l4->forward(x), l4->forward(x, &z4)));
  EXPECT_EQ(z4.calls, 0);
  SkipUNet l0 = build_model(make_spec(18, 0));
  l0->eval();
  ZeroSkips z0;
  EXPECT_FALSE(torch::equal(l0->forward(x), l0->forward(x, &z0)));
  EXPECT_EQ(z0.calls, 4);
}

TEST(EncoderWeights, RoundTripLeavesDecoderUntouched) {
  TempDir dir("enc");
  torch::manual_seed(1);
  SkipUNet src = build_model(make_spec(18, 0));
  torch::manual_seed(2);
  SkipUNet dst = build_model(make_spec(18, 3));
  const auto head_before = dst->named_parameters()["segmentation_head.weight"].clone();
  save_encoder_weights(src, dir.path() / "enc.pt");
  load_encoder_weights(dst, dir.path() / "enc.pt");
  for (const auto& item : src->encoder()->named_parameters()) {
    EXPECT_TRUE(torch::equal(item.value(), dst->encoder()->named_parameters()[item.key()])) << item.key();
  }
  for (const auto& item : src->encoder()->named_buffers()) {
    EXPECT_TRUE(torch::equal(item.value(), dst->encoder()->named_buffers()[item.key()])) << item.key();
  }
  EXPECT_TRUE(torch::equal(head_before, dst->named_parameters()["segmentation_head.weight"]));
}

TEST(EncoderWeights, DepthMismatchIsRejectedWithoutSideEffects) {
  TempDir dir("enc34");
  SkipUNet r34 = build_model(make_spec(34, 0));
  save_encoder_weights(r34, dir.path() / "r34.pt");
  SkipUNet r18 = build_model(make_spec(18, 0));
  const auto before = r18->encoder()->named_parameters()["conv1.weight"].clone();
  EXPECT_THROW(load_encoder_weights(r18, dir.path() / "r34.pt"), WeightFileError);
  EXPECT_TRUE(torch::equal(before, r18->encoder()->named_parameters()["conv1.weight"]));
  EXPECT_THROW(load_encoder_weights(r18, dir.path() / "missing.pt"), WeightFileError);
}

TEST(Spec, ValidationAndJson) {
  EXPECT_THROW(build_model(make_spec(50, 0)), std::invalid_argument);
  EXPECT_THROW(build_model(make_spec(18, 5)), std::invalid_argument);
  auto s = make_spec(34, 2);
  s.decoder_channels = {128, 64, 32, 16, 8};
  EXPECT_EQ(PrunedUNetSpec::from_json(s.to_json()), s);
  EXPECT_EQ(s.name(), "resnet34_L2");
}

}  // namespace
}  // namespace skipshift
