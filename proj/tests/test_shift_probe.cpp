#include <gtest/gtest.h>

#include <cmath>

#include "skipshift/shift_probe.hpp"
#include "skipshift/trainer.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace skipshift {
namespace {

using testing::random_image;
using testing::TempDir;
using testing::naive_layer_distances;
using testing::stack_images;

class ProbeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    torch::manual_seed(17);
    net_ = build_model(PrunedUNetSpec{});
    std::mt19937_64 gen(18);
    for (int i = 0; i < 4; ++i) images_.push_back(random_image(gen, 64, 64));
  }
  SkipUNet net_{nullptr};
  std::vector<RgbImage> images_;
};

TEST_F(ProbeTest, StreamingProbeMatchesNaiveOracle) {
  const std::vector<std::string> taps{"encoder_0", "decoder_1"};
  const ShiftSpec shift{ShiftKind::brightness, 0.75};
  const auto report = probe(net_, taps, images_, shift, 4, 4);

  std::vector<RgbImage> shifted;
  for (const auto& img : images_) shifted.push_back(apply_brightness(img, 0.75));
  torch::NoGradGuard ng;
  net_->eval();
  const auto ref_maps = tap_features(net_, stack_images(images_), taps);
  const auto shift_maps = tap_features(net_, stack_images(shifted), taps);
  ASSERT_EQ(report.layers.size(), 2u);
  for (const auto& layer : report.layers) {
    const auto expected = naive_layer_distances(ref_maps.at(layer.tap), shift_maps.at(layer.tap), 64, 4);
    ASSERT_EQ(layer.distances.size(), expected.size());
    for (std::size_t d = 0; d < expected.size(); ++d) {
      EXPECT_NEAR(layer.distances[d], expected[d], 1e-12) << layer.tap << " dim " << d;
    }
  }
  EXPECT_EQ(report.shift, "brightness_0.75");
  EXPECT_EQ(report.images, 4);
}

TEST_F(ProbeTest, IdentityShiftGivesExactZeroEverywhere) {
  std::vector<std::string> taps;
  for (const auto& t : tap_points(net_->spec())) taps.push_back(t.name);
  const auto report = probe(net_, taps, images_, {ShiftKind::contrast, 1.0}, 100, 3);
  ASSERT_EQ(report.layers.size(), 9u);
  for (const auto& layer : report.layers) {
    for (double d : layer.distances) ASSERT_EQ(d, 0.0) << layer.tap;
    EXPECT_EQ(layer.mean(), 0.0);
  }
}

TEST_F(ProbeTest, DistancesAreSymmetricAndBounded) {
  const std::vector<std::string> taps{"encoder_2", "encoder_4"};
  std::vector<RgbImage> shifted;
  for (const auto& img : images_) shifted.push_back(apply_saturation(img, 0.25));
  const auto a = collect_features(net_, images_, taps);
  const auto b = collect_features(net_, shifted, taps);
  const auto ab = compare_features(a, b, 20);
  const auto ba = compare_features(b, a, 20);
  for (std::size_t t = 0; t < ab.size(); ++t) {
    EXPECT_EQ(ab[t].distances, ba[t].distances);
    for (double d : ab[t].distances) {
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, 1.0);
    }
  }
  EXPECT_EQ(a.at("encoder_2").rows(), 4u * 4u);
  EXPECT_EQ(a.at("encoder_2").dims, 128);
}

TEST_F(ProbeTest, FeatureDumpRoundTripsAndReproducesDistances) {
  TempDir dir("features");
  const std::vector<std::string> taps{"encoder_1", "decoder_0"};
  std::vector<RgbImage> shifted;
  for (const auto& img : images_) shifted.push_back(apply_contrast(img, 1.5));
  const auto a = collect_features(net_, images_, taps, 2);
  const auto b = collect_features(net_, shifted, taps, 2);
  write_feature_set(dir.path() / "ref", a);
  write_feature_set(dir.path() / "shift", b);
  const auto ra = read_feature_set(dir.path() / "ref");
  const auto rb = read_feature_set(dir.path() / "shift");
  EXPECT_EQ(ra.taps, taps);
  EXPECT_EQ(ra.images, 4);
  EXPECT_EQ(ra.image_side, 64);
  EXPECT_EQ(ra.at("encoder_1").values, a.at("encoder_1").values);
  const auto direct = compare_features(a, b, 100);
  const auto reread = compare_features(ra, rb, 100);
  for (std::size_t t = 0; t < direct.size(); ++t) EXPECT_EQ(direct[t].distances, reread[t].distances);
  std::filesystem::remove(dir.path() / "ref" / "features.json");
  EXPECT_EQ(read_feature_set(dir.path() / "ref").taps.size(), 2u);
}

TEST_F(ProbeTest, MismatchedSetsAndBadInputsAreRejected) {
  const auto a = collect_features(net_, images_, {"encoder_0"});
  const auto b = collect_features(net_, images_, {"encoder_1"});
  EXPECT_THROW(compare_features(a, b, 10), std::invalid_argument);
  std::vector<RgbImage> odd{RgbImage(64, 32)};
  EXPECT_THROW(collect_features(net_, odd, {"encoder_0"}), ShapeError);
  EXPECT_THROW(collect_features(net_, images_, {"encoder_7"}), std::invalid_argument);
  EXPECT_THROW(collect_features(net_, {}, {"encoder_0"}), std::invalid_argument);
}

TEST(Reports, JsonRoundTripAndFoldAggregation) {
  LayerShiftReport r;
  r.shift = "brightness_0.75";
  r.bins = 100;
  r.images = 10;
  r.model = "resnet18_L0";
  r.fold = 0;
  r.layers = {{"encoder_0", {0.2, 0.4}, 0, false}, {"encoder_4", {0.1, 0.1}, 1, false}};
  const auto back = LayerShiftReport::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_NEAR(r.layer("encoder_0").mean(), 0.3, 1e-15);
  EXPECT_NE(r.means_csv().find("encoder_4,2,"), std::string::npos);

  auto r2 = r;
  r2.fold = 1;
  r2.layers[0].distances = {0.5, 0.5};
  const auto agg = aggregate_folds({r, r2});
  EXPECT_NEAR(agg.mean("encoder_0"), 0.4, 1e-15);
  EXPECT_NEAR(agg.mean("encoder_4"), 0.1, 1e-15);
  EXPECT_THROW(agg.mean("decoder_0"), std::out_of_range);
}

}  // namespace
}  // namespace skipshift
