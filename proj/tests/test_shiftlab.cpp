#include <gtest/gtest.h>

#include <cmath>

#include "skipshift/shiftlab.hpp"
#include "support.hpp"

namespace skipshift {
namespace {

using testing::random_image;

std::uint8_t clip(double v) { return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, std::round(v)))); }

// Luma with exact integer weights (parts per thousand), half-up.
int oracle_luma(int r, int g, int b) { return (299 * r + 587 * g + 114 * b + 500) / 1000; }

RgbImage solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto* p = img.pixel(x, y);
      p[0] = r;
      p[1] = g;
      p[2] = b;
    }
  }
  return img;
}

TEST(Brightness, WorkedExamples) {
  EXPECT_EQ(apply_brightness(solid(2, 2, 100, 100, 100), 0.5).pixel(0, 0)[0], 50);
  EXPECT_EQ(apply_brightness(solid(2, 2, 200, 200, 200), 1.75).pixel(1, 1)[2], 255);
}

TEST(Contrast, WorkedExample) {
  // mean luma 100, factor 1.5: 200 * 1.5 + 100 * (1 - 1.5) = 250
  EXPECT_EQ(contrast_lut(1.5, 100.0)[200], 250);
  RgbImage img = solid(2, 1, 200, 200, 200);
  std::fill_n(img.pixel(1, 0), 3, 0);
  const RgbImage out = apply_contrast(img, 1.5);
  EXPECT_EQ(out.pixel(0, 0)[0], 250);
  EXPECT_EQ(out.pixel(1, 0)[0], 0);  // -50 clips
}

TEST(Saturation, WorkedExampleUsesBt601Luma) {
  // luma(200,100,0) = 119.3 -> 119; 0.5 * x + 0.5 * 119 rounds half-up.
  const RgbImage out = apply_saturation(solid(1, 1, 200, 100, 0), 0.5);
  EXPECT_EQ(out.pixel(0, 0)[0], 160);
  EXPECT_EQ(out.pixel(0, 0)[1], 110);
  EXPECT_EQ(out.pixel(0, 0)[2], 60);
  const RgbImage gray = apply_saturation(solid(1, 1, 200, 100, 0), 0.0);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(gray.pixel(0, 0)[c], 119);
}

class ShiftProperties : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> side(1, 40);
    for (int i = 0; i < 100; ++i) images_.push_back(random_image(gen, side(gen), side(gen)));
  }
  std::vector<RgbImage> images_;
};

TEST_F(ShiftProperties, FactorOneIsIdentity) {
  for (const auto& img : images_) {
    EXPECT_EQ(apply_brightness(img, 1.0), img);
    EXPECT_EQ(apply_contrast(img, 1.0), img);
    EXPECT_EQ(apply_saturation(img, 1.0), img);
  }
}

TEST_F(ShiftProperties, BrightnessMatchesPerPixelOracle) {
  for (double f : {0.5, 0.75, 1.25, 1.5, 1.75}) {
    for (const auto& img : images_) {
      const RgbImage out = apply_brightness(img, f);
      for (std::size_t i = 0; i < img.bytes().size(); ++i) {
        ASSERT_EQ(out.bytes()[i], clip(f * img.bytes()[i]));
      }
    }
  }
}

TEST_F(ShiftProperties, ContrastMatchesOracleAndKeepsMeanFixed) {
  for (double f : {0.5, 0.75, 1.25, 1.5, 1.75}) {
    for (const auto& img : images_) {
      double sum = 0.0;
      for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
          const auto* p = img.pixel(x, y);
          sum += oracle_luma(p[0], p[1], p[2]);
        }
      }
      const double mean = sum / static_cast<double>(img.pixel_count());
      EXPECT_NEAR(mean_luma(img), mean, 1e-9);
      const RgbImage out = apply_contrast(img, f);
      for (std::size_t i = 0; i < img.bytes().size(); ++i) {
        ASSERT_EQ(out.bytes()[i], clip(img.bytes()[i] * f + mean * (1.0 - f)));
      }
    }
  }
  for (double f : {0.5, 1.5}) {
    for (int m = 0; m < 256; ++m) EXPECT_EQ(contrast_lut(f, m)[m], m);
  }
}

TEST_F(ShiftProperties, SaturationMatchesOracleAndZeroIsGray) {
  for (double f : {0.0, 0.25, 0.5, 0.75}) {
    for (const auto& img : images_) {
      const RgbImage out = apply_saturation(img, f);
      for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
          const auto* p = img.pixel(x, y);
          const int g = oracle_luma(p[0], p[1], p[2]);
          for (int c = 0; c < 3; ++c) ASSERT_EQ(out.pixel(x, y)[c], clip(f * p[c] + (1.0 - f) * g));
          if (f == 0.0) {
            ASSERT_EQ(out.pixel(x, y)[0], out.pixel(x, y)[1]);
            ASSERT_EQ(out.pixel(x, y)[1], out.pixel(x, y)[2]);
          }
        }
      }
      if (f == 0.0) {
        for (double s : {0.0, 0.3, 0.9}) EXPECT_EQ(apply_saturation(out, s), out);
      }
    }
  }
}

TEST_F(ShiftProperties, BrightnessIsMonotoneInFactor) {
  for (const auto& img : images_) {
    const RgbImage lo = apply_brightness(img, 0.75);
    const RgbImage hi = apply_brightness(img, 1.25);
    for (std::size_t i = 0; i < img.bytes().size(); ++i) {
      ASSERT_LE(lo.bytes()[i], img.bytes()[i]);
      ASSERT_GE(hi.bytes()[i], img.bytes()[i]);
    }
  }
}

TEST_F(ShiftProperties, SerialAndParallelAreBitIdentical) {
  for (const auto& img : images_) {
    for (const auto& spec : SweepGrid{}.specs()) {
      EXPECT_EQ(apply(spec, img, Execution::serial), apply(spec, img, Execution::parallel)) << spec.label();
    }
  }
  std::mt19937_64 gen(12);
  const RgbImage big = random_image(gen, 700, 500);
  EXPECT_EQ(kernels::serial::luma_sum(big.bytes()), kernels::omp::luma_sum(big.bytes()));
  EXPECT_EQ(apply_saturation(big, 0.25, Execution::serial), apply_saturation(big, 0.25, Execution::parallel));
}

TEST(ShiftSpecs, RejectsUnknownKindsAndOutOfRangeFactors) {
  EXPECT_THROW(parse_shift_kind("hue"), std::invalid_argument);
  EXPECT_EQ(parse_shift_kind("contrast"), ShiftKind::contrast);
  const RgbImage img = solid(2, 2, 1, 2, 3);
  EXPECT_THROW(apply_brightness(img, 0.0), std::invalid_argument);
  EXPECT_THROW(apply_contrast(img, -1.0), std::invalid_argument);
  EXPECT_THROW(apply_saturation(img, 1.5), std::invalid_argument);
  EXPECT_THROW(apply_saturation(img, -0.1), std::invalid_argument);
  EXPECT_THROW(ShiftSpec::from_json({{"kind", "gamma"}, {"factor", 1.0}}), std::exception);
}

TEST(ShiftSpecs, GridOrderAndLabels) {
  const auto specs = SweepGrid{}.specs();
  ASSERT_EQ(specs.size(), 14u);
  EXPECT_EQ(specs.front().label(), "brightness_0.5");
  EXPECT_EQ(specs[5].label(), "contrast_0.5");
  EXPECT_EQ(specs.back().label(), "saturation_0.75");
  EXPECT_EQ(ShiftSpec::from_json(specs[3].to_json()), specs[3]);
  SweepGrid bad;
  bad.brightness = {1.5, 0.5};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad.brightness = {2.0};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace skipshift
