#include "skipshift/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace skipshift {

RgbImage::RgbImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ImageError("negative image dimensions");
  data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ImageError("negative image dimensions");
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

std::size_t GrayImage::count_nonzero() const {
  return static_cast<std::size_t>(
      std::count_if(data_.begin(), data_.end(), [](std::uint8_t v) { return v != 0; }));
}

GrayImage to_grayscale(const RgbImage& image) {
  GrayImage gray(image.width(), image.height());
  const auto src = image.bytes();
  auto dst = gray.bytes();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = luma(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
  }
  return gray;
}

RgbImage crop(const RgbImage& image, const Rect& r) {
  if (r.width <= 0 || r.height <= 0 || r.x < 0 || r.y < 0 ||
      r.x + r.width > image.width() || r.y + r.height > image.height()) {
    throw ImageError("region (" + std::to_string(r.x) + ", " + std::to_string(r.y) + ", " +
                     std::to_string(r.width) + ", " + std::to_string(r.height) +
                     ") lies outside the " + std::to_string(image.width()) + "x" +
                     std::to_string(image.height()) + " image");
  }
  RgbImage out(r.width, r.height);
  for (int y = 0; y < r.height; ++y) {
    std::copy_n(image.pixel(r.x, r.y + y), 3 * r.width, out.pixel(0, y));
  }
  return out;
}

RgbImage rotate_quarter_turns(const RgbImage& image, int quarter_turns) {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  if (turns == 0) return image;
  const int w = image.width();
  const int h = image.height();
  const bool swap = turns % 2 == 1;
  RgbImage out(swap ? h : w, swap ? w : h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int ox = 0;
      int oy = 0;
      switch (turns) {
        case 1: ox = h - 1 - y; oy = x; break;
        case 2: ox = w - 1 - x; oy = h - 1 - y; break;
        default: ox = y; oy = w - 1 - x; break;
      }
      std::copy_n(image.pixel(x, y), 3, out.pixel(ox, oy));
    }
  }
  return out;
}

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> bilinear_taps(int src, int dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double pos = (i + 0.5) * scale - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(pos));
    taps[i] = {lo, std::min(lo + 1, src - 1), pos - lo};
  }
  return taps;
}

}  // namespace

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  if (image.empty() || width <= 0 || height <= 0) throw ImageError("invalid resize target");
  if (width == image.width() && height == image.height()) return image;
  const auto tx = bilinear_taps(image.width(), width);
  const auto ty = bilinear_taps(image.height(), height);
  RgbImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const auto& vy = ty[y];
    for (int x = 0; x < width; ++x) {
      const auto& vx = tx[x];
      const std::uint8_t* p00 = image.pixel(vx.lo, vy.lo);
      const std::uint8_t* p10 = image.pixel(vx.hi, vy.lo);
      const std::uint8_t* p01 = image.pixel(vx.lo, vy.hi);
      const std::uint8_t* p11 = image.pixel(vx.hi, vy.hi);
      std::uint8_t* o = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + (p10[c] - p00[c]) * vx.frac;
        const double bottom = p01[c] + (p11[c] - p01[c]) * vx.frac;
        const double v = top + (bottom - top) * vy.frac;
        o[c] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return out;
}

GrayImage resize_nearest(const GrayImage& image, int width, int height) {
  if (image.empty() || width <= 0 || height <= 0) throw ImageError("invalid resize target");
  if (width == image.width() && height == image.height()) return image;
  std::vector<int> sx(width);
  std::vector<int> sy(height);
  // (2i + 1) * src / (2 * dst), floored: the source pixel under the
  // destination pixel's center, in exact integer arithmetic.
  for (int x = 0; x < width; ++x) {
    sx[x] = static_cast<int>((2LL * x + 1) * image.width() / (2LL * width));
  }
  for (int y = 0; y < height; ++y) {
    sy[y] = static_cast<int>((2LL * y + 1) * image.height() / (2LL * height));
  }
  GrayImage out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.at(x, y) = image.at(sx[x], sy[y]);
  }
  return out;
}

std::optional<int> otsu_threshold(const GrayImage& gray) {
  std::array<double, 256> hist{};
  for (std::uint8_t v : gray.bytes()) hist[v] += 1.0;
  const double total = static_cast<double>(gray.pixel_count());
  double total_sum = 0.0;
  for (int v = 0; v < 256; ++v) total_sum += v * hist[v];

  std::optional<int> best;
  double best_var = 0.0;
  double w0 = 0.0;
  double sum0 = 0.0;
  for (int t = 1; t < 256; ++t) {
    w0 += hist[t - 1];
    sum0 += (t - 1) * hist[t - 1];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mean0 = sum0 / w0;
    const double mean1 = (total_sum - sum0) / w1;
    const double var = w0 * w1 * (mean0 - mean1) * (mean0 - mean1);
    if (var > best_var) {
      best_var = var;
      best = t;
    }
  }
  return best;
}

}  // namespace skipshift
