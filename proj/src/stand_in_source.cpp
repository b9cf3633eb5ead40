#include "skipshift/stand_in_source.hpp"

#include <algorithm>
#include <cmath>

#include "skipshift/rng.hpp"

namespace skipshift {

namespace {

constexpr int kWidth = 1600;
constexpr int kHeight = 1200;

struct Disc {
  double cx;
  double cy;
  double radius;
  double squash;  // vertical axis scale
};

// Box-Muller on the deterministic stream.
double gaussian(Rng& rng) {
  const double u1 = std::max(rng.uniform01(), 1e-300);
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void set_pixel(RgbImage& img, int x, int y, const double (&rgb)[3], Rng& rng, double noise) {
  std::uint8_t* p = img.pixel(x, y);
  for (int c = 0; c < 3; ++c) {
    p[c] = static_cast<std::uint8_t>(std::clamp(std::round(rgb[c] + noise * gaussian(rng)), 0.0, 255.0));
  }
}

void draw_cell(RgbImage& img, const Disc& d, Rng& rng, bool parasite) {
  const double fill[3] = {205.0, 140.0, 160.0};
  const double rim[3] = {178.0, 108.0, 134.0};
  const double spot[3] = {118.0, 58.0, 138.0};
  const int r = static_cast<int>(std::ceil(d.radius)) + 1;
  for (int y = static_cast<int>(d.cy) - r; y <= static_cast<int>(d.cy) + r; ++y) {
    for (int x = static_cast<int>(d.cx) - r; x <= static_cast<int>(d.cx) + r; ++x) {
      if (x < 0 || y < 0 || x >= kWidth || y >= kHeight) continue;
      const double dx = x - d.cx;
      const double dy = (y - d.cy) / d.squash;
      const double dist = std::sqrt(dx * dx + dy * dy);
      if (dist >= d.radius) continue;
      if (parasite && std::hypot(x - (d.cx + 6.0), y - (d.cy - 8.0)) < 8.0) {
        set_pixel(img, x, y, spot, rng, 3.0);
      } else if (dist > d.radius - 5.0) {
        set_pixel(img, x, y, rim, rng, 3.0);
      } else {
        // Central pallor of a biconcave disc.
        const double pallor = 12.0 * std::exp(-(dist * dist) / (0.18 * d.radius * d.radius));
        const double c[3] = {fill[0] + pallor, fill[1] + pallor, fill[2] + pallor};
        set_pixel(img, x, y, c, rng, 3.0);
      }
    }
  }
}

void draw_debris(RgbImage& img, double cx, double cy, double radius, Rng& rng) {
  const double col[3] = {148.0, 88.0, 168.0};
  const Disc lobes[3] = {{cx, cy, radius, 1.0},
                         {cx + 0.7 * radius, cy + 0.4 * radius, 0.7 * radius, 1.0},
                         {cx - 0.5 * radius, cy + 0.6 * radius, 0.5 * radius, 1.0}};
  const int r = static_cast<int>(2 * radius) + 2;
  for (int y = static_cast<int>(cy) - r; y <= static_cast<int>(cy) + r; ++y) {
    for (int x = static_cast<int>(cx) - r; x <= static_cast<int>(cx) + r; ++x) {
      bool inside = false;
      for (const auto& l : lobes) inside |= std::hypot(x - l.cx, y - l.cy) < l.radius;
      if (inside) set_pixel(img, x, y, col, rng, 4.0);
    }
  }
}

}  // namespace

RgbImage render_stand_in_source(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x50u));
  RgbImage img(kWidth, kHeight);
  for (int y = 0; y < kHeight; ++y) {
    for (int x = 0; x < kWidth; ++x) {
      const double base[3] = {232.0 + 6.0 * std::sin(x / 90.0) + 4.0 * std::cos(y / 70.0),
                              210.0 + 5.0 * std::sin(y / 80.0),
                              220.0 + 5.0 * std::cos((x + y) / 120.0)};
      set_pixel(img, x, y, base, rng, 3.0);
    }
  }

  // Template cells along the top row; cell 1 carries a parasite.
  const Disc cells[3] = {{800, 200, 44, 0.92}, {1050, 200, 48, 0.92}, {1300, 200, 40, 0.95}};
  for (int i = 0; i < 3; ++i) draw_cell(img, cells[i], rng, i == 1);
  const double debris[3][2] = {{800, 700}, {1000, 700}, {1200, 700}};
  const double debris_radius[3] = {14, 18, 12};
  for (int i = 0; i < 3; ++i) draw_debris(img, debris[i][0], debris[i][1], debris_radius[i], rng);

  // Unused scenery in the lower part of the frame, away from the template regions.
  for (int i = 0; i < 12; ++i) {
    const Disc d{650.0 + 80.0 * i, 980.0 + 60.0 * std::sin(i * 1.3), 38.0 + (i % 4) * 3.0, 0.93};
    draw_cell(img, d, rng, i % 5 == 0);
  }
  return img;
}

std::array<Rect, 7> stand_in_regions() {
  return {Rect{50, 50, 500, 500},   Rect{740, 140, 120, 120}, Rect{990, 140, 120, 120},
          Rect{1240, 140, 120, 120}, Rect{765, 665, 70, 70},  Rect{960, 660, 80, 80},
          Rect{1170, 670, 60, 60}};
}

}  // namespace skipshift
