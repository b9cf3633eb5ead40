#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance binary. Deliberately naive: no kernels from the library.

#include <algorithm>
#include <cmath>
#include <vector>

#include <torch/torch.h>

#include "skipshift/image.hpp"
#include "skipshift/synth_data.hpp"
#include "skipshift/trainer.hpp"

namespace skipshift::testing {

// Materializes every pooled activation as doubles, then bins each dimension
// over its joint range with literal edges and applies the definition.
inline std::vector<double> naive_layer_distances(const torch::Tensor& ref_maps, const torch::Tensor& shift_maps,
                                          int image_side, int bins) {
  const int grid = image_side / 32;
  const auto pool = [&](const torch::Tensor& maps) {
    const auto a = maps.to(torch::kFloat32).contiguous();
    const int n = static_cast<int>(a.size(0)), d = static_cast<int>(a.size(1)), h = static_cast<int>(a.size(2));
    const int k = h / grid;
    const float* p = a.data_ptr<float>();
    // values[dim] = every pooled cell of every image.
    std::vector<std::vector<double>> values(d);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) {
        for (int gy = 0; gy < grid; ++gy) {
          for (int gx = 0; gx < grid; ++gx) {
            double s = 0.0;
            for (int y = gy * k; y < gy * k + k; ++y) {
              for (int x = gx * k; x < gx * k + k; ++x) s += p[((i * d + c) * h + y) * h + x];
            }
            values[c].push_back(static_cast<float>(s / (k * k)));
          }
        }
      }
    }
    return values;
  };
  const auto ref = pool(ref_maps);
  const auto sh = pool(shift_maps);
  std::vector<double> out;
  for (std::size_t c = 0; c < ref.size(); ++c) {
    double lo = ref[c][0], hi = ref[c][0];
    for (const auto* v : {&ref[c], &sh[c]}) {
      for (double x : *v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
    if (hi == lo) {
      out.push_back(0.0);
      continue;
    }
    const auto histogram = [&](const std::vector<double>& v) {
      std::vector<double> h(bins, 0.0);
      for (double x : v) {
        int b = bins - 1;
        for (int j = 0; j < bins - 1; ++j) {
          if (x < (static_cast<double>(j + 1) / bins) * (hi - lo) + lo) {
            b = j;
            break;
          }
        }
        h[b] += 1.0 / static_cast<double>(v.size());
      }
      return h;
    };
    const auto p = histogram(ref[c]);
    const auto q = histogram(sh[c]);
    double bc = 0.0;
    for (int b = 0; b < bins; ++b) bc += std::sqrt(p[b] * q[b]);
    out.push_back(std::sqrt(std::max(0.0, 1.0 - bc)));
  }
  return out;
}

inline torch::Tensor stack_images(const std::vector<RgbImage>& images) {
  std::vector<torch::Tensor> t;
  for (const auto& img : images) t.push_back(image_to_tensor(img));
  return torch::stack(t);
}

// Rasterizes the cell placements into an empty mask, pixel by pixel.
inline GrayImage replay_mask(const TemplateSet& t, const std::vector<Placement>& cells, int canvas) {
  GrayImage m(canvas, canvas);
  for (const auto& p : cells) {
    const GrayImage& fg = t.cells.at(p.template_index).mask;
    for (int y = 0; y < fg.height(); ++y) {
      for (int x = 0; x < fg.width(); ++x) {
        if (fg.at(x, y) != 0) m.at(p.x + x, p.y + y) = 1;
      }
    }
  }
  return m;
}

// Nearest sampling at destination pixel centres: src = floor((x + 0.5) * S / D).
inline GrayImage downscale_nearest(const GrayImage& full, int size) {
  GrayImage out(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const int sx = static_cast<int>(std::floor((x + 0.5) * full.width() / size));
      const int sy = static_cast<int>(std::floor((y + 0.5) * full.height() / size));
      out.at(x, y) = full.at(sx, sy);
    }
  }
  return out;
}

}  // namespace skipshift::testing
