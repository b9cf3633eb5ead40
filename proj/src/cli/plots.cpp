#include "skipshift/plots.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace skipshift {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

// Sequential blue-to-yellow ramp for t in [0, 1].
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(68 + t * (253 - 68)));
  const int g = static_cast<int>(std::lround(1 + t * (231 - 1)));
  const int b = static_cast<int>(std::lround(84 + t * (37 - 84)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << std::fixed << v;
  return ss.str();
}

}  // namespace

std::string iou_heatmap_svg(const IoUMatrix& matrix, ShiftKind kind) {
  std::vector<std::size_t> cols;
  const std::string prefix = to_string(kind) + "_";
  for (std::size_t c = 0; c < matrix.columns.size(); ++c) {
    if (matrix.columns[c] == "original" || matrix.columns[c].starts_with(prefix)) cols.push_back(c);
  }
  const int cell_w = 90, cell_h = 32, left = 130, top = 60;
  const int width = left + cell_w * static_cast<int>(cols.size()) + 20;
  const int height = top + cell_h * static_cast<int>(matrix.rows.size()) + 40;

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<defs><pattern id=\"gap\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
       "<path d=\"M0,6 L6,0\" stroke=\"#999\"/></pattern></defs>\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left << "\" y=\"22\" font-size=\"15\">Cell IoU under " << to_string(kind)
    << " shift (mean over " << matrix.folds << " folds)</text>\n";
  for (std::size_t j = 0; j < cols.size(); ++j) {
    std::string label = matrix.columns[cols[j]];
    if (label != "original") label = label.substr(prefix.size());
    s << "<text x=\"" << left + cell_w * j + cell_w / 2 << "\" y=\"" << top - 8 << "\" text-anchor=\"middle\">"
      << escape(label) << "</text>\n";
  }
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    const int y = top + cell_h * static_cast<int>(i);
    s << "<text x=\"" << left - 8 << "\" y=\"" << y + cell_h / 2 + 4 << "\" text-anchor=\"end\">"
      << escape(matrix.rows[i]) << "</text>\n";
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto& cell = matrix.cells[i][cols[j]];
      const int x = left + cell_w * static_cast<int>(j);
      const bool ok = cell.complete();
      const double v = ok ? cell.mean() : 0.0;
      s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w << "\" height=\"" << cell_h
        << "\" fill=\"" << (ok ? ramp(v) : "url(#gap)") << "\" stroke=\"white\"/>\n";
      s << "<text x=\"" << x + cell_w / 2 << "\" y=\"" << y + cell_h / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
        << (ok && v > 0.55 ? "black" : (ok ? "white" : "black")) << "\">"
        << (ok ? fixed(v, 3) + " ± " + fixed(cell.stddev(), 2) : "n/a") << "</text>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<double> kernel_density(const std::vector<double>& values, const std::vector<double>& grid) {
  std::vector<double> out(grid.size(), 0.0);
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = values.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  const double h = std::max(1.06 * sd * std::pow(n, -0.2), 0.01);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (double v : values) {
      const double z = (grid[g] - v) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out[g] = acc * norm;
  }
  return out;
}

std::string layer_shift_svg(const std::vector<LayerShiftReport>& fold_reports, const std::string& title) {
  if (fold_reports.empty()) throw std::invalid_argument("no reports to plot");
  std::vector<std::string> taps;
  for (const auto& l : fold_reports.front().layers) taps.push_back(l.tap);
  const int slot = 80, left = 60, top = 40, plot_h = 300;
  const int width = left + slot * static_cast<int>(taps.size()) + 20;
  const int height = top + plot_h + 60;
  auto ypos = [&](double d) { return top + plot_h * (1.0 - std::clamp(d, 0.0, 1.0)); };

  std::vector<double> grid(101);
  for (int i = 0; i <= 100; ++i) grid[i] = i / 100.0;

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << left << "\" y=\"22\" font-size=\"15\">Layer-wise Hellinger distance: " << escape(title)
    << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    s << "<line x1=\"" << left << "\" x2=\"" << width - 20 << "\" y1=\"" << ypos(v) << "\" y2=\"" << ypos(v)
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << ypos(v) + 4 << "\" text-anchor=\"end\">" << fixed(v, 2)
      << "</text>\n";
  }
  std::vector<std::pair<double, double>> means;
  for (std::size_t t = 0; t < taps.size(); ++t) {
    std::vector<double> pooled;
    double mean = 0.0;
    for (const auto& r : fold_reports) {
      const auto& l = r.layer(taps[t]);
      pooled.insert(pooled.end(), l.distances.begin(), l.distances.end());
      mean += l.mean();
    }
    mean /= static_cast<double>(fold_reports.size());
    const auto density = kernel_density(pooled, grid);
    const double peak = std::max(1e-12, *std::max_element(density.begin(), density.end()));
    const double cx = left + slot * (t + 0.5);
    const double half = slot * 0.42;
    std::ostringstream path;
    path << "M" << cx << "," << ypos(grid.front());
    for (std::size_t g = 0; g < grid.size(); ++g) path << " L" << cx + half * density[g] / peak << "," << ypos(grid[g]);
    for (std::size_t g = grid.size(); g-- > 0;) path << " L" << cx - half * density[g] / peak << "," << ypos(grid[g]);
    path << " Z";
    s << "<path d=\"" << path.str() << "\" fill=\"#8fb3d9\" fill-opacity=\"0.7\" stroke=\"#3b6ea5\"/>\n";
    s << "<text x=\"" << cx << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">" << escape(taps[t])
      << "</text>\n";
    means.emplace_back(cx, ypos(mean));
  }
  std::ostringstream line;
  for (std::size_t i = 0; i < means.size(); ++i) line << (i == 0 ? "" : " ") << means[i].first << "," << means[i].second;
  s << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
  for (const auto& [x, y] : means) s << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"#c0392b\"/>\n";
  s << "<text x=\"" << left << "\" y=\"" << height - 12 << "\">violin: per-dimension distances, all folds; "
    << "line: layer mean over " << fold_reports.size() << " fold(s)</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace skipshift
