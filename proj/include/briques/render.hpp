#pragma once
/**
 * @file render.hpp
 * @brief PGM and SVG pictures of destruction orders, trajectories and point clouds.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "briques/frontier.hpp"
#include "briques/geometry.hpp"
#include "briques/rational.hpp"

namespace briques {

struct CellBox {
  std::int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  std::int64_t width() const { return x1 - x0 + 1; }
  std::int64_t height() const { return y1 - y0 + 1; }
};

inline CellBox bounding_box(const std::vector<CellIndex>& cells, std::int64_t margin = 1) {
  CellBox b;
  if (cells.empty()) return b;
  b.x0 = b.x1 = cells.front().z1;
  b.y0 = b.y1 = cells.front().z2;
  for (const auto& c : cells) {
    b.x0 = std::min(b.x0, c.z1);
    b.x1 = std::max(b.x1, c.z1);
    b.y0 = std::min(b.y0, c.z2);
    b.y1 = std::max(b.y1, c.z2);
  }
  b.x0 = std::min<std::int64_t>(b.x0, 0) - margin;
  b.y0 = std::min<std::int64_t>(b.y0, 0) - margin;
  b.x1 = std::max<std::int64_t>(b.x1, 0) + margin;
  b.y1 = std::max<std::int64_t>(b.y1, 0) + margin;
  return b;
}

/**
 * Binary PGM, one pixel per cell: intact bricks white, destroyed cells from
 * black (first hit) to light gray (last hit), the starting cell mid gray.
 * Pictures larger than max_side pixels are downsampled by keeping the
 * earliest hit of each block.
 */
inline void write_pgm(std::ostream& os, const std::vector<CellIndex>& cells, std::int64_t max_side = 2048) {
  const CellBox box = bounding_box(cells);
  const std::int64_t side = std::max(box.width(), box.height());
  const std::int64_t block = std::max<std::int64_t>(1, (side + max_side - 1) / max_side);
  const std::int64_t w = (box.width() + block - 1) / block;
  const std::int64_t h = (box.height() + block - 1) / block;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w * h), 255);
  const double n = std::max<double>(1.0, static_cast<double>(cells.size()) - 1.0);
  auto put = [&](const CellIndex& c, std::uint8_t v, bool keep_first) {
    const std::int64_t col = (c.z1 - box.x0) / block;
    const std::int64_t row = (box.y1 - c.z2) / block;
    auto& p = px[static_cast<std::size_t>(row * w + col)];
    if (!keep_first || p == 255) p = v;
  };
  for (std::size_t i = 0; i < cells.size(); ++i) put(cells[i], static_cast<std::uint8_t>(200.0 * static_cast<double>(i) / n), true);
  put({0, 0}, 128, false);
  os << "P5\n" << w << ' ' << h << "\n255\n";
  os.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

/// Blue to red through green, t in [0,1].
inline std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double hue = 240.0 * (1.0 - t);
  const double x = 1.0 - std::abs(std::fmod(hue / 60.0, 2.0) - 1.0);
  double r = 0, g = 0, b = 0;
  if (hue < 60) {
    r = 1, g = x;
  } else if (hue < 120) {
    r = x, g = 1;
  } else if (hue < 180) {
    g = 1, b = x;
  } else {
    g = x, b = 1;
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(r * 255), static_cast<int>(g * 255),
                static_cast<int>(b * 255));
  return buf;
}

struct SvgOptions {
  double cell_px = 12;
  /// Draw hit numbers inside cells when the picture is small enough.
  bool label_hits = false;
  /// Stroke width of the first and last trajectory segments.
  double stroke_start = 2.0;
  double stroke_end = 0.2;
  /// Strip drawn with walls at 0 and K and a base at -h (K = 0: plane).
  int strip_K = 0;
  double strip_h = 0;
};

/**
 * Destroyed cells colored by destruction order and, optionally, the path of
 * the ball drawn with a stroke that thins over time.
 */
inline void write_svg(std::ostream& os, const std::vector<CellIndex>& cells,
                      const std::vector<std::pair<double, double>>& path = {}, const SvgOptions& opt = {}) {
  CellBox box = bounding_box(cells);
  for (const auto& [x, y] : path) {
    box.x0 = std::min<std::int64_t>(box.x0, static_cast<std::int64_t>(std::floor(x)) - 1);
    box.x1 = std::max<std::int64_t>(box.x1, static_cast<std::int64_t>(std::floor(x)) + 1);
    box.y0 = std::min<std::int64_t>(box.y0, static_cast<std::int64_t>(std::floor(y)) - 1);
    box.y1 = std::max<std::int64_t>(box.y1, static_cast<std::int64_t>(std::floor(y)) + 1);
  }
  const double s = opt.cell_px;
  auto X = [&](double x) { return (x - static_cast<double>(box.x0)) * s; };
  auto Y = [&](double y) { return (static_cast<double>(box.y1) + 1 - y) * s; };
  const double W = static_cast<double>(box.width()) * s, H = static_cast<double>(box.height()) * s;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#d9d9d9\"/>\n";
  const double n = std::max<double>(1.0, static_cast<double>(cells.size()) - 1.0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    os << "<rect x=\"" << X(static_cast<double>(c.z1)) << "\" y=\"" << Y(static_cast<double>(c.z2 + 1)) << "\" width=\""
       << s << "\" height=\"" << s << "\" fill=\"" << ramp_color(static_cast<double>(i) / n) << "\"/>\n";
    if (opt.label_hits) {
      os << "<text x=\"" << X(c.z1 + 0.5) << "\" y=\"" << Y(c.z2 + 0.35) << "\" font-size=\"" << s * 0.4
         << "\" text-anchor=\"middle\">" << i << "</text>\n";
    }
  }
  os << "<rect x=\"" << X(0) << "\" y=\"" << Y(1) << "\" width=\"" << s << "\" height=\"" << s
     << "\" fill=\"white\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
  if (opt.strip_K > 0) {
    os << "<path d=\"M" << X(0) << ' ' << 0 << " V" << Y(-opt.strip_h) << " H" << X(opt.strip_K) << " V0\" fill=\"none\" "
       << "stroke=\"black\" stroke-width=\"1.5\"/>\n";
  }
  if (path.size() > 1) {
    const double segs = static_cast<double>(path.size() - 1);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      const double t = segs > 1 ? static_cast<double>(i) / (segs - 1) : 0.0;
      const double w = opt.stroke_start + (opt.stroke_end - opt.stroke_start) * t;
      os << "<line x1=\"" << X(path[i].first) << "\" y1=\"" << Y(path[i].second) << "\" x2=\"" << X(path[i + 1].first)
         << "\" y2=\"" << Y(path[i + 1].second) << "\" stroke=\"black\" stroke-width=\"" << w << "\"/>\n";
    }
  }
  os << "</svg>\n";
}

/// Point cloud on [0,1]^2, one panel per frontier row.
template <class Num>
void write_cloud_svg(std::ostream& os, const std::vector<CloudPoint<Num>>& cloud, int K, double panel_px = 300) {
  const std::uint32_t panels = (1u << K) - 1u;
  const double gap = 20;
  const double W = panels * panel_px + (panels + 1) * gap, H = panel_px + 2 * gap + 16;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::uint32_t p = 0; p < panels; ++p) {
    const double x0 = gap + p * (panel_px + gap);
    Frontier f{K, Frontier::full(K).mask - p};
    os << "<rect x=\"" << x0 << "\" y=\"" << gap << "\" width=\"" << panel_px << "\" height=\"" << panel_px
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << x0 << "\" y=\"" << H - 6 << "\" font-size=\"12\">xi = ";
    for (int i = 0; i < K; ++i) os << (f.test(i) ? 1 : 0);
    os << " (x horizontal, h vertical)</text>\n";
  }
  for (const auto& c : cloud) {
    const double x0 = gap + c.point.xi.index() * (panel_px + gap);
    os << "<circle cx=\"" << x0 + to_double(c.point.x) * panel_px << "\" cy=\""
       << gap + (1 - to_double(c.point.h)) * panel_px << "\" r=\"0.8\" fill=\"black\"/>\n";
  }
  os << "</svg>\n";
}

}  // namespace briques
