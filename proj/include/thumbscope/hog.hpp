#pragma once

// Histogram-of-oriented-gradients statistics: self-similarity, complexity,
// anisotropy.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "thumbscope/error.hpp"
#include "thumbscope/image.hpp"

namespace thumbscope {

inline constexpr int kHogCells = 8;
inline constexpr int kHogBins = 16;

// Per-pixel gradient strength and orientation in degrees, [0,180).
// Orientation is 0 wherever magnitude is 0.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> magnitude;
  std::vector<double> orientation;
};

namespace detail {

// Central differences inside, one-sided at the borders.
inline void plane_gradient(const PlaneImage& p, int x, int y, double& gx, double& gy) {
  if (x == 0)
    gx = p.at(1, y) - p.at(0, y);
  else if (x == p.width - 1)
    gx = p.at(x, y) - p.at(x - 1, y);
  else
    gx = 0.5 * (p.at(x + 1, y) - p.at(x - 1, y));
  if (y == 0)
    gy = p.at(x, 1) - p.at(x, 0);
  else if (y == p.height - 1)
    gy = p.at(x, y) - p.at(x, y - 1);
  else
    gy = 0.5 * (p.at(x, y + 1) - p.at(x, y - 1));
}

inline double fold_orientation(double gx, double gy) {
  double deg = std::atan2(gy, gx) * (180.0 / std::numbers::pi);
  if (deg < 0.0) deg += 180.0;
  if (deg >= 180.0) deg -= 180.0;
  return deg;
}

}  // namespace detail

// The strongest of the three channel gradients supplies (g, theta) per pixel.
inline GradientField gradient_field(const LabPlanes& lab) {
  const int w = lab.l.width, h = lab.l.height;
  if (w < 3 || h < 3) throw ImageSizeError("gradient field needs at least 3x3 pixels");
  GradientField f{w, h, std::vector<double>(static_cast<std::size_t>(w) * h),
                  std::vector<double>(static_cast<std::size_t>(w) * h)};
  const PlaneImage* planes[3] = {&lab.l, &lab.a, &lab.b};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double best = -1.0, bx = 0.0, by = 0.0;
      for (const PlaneImage* p : planes) {
        double gx, gy;
        detail::plane_gradient(*p, x, y, gx, gy);
        const double m2 = gx * gx + gy * gy;
        if (m2 > best) best = m2, bx = gx, by = gy;
      }
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      f.magnitude[i] = std::sqrt(best);
      f.orientation[i] = f.magnitude[i] > 0.0 ? detail::fold_orientation(bx, by) : 0.0;
    }
  return f;
}

inline GradientField gradient_field(const ImageBuffer& img) {
  if (img.width() < 3 || img.height() < 3) throw ImageSizeError("gradient field needs at least 3x3 pixels");
  return gradient_field(to_lab(img));
}

inline int orientation_bin(double degrees, int bins = kHogBins) {
  const int b = static_cast<int>(degrees * bins / 180.0);
  return std::clamp(b, 0, bins - 1);
}

// Grid of per-cell orientation histograms of accumulated gradient magnitude.
struct CellHistogramGrid {
  int rows = 0;
  int cols = 0;
  int bins = 0;
  std::vector<double> values;  // (row, col, bin) row-major

  double* cell(int r, int c) { return values.data() + (static_cast<std::size_t>(r) * cols + c) * bins; }
  const double* cell(int r, int c) const {
    return values.data() + (static_cast<std::size_t>(r) * cols + c) * bins;
  }
};

// Hard binning: every pixel votes its full magnitude into one bin of the
// cell it falls in.
inline CellHistogramGrid cell_histograms(const GradientField& f, int rows = kHogCells, int cols = kHogCells,
                                         int bins = kHogBins) {
  CellHistogramGrid g{rows, cols, bins, std::vector<double>(static_cast<std::size_t>(rows) * cols * bins, 0.0)};
  for (int y = 0; y < f.height; ++y) {
    const int r = static_cast<int>(static_cast<long long>(y) * rows / f.height);
    for (int x = 0; x < f.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * f.width + x;
      if (f.magnitude[i] <= 0.0) continue;
      const int c = static_cast<int>(static_cast<long long>(x) * cols / f.width);
      g.cell(r, c)[orientation_bin(f.orientation[i], bins)] += f.magnitude[i];
    }
  }
  return g;
}

struct HogFeatures {
  double self_similarity = 0;
  double complexity = 0;
  double anisotropy = 0;
};

namespace detail {

// L1-normalized copy; all-zero histograms stay all-zero.
inline std::vector<double> normalized_cell(const CellHistogramGrid& g, int r, int c) {
  const double* h = g.cell(r, c);
  double s = 0.0;
  for (int b = 0; b < g.bins; ++b) s += h[b];
  std::vector<double> out(h, h + g.bins);
  if (s > 0.0)
    for (double& v : out) v /= s;
  return out;
}

inline bool is_zero(const std::vector<double>& h) {
  return std::all_of(h.begin(), h.end(), [](double v) { return v == 0.0; });
}

// Zero-vs-zero is 1 and zero-vs-nonzero is 0.
inline double intersection(const std::vector<double>& a, const std::vector<double>& b) {
  const bool za = is_zero(a), zb = is_zero(b);
  if (za || zb) return (za && zb) ? 1.0 : 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::min(a[i], b[i]);
  return s;
}

}  // namespace detail

inline HogFeatures hog_features(const GradientField& f) {
  HogFeatures out;
  double total = 0.0;
  for (double m : f.magnitude) total += m;
  out.complexity = f.magnitude.empty() ? 0.0 : total / static_cast<double>(f.magnitude.size());

  const auto grid = cell_histograms(f);
  std::vector<std::vector<double>> cells;
  cells.reserve(static_cast<std::size_t>(grid.rows) * grid.cols);
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) cells.push_back(detail::normalized_cell(grid, r, c));

  double sim_sum = 0.0, aniso_sum = 0.0;
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c) {
      const auto& h = cells[static_cast<std::size_t>(r) * grid.cols + c];
      double s = 0.0;
      int n = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (!dr && !dc) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= grid.rows || cc >= grid.cols) continue;
          s += detail::intersection(h, cells[static_cast<std::size_t>(rr) * grid.cols + cc]);
          ++n;
        }
      sim_sum += n ? s / n : 1.0;

      double m = 0.0;
      for (double v : h) m += v;
      m /= grid.bins;
      double var = 0.0;
      for (double v : h) var += (v - m) * (v - m);
      aniso_sum += std::sqrt(var / grid.bins);
    }
  const double ncells = static_cast<double>(grid.rows) * grid.cols;
  out.self_similarity = sim_sum / ncells;
  out.anisotropy = aniso_sum / ncells;
  return out;
}

inline HogFeatures hog_features(const ImageBuffer& img) { return hog_features(gradient_field(img)); }

}  // namespace thumbscope
