#pragma once

// Color, Lightness and Dimension feature groups.

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "thumbscope/image.hpp"
#include "thumbscope/numeric.hpp"

namespace thumbscope {

inline constexpr int kEntropyBins = 256;

// 256-bin (by default) histogram of values in [lo, hi]; values at hi land in
// the last bin and values outside the range are clamped.
inline std::vector<double> histogram(std::span<const double> values, double lo, double hi,
                                     int bins = kEntropyBins) {
  std::vector<double> h(bins, 0.0);
  const double scale = bins / (hi - lo);
  for (double v : values) {
    int b = static_cast<int>(std::floor((v - lo) * scale));
    b = b < 0 ? 0 : (b >= bins ? bins - 1 : b);
    h[b] += 1.0;
  }
  return h;
}

// Shannon entropy in bits, 0*log(0) = 0.
inline double shannon_entropy(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double e = 0.0;
  for (double c : counts)
    if (c > 0.0) {
      const double p = c / total;
      e -= p * std::log2(p);
    }
  return e;
}

inline double plane_entropy(const PlaneImage& plane, double lo, double hi) {
  const auto h = histogram(plane.values, lo, hi);
  return shannon_entropy(h);
}

struct ColorFeatures {
  double hue = 0;
  double saturation = 0;
  double lab_a = 0;
  double lab_b = 0;
  double color_entropy = 0;
};

struct LightnessFeatures {
  double contrast = 0;
  double luminance = 0;
  double luminance_entropy = 0;
};

struct DimensionFeatures {
  double aspect_ratio = 0;
  double image_size = 0;
};

// Hue mean is the plain arithmetic mean on [0,1]; no circular statistics.
inline ColorFeatures color_features(const HsvPlanes& hsv, const LabPlanes& lab) {
  ColorFeatures f;
  f.hue = mean(hsv.h.values);
  f.saturation = mean(hsv.s.values);
  f.lab_a = mean(lab.a.values);
  f.lab_b = mean(lab.b.values);
  f.color_entropy = plane_entropy(hsv.h, 0.0, 1.0);
  return f;
}

inline ColorFeatures color_features(const ImageBuffer& img) { return color_features(to_hsv(img), to_lab(img)); }

inline LightnessFeatures lightness_features(const PlaneImage& lightness) {
  LightnessFeatures f;
  f.luminance = mean(lightness.values);
  f.contrast = std::sqrt(population_variance(lightness.values));
  f.luminance_entropy = plane_entropy(lightness, 0.0, 100.0);
  return f;
}

inline LightnessFeatures lightness_features(const ImageBuffer& img) {
  return lightness_features(to_lightness(img));
}

inline DimensionFeatures dimension_features(const ImageBuffer& img) {
  return {static_cast<double>(img.width()) / img.height(), static_cast<double>(img.width() + img.height())};
}

}  // namespace thumbscope
