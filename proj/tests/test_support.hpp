#pragma once

#include <cstdint>
#include <random>

#include "thumbscope/image.hpp"

namespace thumbscope::fixtures {

inline ImageBuffer random_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  ImageBuffer img(w, h);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(d(rng));
  return img;
}

inline ImageBuffer gray_image(int w, int h, std::uint8_t v) { return ImageBuffer(w, h, Rgb8{v, v, v}); }

// Left half one color, right half another.
inline ImageBuffer split_image(int w, int h, Rgb8 left, Rgb8 right) {
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.set(x, y, x < w / 2 ? left : right);
  return img;
}

inline ImageBuffer mirror_lr(const ImageBuffer& img) { return flipped(img, Flip::Horizontal); }

// Random image whose right half mirrors its left half.
inline ImageBuffer random_lr_symmetric(int w, int h, std::uint64_t seed) {
  ImageBuffer img = random_image(w, h, seed);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w / 2; ++x) img.set(w - 1 - x, y, img.at(x, y));
  return img;
}

}  // namespace thumbscope::fixtures

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <fftw3.h>

namespace thumbscope::fixtures {

// Random-phase field whose expected power falls off as radius^exponent,
// built by an inverse DFT of a synthetic spectrum. Zero mean, unit std.
inline PlaneImage power_law_field(int n, double exponent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
  fftw_complex* img = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
  for (int ky = 0; ky < n; ++ky)
    for (int kx = 0; kx < n; ++kx) {
      const double fx = kx <= n / 2 ? kx : kx - n;
      const double fy = ky <= n / 2 ? ky : ky - n;
      const double r = std::sqrt(fx * fx + fy * fy);
      const double amp = r > 0 ? std::pow(r, exponent / 2.0) : 0.0;
      const double ph = phase(rng);
      spec[ky * n + kx][0] = amp * std::cos(ph);
      spec[ky * n + kx][1] = amp * std::sin(ph);
    }
  fftw_plan p = fftw_plan_dft_2d(n, n, spec, img, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(p);
  fftw_destroy_plan(p);
  PlaneImage out(n, n);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = img[i][0];
  fftw_free(spec);
  fftw_free(img);
  double m = 0, s = 0;
  for (double v : out.values) m += v;
  m /= static_cast<double>(out.values.size());
  for (double v : out.values) s += (v - m) * (v - m);
  s = std::sqrt(s / static_cast<double>(out.values.size()));
  for (double& v : out.values) v = (v - m) / s;
  return out;
}

// Gray level whose L* is closest to the target.
inline std::uint8_t gray_for_lightness(double target) {
  static const std::vector<double> table = [] {
    std::vector<double> t(256);
    for (int g = 0; g < 256; ++g) {
      const auto v = static_cast<std::uint8_t>(g);
      t[g] = rgb_to_lab({v, v, v})[0];
    }
    return t;
  }();
  const auto it = std::lower_bound(table.begin(), table.end(), target);
  if (it == table.begin()) return 0;
  if (it == table.end()) return 255;
  const auto hi = static_cast<int>(it - table.begin());
  return static_cast<std::uint8_t>(std::abs(table[hi] - target) < std::abs(table[hi - 1] - target) ? hi : hi - 1);
}

// Gray image whose L* plane follows mean + std * field.
inline ImageBuffer gray_from_field(const PlaneImage& field, double mean_l, double std_l) {
  ImageBuffer img(field.width, field.height);
  for (int y = 0; y < field.height; ++y)
    for (int x = 0; x < field.width; ++x) {
      const auto g = gray_for_lightness(mean_l + std_l * field.at(x, y));
      img.set(x, y, {g, g, g});
    }
  return img;
}

}  // namespace thumbscope::fixtures
