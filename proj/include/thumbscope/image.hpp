#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "thumbscope/error.hpp"

namespace thumbscope {

using Rgb8 = std::array<std::uint8_t, 3>;

// Decoded sRGB image, 8 bits per channel, row-major interleaved RGB.
class ImageBuffer {
 public:
  ImageBuffer() = default;

  ImageBuffer(int width, int height, Rgb8 fill = {0, 0, 0}) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw ImageSizeError("image dimensions must be positive");
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
      pixels_[i] = fill[0];
      pixels_[i + 1] = fill[1];
      pixels_[i + 2] = fill[2];
    }
  }

  ImageBuffer(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0) throw ImageSizeError("image dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width) * height * 3)
      throw ImageSizeError("pixel buffer size does not match dimensions");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
  std::span<std::uint8_t> bytes() noexcept { return pixels_; }

  Rgb8 at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }

  void set(int x, int y, Rgb8 c) {
    const std::size_t i = index(x, y);
    pixels_[i] = c[0];
    pixels_[i + 1] = c[1];
    pixels_[i + 2] = c[2];
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// One scalar channel of a converted color space, same geometry as its source.
struct PlaneImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  PlaneImage() = default;
  PlaneImage(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const noexcept { return values.size(); }
};

struct HsvPlanes {
  PlaneImage h, s, v;
};

struct LabPlanes {
  PlaneImage l, a, b;
};

// Three-channel float image, interleaved RGB, nominal range [0,1].
struct RgbFloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  RgbFloatImage() = default;
  RgbFloatImage(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h * 3, 0.f) {}

  float& at(int x, int y, int c) { return values[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const {
    return values[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

inline constexpr int kMinCroppedSide = 16;
inline constexpr double kDefaultBarThreshold = 12.0;

// Rec.601 luma of an 8-bit RGB pixel, 0-255.
inline double luma(Rgb8 p) noexcept { return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]; }

inline ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int w, int h) {
  ImageBuffer out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.set(x, y, img.at(x0 + x, y0 + y));
  return out;
}

// Strips contiguous border rows/columns whose mean luma is at or below the
// threshold. Each border is scanned on its own; scanning repeats until no
// border changes so the result is a fixed point.
inline ImageBuffer crop_black_bars(const ImageBuffer& img, double threshold = kDefaultBarThreshold) {
  if (threshold < 0.0 || threshold > 255.0) throw Error("bar threshold must lie in [0,255]");
  if (img.empty()) throw ImageSizeError("degenerate after crop: empty image");

  int x0 = 0, y0 = 0, x1 = img.width(), y1 = img.height();  // half-open
  auto row_dark = [&](int y) {
    double s = 0.0;
    for (int x = x0; x < x1; ++x) s += luma(img.at(x, y));
    return s / (x1 - x0) <= threshold;
  };
  auto col_dark = [&](int x) {
    double s = 0.0;
    for (int y = y0; y < y1; ++y) s += luma(img.at(x, y));
    return s / (y1 - y0) <= threshold;
  };

  bool changed = true;
  while (changed && x0 < x1 && y0 < y1) {
    changed = false;
    while (y0 < y1 && row_dark(y0)) ++y0, changed = true;
    while (y1 > y0 && row_dark(y1 - 1)) --y1, changed = true;
    if (y0 >= y1) break;
    while (x0 < x1 && col_dark(x0)) ++x0, changed = true;
    while (x1 > x0 && col_dark(x1 - 1)) --x1, changed = true;
  }

  const int w = x1 - x0, h = y1 - y0;
  if (w < kMinCroppedSide || h < kMinCroppedSide)
    throw ImageSizeError("degenerate after crop: " + std::to_string(std::max(w, 0)) + "x" +
                         std::to_string(std::max(h, 0)));
  if (w == img.width() && h == img.height()) return img;
  return crop(img, x0, y0, w, h);
}

// sRGB -> HSV with every channel in [0,1]. Achromatic pixels get hue 0.
inline std::array<double, 3> rgb_to_hsv(Rgb8 p) noexcept {
  const double r = p[0] / 255.0, g = p[1] / 255.0, b = p[2] / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  double h = 0.0;
  if (d > 0.0) {
    if (mx == r)
      h = (g - b) / d;
    else if (mx == g)
      h = 2.0 + (b - r) / d;
    else
      h = 4.0 + (r - g) / d;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
    if (h >= 1.0) h -= 1.0;
  }
  const double s = mx > 0.0 ? d / mx : 0.0;
  return {h, s, mx};
}

inline HsvPlanes to_hsv(const ImageBuffer& img) {
  HsvPlanes out{PlaneImage(img.width(), img.height()), PlaneImage(img.width(), img.height()),
                PlaneImage(img.width(), img.height())};
  const auto bytes = img.bytes();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto hsv = rgb_to_hsv({bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]});
    out.h.values[i] = hsv[0];
    out.s.values[i] = hsv[1];
    out.v.values[i] = hsv[2];
  }
  return out;
}

namespace detail {

// D65 white, 2 degree observer.
inline constexpr double kWhiteX = 0.95047;
inline constexpr double kWhiteY = 1.0;
inline constexpr double kWhiteZ = 1.08883;

inline double srgb_to_linear(double c) noexcept {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double c) noexcept {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

inline const std::array<double, 256>& linear_lut() {
  static const std::array<double, 256> lut = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[i] = srgb_to_linear(i / 255.0);
    return t;
  }();
  return lut;
}

inline double lab_f(double t) noexcept {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

inline double lab_f_inv(double t) noexcept {
  constexpr double delta = 6.0 / 29.0;
  return t > delta ? t * t * t : 3.0 * delta * delta * (t - 4.0 / 29.0);
}

}  // namespace detail

// sRGB -> CIE L*a*b* (D65 / 2 degree).
inline std::array<double, 3> rgb_to_lab(Rgb8 p) noexcept {
  const auto& lut = detail::linear_lut();
  const double r = lut[p[0]], g = lut[p[1]], b = lut[p[2]];
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = detail::lab_f(x / detail::kWhiteX);
  const double fy = detail::lab_f(y / detail::kWhiteY);
  const double fz = detail::lab_f(z / detail::kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

// Inverse of rgb_to_lab, clamped and rounded to 8 bits.
inline Rgb8 lab_to_rgb(double l, double a, double b) noexcept {
  const double fy = (l + 16.0) / 116.0;
  const double fx = fy + a / 500.0;
  const double fz = fy - b / 200.0;
  const double x = detail::kWhiteX * detail::lab_f_inv(fx);
  const double y = detail::kWhiteY * detail::lab_f_inv(fy);
  const double z = detail::kWhiteZ * detail::lab_f_inv(fz);
  const double rl = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
  const double gl = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
  const double bl = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
  auto to8 = [](double c) {
    const double v = detail::linear_to_srgb(std::clamp(c, 0.0, 1.0)) * 255.0;
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  };
  return {to8(rl), to8(gl), to8(bl)};
}

inline LabPlanes to_lab(const ImageBuffer& img) {
  LabPlanes out{PlaneImage(img.width(), img.height()), PlaneImage(img.width(), img.height()),
                PlaneImage(img.width(), img.height())};
  const auto bytes = img.bytes();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto lab = rgb_to_lab({bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]});
    out.l.values[i] = lab[0];
    out.a.values[i] = lab[1];
    out.b.values[i] = lab[2];
  }
  return out;
}

inline PlaneImage to_lightness(const ImageBuffer& img) {
  PlaneImage out(img.width(), img.height());
  const auto bytes = img.bytes();
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    out.values[i] = rgb_to_lab({bytes[3 * i], bytes[3 * i + 1], bytes[3 * i + 2]})[0];
  return out;
}

inline RgbFloatImage to_float(const ImageBuffer& img) {
  RgbFloatImage out(img.width(), img.height());
  const auto bytes = img.bytes();
  for (std::size_t i = 0; i < bytes.size(); ++i) out.values[i] = bytes[i] / 255.0f;
  return out;
}

namespace detail {

// Source sample positions for a pixel-center aligned bilinear resample.
struct LinearTap {
  int i0, i1;
  double w1;
};

inline std::vector<LinearTap> linear_taps(int src, int dst) {
  std::vector<LinearTap> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int d = 0; d < dst; ++d) {
    double s = (d + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src - 1);
    taps[d] = {i0, i1, s - i0};
  }
  return taps;
}

}  // namespace detail

// Bilinear resample; identity when the size is unchanged.
inline PlaneImage resize_bilinear(const PlaneImage& src, int width, int height) {
  if (src.width == width && src.height == height) return src;
  const auto tx = detail::linear_taps(src.width, width);
  const auto ty = detail::linear_taps(src.height, height);
  PlaneImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const auto& ry = ty[y];
    for (int x = 0; x < width; ++x) {
      const auto& rx = tx[x];
      const double top = src.at(rx.i0, ry.i0) * (1 - rx.w1) + src.at(rx.i1, ry.i0) * rx.w1;
      const double bot = src.at(rx.i0, ry.i1) * (1 - rx.w1) + src.at(rx.i1, ry.i1) * rx.w1;
      out.at(x, y) = top * (1 - ry.w1) + bot * ry.w1;
    }
  }
  return out;
}

inline RgbFloatImage resize_bilinear(const RgbFloatImage& src, int width, int height) {
  if (src.width == width && src.height == height) return src;
  const auto tx = detail::linear_taps(src.width, width);
  const auto ty = detail::linear_taps(src.height, height);
  RgbFloatImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const auto& ry = ty[y];
    for (int x = 0; x < width; ++x) {
      const auto& rx = tx[x];
      for (int c = 0; c < 3; ++c) {
        const double top = src.at(rx.i0, ry.i0, c) * (1 - rx.w1) + src.at(rx.i1, ry.i0, c) * rx.w1;
        const double bot = src.at(rx.i0, ry.i1, c) * (1 - rx.w1) + src.at(rx.i1, ry.i1, c) * rx.w1;
        out.at(x, y, c) = static_cast<float>(top * (1 - ry.w1) + bot * ry.w1);
      }
    }
  }
  return out;
}

enum class Flip { Horizontal, Vertical };

inline ImageBuffer flipped(const ImageBuffer& img, Flip axis) {
  ImageBuffer out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const int sx = axis == Flip::Horizontal ? img.width() - 1 - x : x;
      const int sy = axis == Flip::Vertical ? img.height() - 1 - y : y;
      out.set(x, y, img.at(sx, sy));
    }
  return out;
}

inline RgbFloatImage flipped(const RgbFloatImage& img, Flip axis) {
  RgbFloatImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const int sx = axis == Flip::Horizontal ? img.width - 1 - x : x;
      const int sy = axis == Flip::Vertical ? img.height - 1 - y : y;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  return out;
}

inline PlaneImage flipped(const PlaneImage& img, Flip axis) {
  PlaneImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const int sx = axis == Flip::Horizontal ? img.width - 1 - x : x;
      const int sy = axis == Flip::Vertical ? img.height - 1 - y : y;
      out.at(x, y) = img.at(sx, sy);
    }
  return out;
}

// 90 degrees clockwise.
inline ImageBuffer rotated90(const ImageBuffer& img) {
  ImageBuffer out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out.set(img.height() - 1 - y, x, img.at(x, y));
  return out;
}

inline PlaneImage rotated90(const PlaneImage& img) {
  PlaneImage out(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(img.height - 1 - y, x) = img.at(x, y);
  return out;
}

}  // namespace thumbscope
