#pragma once

// Fourier slope and sigma: a line fit to the radially averaged log-log power
// spectrum of the L* plane.

#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "thumbscope/error.hpp"
#include "thumbscope/image.hpp"
#include "thumbscope/numeric.hpp"

namespace thumbscope {

// Mean log10 power per integer-radius annulus, radius in cycles/image.
// Annuli without power hold -inf.
struct RadialSpectrum {
  std::vector<double> radius;
  std::vector<double> log_power;
};

struct SpectrumOptions {
  bool resize = true;  // resample to size x size first; false keeps native size
  int size = 512;
};

struct FitRange {
  double min_radius = 10.0;
  double max_radius = 256.0;
};

struct FourierFeatures {
  double slope = 0;
  double sigma = 0;
};

namespace detail {

// FFTW planning is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftBuffer {
 public:
  explicit FftBuffer(std::size_t n) : data_(fftw_alloc_complex(n)) {
    if (!data_) throw std::bad_alloc();
  }
  ~FftBuffer() { fftw_free(data_); }
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;
  fftw_complex* get() const noexcept { return data_; }

 private:
  fftw_complex* data_;
};

// Unnormalized forward 2-D DFT of a real plane, returned as |F|^2.
inline std::vector<double> power_spectrum_2d(const std::vector<double>& plane, int width, int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  FftBuffer in(n), out(n);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(height, width, in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) {
    in.get()[i][0] = plane[i];
    in.get()[i][1] = 0.0;
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::vector<double> power(n);
  for (std::size_t i = 0; i < n; ++i)
    power[i] = out.get()[i][0] * out.get()[i][0] + out.get()[i][1] * out.get()[i][1];
  return power;
}

inline int signed_frequency(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace detail

inline RadialSpectrum radial_spectrum(const PlaneImage& lightness, const SpectrumOptions& opt = {}) {
  PlaneImage plane = opt.resize ? resize_bilinear(lightness, opt.size, opt.size) : lightness;
  const double m = mean(plane.values);
  double energy = 0.0;
  for (double& v : plane.values) {
    v -= m;
    energy += v * v;
  }
  if (energy <= 1e-18 * static_cast<double>(plane.values.size()))
    throw DegenerateSpectrumError("degenerate spectrum: image has no AC power");

  const int w = plane.width, h = plane.height;
  const auto power = detail::power_spectrum_2d(plane.values, w, h);
  const int max_r = std::min(w, h) / 2;
  std::vector<double> sum(max_r + 1, 0.0);
  std::vector<long long> count(max_r + 1, 0);
  for (int ky = 0; ky < h; ++ky) {
    const double fy = detail::signed_frequency(ky, h);
    for (int kx = 0; kx < w; ++kx) {
      const double fx = detail::signed_frequency(kx, w);
      const long r = std::lround(std::sqrt(fx * fx + fy * fy));
      if (r < 1 || r > max_r) continue;
      sum[r] += power[static_cast<std::size_t>(ky) * w + kx];
      ++count[r];
    }
  }
  RadialSpectrum spec;
  for (int r = 1; r <= max_r; ++r) {
    spec.radius.push_back(r);
    const double avg = count[r] ? sum[r] / static_cast<double>(count[r]) : 0.0;
    spec.log_power.push_back(avg > 0.0 ? std::log10(avg) : -std::numeric_limits<double>::infinity());
  }
  return spec;
}

inline RadialSpectrum radial_spectrum(const ImageBuffer& img, const SpectrumOptions& opt = {}) {
  return radial_spectrum(to_lightness(img), opt);
}

// OLS of log10 power on log10 radius over the fit range; sigma is the RMSE.
inline FourierFeatures fourier_features(const RadialSpectrum& spec, const FitRange& range = {}) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < spec.radius.size(); ++i) {
    const double r = spec.radius[i];
    if (r < range.min_radius || r > range.max_radius || !std::isfinite(spec.log_power[i])) continue;
    x.push_back(std::log10(r));
    y.push_back(spec.log_power[i]);
  }
  if (x.size() < 10)
    throw FitError("spectrum fit needs at least 10 finite points in range, got " + std::to_string(x.size()));
  const LineFit fit = fit_line(x, y);
  return {fit.slope, fit.rmse};
}

}  // namespace thumbscope
