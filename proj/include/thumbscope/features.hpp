#pragma once

// The 19 scalar aesthetic features of one thumbnail.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "thumbscope/features_basic.hpp"
#include "thumbscope/filterbank.hpp"
#include "thumbscope/hog.hpp"
#include "thumbscope/image.hpp"
#include "thumbscope/spectral.hpp"

namespace thumbscope {

inline constexpr std::size_t kFeatureCount = 19;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "hue",           "saturation",   "lab_a",          "lab_b",
    "color_entropy", "aspect_ratio", "image_size",     "contrast",
    "luminance",     "luminance_entropy", "self_similarity", "complexity",
    "anisotropy",    "fourier_slope", "fourier_sigma", "symmetry_lr",
    "symmetry_ud",   "sparseness",   "variability"};

enum class Feature : std::size_t {
  Hue,
  Saturation,
  LabA,
  LabB,
  ColorEntropy,
  AspectRatio,
  ImageSize,
  Contrast,
  Luminance,
  LuminanceEntropy,
  SelfSimilarity,
  Complexity,
  Anisotropy,
  FourierSlope,
  FourierSigma,
  SymmetryLr,
  SymmetryUd,
  Sparseness,
  Variability,
};

inline std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    if (kFeatureNames[i] == name) return i;
  return std::nullopt;
}

// Discrete labels supplied by external model tooling.
struct Annotation {
  std::optional<std::string> shot_scale;  // close | medium | long
  std::optional<std::string> setting;     // indoor | outdoor
  std::optional<std::map<std::string, long long>> objects;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  std::optional<Annotation> annotation;

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
};

struct ExtractOptions {
  double bar_threshold = kDefaultBarThreshold;
  bool crop_bars = true;
  SpectrumOptions spectrum{};
  FitRange fit_range{};
};

// Runs every extractor on an already-cropped image.
inline FeatureVector extract_features_cropped(const ImageBuffer& img, const FilterBank& bank,
                                              const ExtractOptions& opt = {}) {
  FeatureVector fv;
  const HsvPlanes hsv = to_hsv(img);
  const LabPlanes lab = to_lab(img);

  const ColorFeatures color = color_features(hsv, lab);
  fv[Feature::Hue] = color.hue;
  fv[Feature::Saturation] = color.saturation;
  fv[Feature::LabA] = color.lab_a;
  fv[Feature::LabB] = color.lab_b;
  fv[Feature::ColorEntropy] = color.color_entropy;

  const DimensionFeatures dim = dimension_features(img);
  fv[Feature::AspectRatio] = dim.aspect_ratio;
  fv[Feature::ImageSize] = dim.image_size;

  const LightnessFeatures light = lightness_features(lab.l);
  fv[Feature::Contrast] = light.contrast;
  fv[Feature::Luminance] = light.luminance;
  fv[Feature::LuminanceEntropy] = light.luminance_entropy;

  const HogFeatures hog = hog_features(gradient_field(lab));
  fv[Feature::SelfSimilarity] = hog.self_similarity;
  fv[Feature::Complexity] = hog.complexity;
  fv[Feature::Anisotropy] = hog.anisotropy;

  const FourierFeatures fourier = fourier_features(radial_spectrum(lab.l, opt.spectrum), opt.fit_range);
  fv[Feature::FourierSlope] = fourier.slope;
  fv[Feature::FourierSigma] = fourier.sigma;

  const FilterBankFeatures cnn = filterbank_features(to_float(img), bank);
  fv[Feature::SymmetryLr] = cnn.symmetry.lr;
  fv[Feature::SymmetryUd] = cnn.symmetry.ud;
  fv[Feature::Sparseness] = cnn.sparseness.sparseness;
  fv[Feature::Variability] = cnn.sparseness.variability;
  return fv;
}

inline FeatureVector extract_features(const ImageBuffer& img, const FilterBank& bank, const ExtractOptions& opt = {}) {
  return extract_features_cropped(opt.crop_bars ? crop_black_bars(img, opt.bar_threshold) : img, bank, opt);
}

}  // namespace thumbscope
