#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "test_support.hpp"
#include "thumbscope/spectral.hpp"

using namespace thumbscope;
using namespace thumbscope::fixtures;

TEST(RadialSpectrum, ConstantImageIsDegenerate) {
  EXPECT_THROW(radial_spectrum(ImageBuffer(100, 80, Rgb8{40, 40, 40})), DegenerateSpectrumError);
  EXPECT_THROW(radial_spectrum(PlaneImage(64, 64, 7.0), {false, 0}), DegenerateSpectrumError);
}

TEST(RadialSpectrum, SinusoidConcentratesInItsAnnulus) {
  constexpr int n = 128, freq = 9;
  PlaneImage p(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) p.at(x, y) = 50 + 10 * std::sin(2 * std::numbers::pi * freq * x / n);
  const auto spec = radial_spectrum(p, {false, 0});
  ASSERT_EQ(spec.radius.size(), static_cast<std::size_t>(n / 2));
  for (std::size_t i = 0; i < spec.radius.size(); ++i) {
    if (spec.radius[i] == freq) continue;
    EXPECT_LT(spec.log_power[i], spec.log_power[freq - 1] - 10.0) << "radius " << spec.radius[i];
  }
}

TEST(RadialSpectrum, RadiiIncreaseFromOne) {
  const auto spec = radial_spectrum(random_image(64, 48, 20));
  ASSERT_EQ(spec.radius.size(), 256u);
  for (std::size_t i = 0; i < spec.radius.size(); ++i) EXPECT_EQ(spec.radius[i], static_cast<double>(i + 1));
}

TEST(RadialSpectrum, InverseSquareNoiseDecaysTwoDecadesPerDecade) {
  const PlaneImage field = power_law_field(256, -2.0, 21);
  const auto spec = radial_spectrum(field, {false, 0});
  // Annuli 10 and 100 are one decade apart.
  const double drop = spec.log_power[9] - spec.log_power[99];
  EXPECT_NEAR(drop, 2.0, 0.15);
}

TEST(FourierFeatures, ExactLineFitsExactly) {
  RadialSpectrum spec;
  for (int r = 1; r <= 256; ++r) {
    spec.radius.push_back(r);
    spec.log_power.push_back(-2.0 * std::log10(r) + 7.3);
  }
  const auto f = fourier_features(spec);
  EXPECT_NEAR(f.slope, -2.0, 1e-9);
  EXPECT_NEAR(f.sigma, 0.0, 1e-9);
}

TEST(FourierFeatures, TooFewPointsIsFitError) {
  RadialSpectrum spec;
  for (int r = 1; r <= 18; ++r) {
    spec.radius.push_back(r);
    spec.log_power.push_back(-std::log10(r));
  }
  EXPECT_THROW(fourier_features(spec), FitError);
  spec.log_power[12] = -std::numeric_limits<double>::infinity();
  EXPECT_NO_THROW(fourier_features(spec, {1, 18}));
  EXPECT_THROW(fourier_features(spec, {1, 9}), FitError);
}

TEST(FourierFeatures, NonFiniteAnnuliAreSkipped) {
  RadialSpectrum spec;
  for (int r = 1; r <= 30; ++r) {
    spec.radius.push_back(r);
    spec.log_power.push_back(r == 15 ? -std::numeric_limits<double>::infinity() : -3.0 * std::log10(r));
  }
  const auto f = fourier_features(spec, {1, 30});
  EXPECT_NEAR(f.slope, -3.0, 1e-12);
}

TEST(FourierFeatures, WhiteNoiseIsFlat) {
  const auto f = fourier_features(radial_spectrum(gray_from_field(power_law_field(512, 0.0, 22), 50, 12)));
  EXPECT_NEAR(f.slope, 0.0, 0.15);
  EXPECT_LT(f.sigma, 0.1);
}

TEST(FourierFeatures, RecoversPowerLawExponents) {
  for (double exponent : {-1.0, -2.0, -3.0}) {
    const ImageBuffer img = gray_from_field(power_law_field(512, exponent, 23), 50, 10);
    const auto f = fourier_features(radial_spectrum(img));
    EXPECT_NEAR(f.slope, exponent, 0.1) << "exponent " << exponent;
  }
}

TEST(FourierFeatures, SlopeInvariantToLightnessScale) {
  const PlaneImage l = to_lightness(random_image(90, 70, 24));
  PlaneImage scaled = l;
  for (double& v : scaled.values) v *= 3.7;
  const auto a = fourier_features(radial_spectrum(l));
  const auto b = fourier_features(radial_spectrum(scaled));
  EXPECT_NEAR(a.slope, b.slope, 1e-6);
  EXPECT_NEAR(a.sigma, b.sigma, 1e-6);
}

TEST(FourierFeatures, RotationInvariant) {
  for (std::uint64_t seed : {25u, 26u}) {
    const ImageBuffer img = gray_from_field(power_law_field(512, -2.0, seed), 50, 10);
    const auto a = fourier_features(radial_spectrum(img));
    const auto b = fourier_features(radial_spectrum(rotated90(img)));
    EXPECT_NEAR(a.slope, b.slope, 1e-6);
    EXPECT_NEAR(a.sigma, b.sigma, 1e-6);
  }
  // Non-square input goes through the resampler first.
  const ImageBuffer img = random_image(300, 200, 27);
  const auto a = fourier_features(radial_spectrum(img));
  const auto b = fourier_features(radial_spectrum(rotated90(img)));
  EXPECT_NEAR(a.slope, b.slope, 1e-6);
  EXPECT_NEAR(a.sigma, b.sigma, 1e-6);
}

TEST(FourierFeatures, NativeSizeModeUsesImageGeometry) {
  const ImageBuffer img = random_image(200, 120, 28);
  const auto spec = radial_spectrum(img, {false, 0});
  EXPECT_EQ(spec.radius.size(), 60u);
  const auto f = fourier_features(spec, {10, 60});
  EXPECT_GE(f.sigma, 0.0);
}
