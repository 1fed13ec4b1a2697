#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "test_support.hpp"
#include "oracles.hpp"
#include "thumbscope/filterbank.hpp"

using namespace thumbscope;
using namespace thumbscope::oracles;
using namespace thumbscope::fixtures;

namespace {

const FilterBank& bank() {
  static const FilterBank b = default_filter_bank();
  return b;
}

RgbFloatImage random_float(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(0.f, 1.f);
  RgbFloatImage img(w, h);
  for (float& v : img.values) v = d(rng);
  return img;
}

FilterBank random_bank(int n, int k, int stride, int pr, int pc, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.f, 1.f);
  FilterBank b{n, k, stride, pr, pc, std::vector<float>(static_cast<std::size_t>(n) * k * k * 3)};
  for (float& w : b.weights) w = d(rng);
  enforce_zero_mean(b);
  return b;
}

}  // namespace

TEST(FilterBankFile, DefaultBankShapeAndZeroMean) {
  const FilterBank& b = bank();
  EXPECT_EQ(b.count, 60);
  EXPECT_EQ(b.size, 11);
  EXPECT_EQ(b.stride, 4);
  EXPECT_EQ(b.pool_rows, 24);
  EXPECT_EQ(b.pool_cols, 24);
  for (int f = 0; f < b.count; ++f)
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (int t = 0; t < 121; ++t) s += b.filter(f)[t * 3 + c];
      EXPECT_NEAR(s / 121, 0.0, 1e-6);
    }
}

TEST(FilterBankFile, SaveLoadRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "thumbscope_default.fbnk";
  save_filter_bank(bank(), path);
  const FilterBank loaded = load_filter_bank(path);
  EXPECT_EQ(loaded.count, 60);
  EXPECT_EQ(loaded.size, 11);
  EXPECT_EQ(loaded.stride, 4);
  EXPECT_EQ(loaded.pool_rows, 24);
  EXPECT_EQ(loaded.pool_cols, 24);
  ASSERT_EQ(loaded.weights.size(), bank().weights.size());
  for (std::size_t i = 0; i < loaded.weights.size(); ++i) EXPECT_NEAR(loaded.weights[i], bank().weights[i], 1e-6);
  std::filesystem::remove(path);
}

TEST(FilterBankFile, LoadSubtractsChannelMeans) {
  FilterBank b = random_bank(8, 3, 2, 4, 4, 30);
  for (float& w : b.weights) w += 0.75f;
  const FilterBank loaded = parse_filter_bank(serialize_filter_bank(b));
  for (int f = 0; f < 8; ++f)
    for (int c = 0; c < 3; ++c) {
      double s = 0;
      for (int t = 0; t < 9; ++t) s += loaded.filter(f)[t * 3 + c];
      EXPECT_NEAR(s, 0.0, 1e-5);
    }
}

TEST(FilterBankFile, RejectsMalformedFiles) {
  EXPECT_THROW(parse_filter_bank(std::vector<std::uint8_t>{}), FormatError);
  auto bytes = serialize_filter_bank(random_bank(8, 3, 1, 2, 2, 31));
  auto even = bytes;
  even[12] = 4;  // k = 4
  EXPECT_THROW(parse_filter_bank(even), FormatError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(parse_filter_bank(magic), FormatError);
  auto version = bytes;
  version[4] = 2;
  EXPECT_THROW(parse_filter_bank(version), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(parse_filter_bank(truncated), FormatError);
  auto few = serialize_filter_bank(FilterBank{7, 3, 1, 2, 2, std::vector<float>(7 * 27, 0.f)});
  EXPECT_THROW(parse_filter_bank(few), FormatError);
}

TEST(Respond, ConstantImageGivesZero) {
  const auto st = respond(ImageBuffer(80, 60, Rgb8{120, 40, 200}), bank());
  EXPECT_EQ(st.count, 60);
  EXPECT_EQ(st.rows, 24);
  EXPECT_EQ(st.cols, 24);
  for (double v : st.values) EXPECT_LE(v, 1e-6);
}

TEST(Respond, VerticalEdgeFilterFiresAlongEdge) {
  // Orientation-0 Gabors (carrier varies along x) at every scale and phase.
  const auto st = respond(split_image(227, 227, {0, 0, 0}, {255, 255, 255}), bank());
  double edge = 0, far = 0;
  for (int f : {0, 1, 16, 17, 32, 33})
    for (int r = 0; r < st.rows; ++r) {
      edge = std::max({edge, st.at(f, r, 11), st.at(f, r, 12)});
      for (int c : {0, 1, 2, 3, 20, 21, 22, 23}) far = std::max(far, st.at(f, r, c));
    }
  EXPECT_GT(edge, 0.1);
  EXPECT_LT(far, 1e-6);
}

TEST(Respond, MatchesNaiveConvolution) {
  struct Shape {
    int n, k, stride, pr, pc;
  };
  for (const Shape s : {Shape{8, 5, 3, 7, 5}, Shape{9, 9, 3, 10, 10}, Shape{10, 7, 5, 24, 24}}) {
    const FilterBank b = random_bank(s.n, s.k, s.stride, s.pr, s.pc, 32 + s.k);
    const RgbFloatImage img = random_float(kFilterInputSize, kFilterInputSize, 40 + s.k);
    const auto st = respond(img, b);
    const auto want = naive_response(img, b);
    ASSERT_EQ(st.values.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) ASSERT_NEAR(st.values[i], want[i], 1e-5);
  }
}

TEST(Symmetry, MirrorSymmetricImageScoresOne) {
  for (std::uint64_t seed : {50u, 51u, 52u}) {
    const auto s = symmetry_features(random_lr_symmetric(160, 90, seed), bank());
    EXPECT_NEAR(s.lr, 1.0, 1e-6);
    EXPECT_LT(s.ud, 0.99);
  }
}

TEST(Symmetry, ConstantImageScoresOne) {
  const auto s = symmetry_features(ImageBuffer(50, 40, Rgb8{0, 0, 0}), bank());
  EXPECT_EQ(s.lr, 1.0);
  EXPECT_EQ(s.ud, 1.0);
}

TEST(Symmetry, HalfWhiteHalfBlack) {
  const ImageBuffer img = split_image(200, 120, {255, 255, 255}, {0, 0, 0});
  const auto s = symmetry_features(img, bank());
  EXPECT_NEAR(s.ud, 1.0, 1e-6);
  EXPECT_LT(s.lr, s.ud);
  // Direct evaluation of the score formula.
  const auto a = naive_response(resize_bilinear(to_float(img), kFilterInputSize, kFilterInputSize), bank());
  const auto b = naive_response(resize_bilinear(to_float(mirror_lr(img)), kFilterInputSize, kFilterInputSize), bank());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::abs(a[i] - b[i]);
    den += std::max(a[i], b[i]);
  }
  EXPECT_LT(s.lr, 0.9);
  EXPECT_NEAR(s.lr, 1 - num / den, 1e-6);
}

TEST(Symmetry, InvariantToMirroringAndBounded) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 3; ++trial) {
    const ImageBuffer img = random_image(120, 80, rng());
    const auto a = symmetry_features(img, bank());
    const auto b = symmetry_features(mirror_lr(img), bank());
    EXPECT_NEAR(a.lr, b.lr, 1e-9);
    for (double v : {a.lr, a.ud}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Sparseness, AllZeroStack) {
  ResponseStack st{10, 4, 4, std::vector<double>(160, 0.0)};
  const auto s = sparseness_variability(st);
  EXPECT_EQ(s.sparseness, 0.0);
  EXPECT_EQ(s.variability, 0.0);
}

TEST(Sparseness, SingleBrightCell) {
  ResponseStack st{10, 4, 4, std::vector<double>(160, 0.0)};
  st.values[16 * 3 + 5] = 7.5;
  const auto s = sparseness_variability(st);
  EXPECT_EQ(s.sparseness, 0.0);
  EXPECT_NEAR(s.variability, naive_variance(st.values), 1e-15);
}

TEST(Sparseness, ConstantMapsWithDistinctLevels) {
  ResponseStack st{6, 3, 3, {}};
  for (int f = 0; f < 6; ++f)
    for (int i = 0; i < 9; ++i) st.values.push_back(f * 0.5);
  const auto s = sparseness_variability(st);
  EXPECT_EQ(s.sparseness, 0.0);
  EXPECT_GT(s.variability, 0.0);
  EXPECT_NEAR(s.variability, naive_variance(st.values), 1e-15);
}

TEST(Sparseness, MedianOfEvenCountAveragesMiddlePair) {
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_EQ(median({5.0, 1.0, 3.0}), 3.0);
}

TEST(Sparseness, BoundedByLargestMapVariance) {
  const auto st = respond(random_image(90, 60, 54), bank());
  double max_var = 0;
  for (int f = 0; f < st.count; ++f) {
    const auto m = st.map(f);
    max_var = std::max(max_var, naive_variance({m.begin(), m.end()}));
  }
  const auto s = sparseness_variability(st);
  EXPECT_LE(s.sparseness, max_var);
  EXPECT_NEAR(s.variability, naive_variance(st.values), 1e-12);
}

TEST(FilterBankFeatures, DoublingContrastScalesVariances) {
  RgbFloatImage img = to_float(random_image(100, 70, 55));
  RgbFloatImage doubled = img;
  for (float& v : doubled.values) v = 2 * v - 0.5f;
  const auto a = filterbank_features(img, bank());
  const auto b = filterbank_features(doubled, bank());
  EXPECT_NEAR(b.sparseness.sparseness, 4 * a.sparseness.sparseness, 1e-6 * a.sparseness.sparseness);
  EXPECT_NEAR(b.sparseness.variability, 4 * a.sparseness.variability, 1e-6 * a.sparseness.variability);
  EXPECT_NEAR(b.symmetry.lr, a.symmetry.lr, 1e-6);
  EXPECT_NEAR(b.symmetry.ud, a.symmetry.ud, 1e-6);
}
