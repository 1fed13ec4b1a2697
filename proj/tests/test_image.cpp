#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "test_support.hpp"
#include "thumbscope/codec.hpp"
#include "thumbscope/image.hpp"

using namespace thumbscope;
using thumbscope::fixtures::gray_image;
using thumbscope::fixtures::random_image;

namespace {

// 1x1 white PNG written by an unrelated encoder (Pillow).
const std::vector<std::uint8_t> kWhitePixelPng = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00, 0x00,
    0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00, 0x00, 0x90, 0x77, 0x53, 0xde, 0x00, 0x00, 0x00,
    0x0c, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8, 0xff, 0xff, 0x3f, 0x00, 0x05, 0xfe, 0x02, 0xfe, 0x0d,
    0xef, 0x46, 0xb8, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  const double hh = h * 6.0;
  const int i = static_cast<int>(std::floor(hh)) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

}  // namespace

TEST(Decode, WhitePixelPng) {
  const ImageBuffer img = decode(kWhitePixelPng);
  EXPECT_EQ(img.width(), 1);
  EXPECT_EQ(img.height(), 1);
  EXPECT_EQ(img.at(0, 0), (Rgb8{255, 255, 255}));
}

TEST(Decode, JpegDimensions) {
  const auto bytes = encode_jpeg(random_image(1280, 720, 1));
  const ImageBuffer img = decode(bytes);
  EXPECT_EQ(img.width(), 1280);
  EXPECT_EQ(img.height(), 720);
  EXPECT_EQ(img.pixel_count(), 921600u);
}

TEST(Decode, TruncatedJpegReportsOffset) {
  auto bytes = encode_jpeg(random_image(64, 64, 2));
  bytes.resize(bytes.size() / 2);
  try {
    decode(bytes);
    FAIL() << "expected DecodeError";
  } catch (const DecodeError& e) {
    EXPECT_GT(e.offset(), 0u);
    EXPECT_LE(e.offset(), bytes.size());
  }
}

TEST(Decode, TruncatedPngAndGarbage) {
  auto bytes = encode_png(random_image(32, 32, 3));
  bytes.resize(bytes.size() - 20);
  EXPECT_THROW(decode(bytes), DecodeError);
  const std::vector<std::uint8_t> garbage = {'G', 'I', 'F', '8', '9', 'a'};
  EXPECT_THROW(decode(garbage), DecodeError);
  EXPECT_THROW(decode(std::vector<std::uint8_t>{}), DecodeError);
}

TEST(Decode, PngRoundTripIsLossless) {
  const ImageBuffer img = random_image(37, 21, 4);
  EXPECT_EQ(decode(encode_png(img)), img);
}

TEST(CropBlackBars, StripsTopAndBottomBars) {
  ImageBuffer img = gray_image(100, 100, 128);
  for (int y = 0; y < 100; ++y)
    if (y < 20 || y >= 80)
      for (int x = 0; x < 100; ++x) img.set(x, y, {0, 0, 0});
  const ImageBuffer out = crop_black_bars(img, 10);
  EXPECT_EQ(out.width(), 100);
  EXPECT_EQ(out.height(), 60);
  EXPECT_EQ(out.at(0, 0), (Rgb8{128, 128, 128}));
}

TEST(CropBlackBars, StripsEachBorderIndependently) {
  ImageBuffer img = gray_image(120, 90, 200);
  for (int y = 0; y < 90; ++y)
    for (int x = 0; x < 120; ++x)
      if (x < 7 || x >= 110 || y < 3) img.set(x, y, {4, 2, 6});
  const ImageBuffer out = crop_black_bars(img);
  EXPECT_EQ(out.width(), 103);
  EXPECT_EQ(out.height(), 87);
}

TEST(CropBlackBars, NoBarsLeavesImageUnchanged) {
  const ImageBuffer img = gray_image(50, 40, 128);
  EXPECT_EQ(crop_black_bars(img, 10), img);
}

TEST(CropBlackBars, AllBlackIsDegenerate) {
  EXPECT_THROW(crop_black_bars(gray_image(50, 40, 0), 10), ImageSizeError);
}

TEST(CropBlackBars, TooSmallInteriorIsDegenerate) {
  ImageBuffer img = gray_image(40, 40, 0);
  for (int y = 10; y < 20; ++y)
    for (int x = 10; x < 30; ++x) img.set(x, y, {255, 255, 255});
  EXPECT_THROW(crop_black_bars(img), ImageSizeError);
}

TEST(CropBlackBars, RejectsBadThreshold) {
  EXPECT_THROW(crop_black_bars(gray_image(20, 20, 9), -1), Error);
  EXPECT_THROW(crop_black_bars(gray_image(20, 20, 9), 256), Error);
}

TEST(CropBlackBars, Idempotent) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    ImageBuffer img = random_image(48, 40, rng());
    std::uniform_int_distribution<int> bar(0, 10);
    const int t = bar(rng), b = bar(rng), l = bar(rng), r = bar(rng);
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 48; ++x)
        if (y < t || y >= 40 - b || x < l || x >= 48 - r) {
          const auto v = static_cast<std::uint8_t>(rng() % 30);
          img.set(x, y, {v, v, v});
        }
    ImageBuffer once;
    try {
      once = crop_black_bars(img, 12);
    } catch (const ImageSizeError&) {
      continue;
    }
    EXPECT_EQ(crop_black_bars(once, 12), once);
  }
}

TEST(Hsv, PrimaryAndGray) {
  auto red = rgb_to_hsv({255, 0, 0});
  EXPECT_DOUBLE_EQ(red[0], 0.0);
  EXPECT_DOUBLE_EQ(red[1], 1.0);
  EXPECT_DOUBLE_EQ(red[2], 1.0);
  EXPECT_NEAR(rgb_to_hsv({0, 255, 0})[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(rgb_to_hsv({0, 0, 255})[0], 2.0 / 3.0, 1e-15);
  auto gray = rgb_to_hsv({128, 128, 128});
  EXPECT_EQ(gray[0], 0.0);
  EXPECT_EQ(gray[1], 0.0);
  auto black = rgb_to_hsv({0, 0, 0});
  EXPECT_EQ(black[0], 0.0);
  EXPECT_EQ(black[1], 0.0);
}

TEST(Hsv, RoundTripWithinOneLevel) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 1000; ++i) {
    const Rgb8 p = {static_cast<std::uint8_t>(rng() % 256), static_cast<std::uint8_t>(rng() % 256),
                    static_cast<std::uint8_t>(rng() % 256)};
    const auto hsv = rgb_to_hsv(p);
    ASSERT_GE(hsv[0], 0.0);
    ASSERT_LT(hsv[0], 1.0);
    const auto back = hsv_to_rgb(hsv[0], hsv[1], hsv[2]);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(back[c] * 255.0, p[c], 1.0);
  }
}

TEST(Lab, ReferencePoints) {
  const auto white = rgb_to_lab({255, 255, 255});
  EXPECT_NEAR(white[0], 100.0, 1e-4);
  EXPECT_LT(std::abs(white[1]), 0.01);
  EXPECT_LT(std::abs(white[2]), 0.01);
  EXPECT_NEAR(rgb_to_lab({0, 0, 0})[0], 0.0, 1e-12);
}

// Frozen values from scikit-image's rgb2lab (D65, 2 degree).
TEST(Lab, MatchesIndependentReference) {
  const auto gray = rgb_to_lab({119, 119, 119});
  EXPECT_NEAR(gray[0], 50.0344388, 1e-3);
  EXPECT_LT(std::abs(gray[1]), 0.01);
  EXPECT_LT(std::abs(gray[2]), 0.01);
  const auto red = rgb_to_lab({255, 0, 0});
  EXPECT_NEAR(red[0], 53.24058794, 1e-3);
  EXPECT_NEAR(red[1], 80.09230823, 5e-3);
  EXPECT_NEAR(red[2], 67.20275104, 5e-3);
  const auto green = rgb_to_lab({10, 200, 77});
  EXPECT_NEAR(green[0], 70.80632939, 1e-3);
  EXPECT_NEAR(green[1], -66.62549872, 5e-3);
  EXPECT_NEAR(green[2], 48.8599332, 5e-3);
}

TEST(Lab, ChannelRangesAndInverse) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const Rgb8 p = {static_cast<std::uint8_t>(rng() % 256), static_cast<std::uint8_t>(rng() % 256),
                    static_cast<std::uint8_t>(rng() % 256)};
    const auto lab = rgb_to_lab(p);
    ASSERT_GE(lab[0], 0.0);
    ASSERT_LE(lab[0], 100.0 + 1e-9);
    ASSERT_GE(lab[1], -128.0);
    ASSERT_LE(lab[1], 127.0);
    ASSERT_GE(lab[2], -128.0);
    ASSERT_LE(lab[2], 127.0);
    const Rgb8 back = lab_to_rgb(lab[0], lab[1], lab[2]);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(back[c], p[c], 1);
  }
}

TEST(Conversions, IndependentOfPixelOrder) {
  const ImageBuffer img = random_image(30, 20, 8);
  std::vector<std::size_t> perm(img.pixel_count());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));
  ImageBuffer shuffled(30, 20);
  for (std::size_t i = 0; i < perm.size(); ++i)
    shuffled.set(static_cast<int>(i % 30), static_cast<int>(i / 30),
                 img.at(static_cast<int>(perm[i] % 30), static_cast<int>(perm[i] / 30)));
  const auto a = to_lab(img), b = to_lab(shuffled);
  const auto ha = to_hsv(img), hb = to_hsv(shuffled);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    EXPECT_EQ(b.l.values[i], a.l.values[perm[i]]);
    EXPECT_EQ(b.b.values[i], a.b.values[perm[i]]);
    EXPECT_EQ(hb.h.values[i], ha.h.values[perm[i]]);
  }
}

TEST(Resize, IdentityAndConstant) {
  PlaneImage p(10, 7, 3.25);
  p.at(2, 3) = 9.0;
  const auto same = resize_bilinear(p, 10, 7);
  EXPECT_EQ(same.values, p.values);
  const auto c = resize_bilinear(PlaneImage(13, 9, 4.5), 31, 17);
  for (double v : c.values) EXPECT_NEAR(v, 4.5, 1e-12);
}

TEST(Resize, CommutesWithMirroring) {
  PlaneImage p(23, 11);
  std::mt19937_64 rng(10);
  for (double& v : p.values) v = static_cast<double>(rng() % 1000);
  const auto a = flipped(resize_bilinear(p, 40, 29), Flip::Horizontal);
  const auto b = resize_bilinear(flipped(p, Flip::Horizontal), 40, 29);
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
}
