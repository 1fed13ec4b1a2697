#pragma once

// First-layer-style filter responses and the features built on them:
// left-right / up-down symmetry, sparseness and variability.
//
// Bank file layout (little-endian):
//   "FBNK" u32 version=1 u32 n u32 k u32 stride u32 pool_rows u32 pool_cols
//   then n*k*k*3 float32, filter-major, row-major, channel-interleaved.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "thumbscope/codec.hpp"
#include "thumbscope/error.hpp"
#include "thumbscope/image.hpp"
#include "thumbscope/numeric.hpp"

namespace thumbscope {

static_assert(std::endian::native == std::endian::little, "bank I/O assumes a little-endian host");

// Every image is resampled to this square size before filtering. With k=11
// and stride 4 the sampling grid covers it edge to edge, which keeps the
// responses mirror-equivariant.
inline constexpr int kFilterInputSize = 227;

struct FilterBank {
  int count = 0;
  int size = 0;  // k, odd
  int stride = 1;
  int pool_rows = 1;
  int pool_cols = 1;
  std::vector<float> weights;

  std::size_t filter_len() const noexcept { return static_cast<std::size_t>(size) * size * 3; }
  std::span<const float> filter(int i) const { return {weights.data() + filter_len() * i, filter_len()}; }
  std::span<float> filter(int i) { return {weights.data() + filter_len() * i, filter_len()}; }
};

// Non-negative pooled response maps, map-major.
struct ResponseStack {
  int count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  std::span<const double> map(int i) const {
    return {values.data() + static_cast<std::size_t>(rows) * cols * i, static_cast<std::size_t>(rows) * cols};
  }
  double at(int map, int r, int c) const {
    return values[(static_cast<std::size_t>(map) * rows + r) * cols + c];
  }
};

inline void validate_bank_shape(const FilterBank& b) {
  if (b.size <= 0 || b.size % 2 == 0) throw FormatError("filter size must be odd, got " + std::to_string(b.size));
  if (b.count < 8) throw FormatError("bank needs at least 8 filters, got " + std::to_string(b.count));
  if (b.stride < 1) throw FormatError("stride must be positive");
  if (b.pool_rows < 1 || b.pool_cols < 1) throw FormatError("pool grid must be positive");
  if (b.size > kFilterInputSize) throw FormatError("filter larger than the input size");
  if (b.weights.size() != b.filter_len() * b.count) throw FormatError("weight count does not match shape");
  for (float w : b.weights)
    if (!std::isfinite(w)) throw FormatError("non-finite filter weight");
}

// Subtracts the per-channel spatial mean from every filter.
inline void enforce_zero_mean(FilterBank& b) {
  const std::size_t taps = static_cast<std::size_t>(b.size) * b.size;
  for (int f = 0; f < b.count; ++f) {
    auto w = b.filter(f);
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < taps; ++t) s += w[t * 3 + c];
      const double m = s / static_cast<double>(taps);
      for (std::size_t t = 0; t < taps; ++t) w[t * 3 + c] = static_cast<float>(w[t * 3 + c] - m);
    }
  }
}

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_filter_bank(const FilterBank& b) {
  std::vector<std::uint8_t> out = {'F', 'B', 'N', 'K'};
  detail::put_u32(out, 1);
  for (int v : {b.count, b.size, b.stride, b.pool_rows, b.pool_cols}) detail::put_u32(out, static_cast<std::uint32_t>(v));
  const std::size_t off = out.size();
  out.resize(off + b.weights.size() * 4);
  std::memcpy(out.data() + off, b.weights.data(), b.weights.size() * 4);
  return out;
}

inline FilterBank parse_filter_bank(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t header = 4 + 6 * 4;
  if (bytes.size() < header) throw FormatError("filter bank truncated: " + std::to_string(bytes.size()) + " bytes");
  if (std::memcmp(bytes.data(), "FBNK", 4) != 0) throw FormatError("bad filter bank magic");
  if (detail::get_u32(bytes, 4) != 1) throw FormatError("unsupported filter bank version");
  FilterBank b;
  const auto field = [&](int i) {
    const std::uint32_t v = detail::get_u32(bytes, 8 + 4 * i);
    if (v > 1u << 20) throw FormatError("filter bank field out of range");
    return static_cast<int>(v);
  };
  b.count = field(0);
  b.size = field(1);
  b.stride = field(2);
  b.pool_rows = field(3);
  b.pool_cols = field(4);
  if (b.size % 2 == 0) throw FormatError("filter size must be odd, got " + std::to_string(b.size));
  const std::size_t n = b.filter_len() * b.count;
  if (bytes.size() != header + n * 4)
    throw FormatError("filter bank payload is " + std::to_string(bytes.size() - header) + " bytes, expected " +
                      std::to_string(n * 4));
  b.weights.resize(n);
  std::memcpy(b.weights.data(), bytes.data() + header, n * 4);
  validate_bank_shape(b);
  enforce_zero_mean(b);
  return b;
}

inline FilterBank load_filter_bank(const std::filesystem::path& path) {
  return parse_filter_bank(read_file_bytes(path));
}

inline void save_filter_bank(const FilterBank& b, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_filter_bank(b));
}

namespace detail {

inline void normalize_filter(std::span<float> w) {
  double s = 0.0;
  for (float v : w) s += static_cast<double>(v) * v;
  if (s <= 0.0) return;
  const double inv = 1.0 / std::sqrt(s);
  for (float& v : w) v = static_cast<float>(v * inv);
}

}  // namespace detail

// 48 luminance Gabor filters (8 orientations x 3 scales x phases +-pi/4) and
// 12 color-opponent center-surround filters, 11x11x3, stride 4, pooled to
// 24x24. The +-pi/4 phase pair makes the set closed under both image flips.
inline FilterBank default_filter_bank() {
  FilterBank b;
  b.count = 60;
  b.size = 11;
  b.stride = 4;
  b.pool_rows = 24;
  b.pool_cols = 24;
  b.weights.assign(b.filter_len() * b.count, 0.f);
  const int half = b.size / 2;
  constexpr std::array<double, 3> luma_w = {0.299, 0.587, 0.114};
  constexpr std::array<std::array<double, 2>, 3> gabor_scales = {{{1.5, 3.5}, {2.2, 5.5}, {3.0, 8.0}}};
  constexpr std::array<double, 2> phases = {std::numbers::pi / 4, -std::numbers::pi / 4};

  int f = 0;
  for (const auto& [sigma, wavelength] : gabor_scales)
    for (int o = 0; o < 8; ++o) {
      const double theta = o * std::numbers::pi / 8;
      for (double phase : phases) {
        auto w = b.filter(f++);
        for (int i = 0; i < b.size; ++i)
          for (int j = 0; j < b.size; ++j) {
            const double x = j - half, y = i - half;
            const double env = std::exp(-(x * x + y * y) / (2 * sigma * sigma));
            const double carrier =
                std::cos(2 * std::numbers::pi * (x * std::cos(theta) + y * std::sin(theta)) / wavelength + phase);
            for (int c = 0; c < 3; ++c)
              w[(static_cast<std::size_t>(i) * b.size + j) * 3 + c] = static_cast<float>(env * carrier * luma_w[c]);
          }
      }
    }

  constexpr std::array<std::array<double, 2>, 3> dog_scales = {{{1.0, 2.0}, {1.5, 3.0}, {2.0, 4.0}}};
  const std::array<std::array<double, 3>, 2> opponents = {
      {{1 / std::numbers::sqrt2, -1 / std::numbers::sqrt2, 0.0}, {-0.5 / 1.224744871391589, -0.5 / 1.224744871391589, 1 / 1.224744871391589}}};
  for (const auto& opp : opponents)
    for (const auto& [sc, ss] : dog_scales)
      for (double polarity : {1.0, -1.0}) {
        auto w = b.filter(f++);
        double zc = 0.0, zs = 0.0;
        for (int i = 0; i < b.size; ++i)
          for (int j = 0; j < b.size; ++j) {
            const double r2 = (i - half) * (i - half) + (j - half) * (j - half);
            zc += std::exp(-r2 / (2 * sc * sc));
            zs += std::exp(-r2 / (2 * ss * ss));
          }
        for (int i = 0; i < b.size; ++i)
          for (int j = 0; j < b.size; ++j) {
            const double r2 = (i - half) * (i - half) + (j - half) * (j - half);
            const double dog = std::exp(-r2 / (2 * sc * sc)) / zc - std::exp(-r2 / (2 * ss * ss)) / zs;
            for (int c = 0; c < 3; ++c)
              w[(static_cast<std::size_t>(i) * b.size + j) * 3 + c] = static_cast<float>(polarity * dog * opp[c]);
          }
      }

  enforce_zero_mean(b);
  for (int i = 0; i < b.count; ++i) detail::normalize_filter(b.filter(i));
  return b;
}

namespace detail {

// Start/end (half-open) of adaptive pooling window i when mapping n -> out.
inline std::pair<int, int> pool_window(int i, int n, int out) {
  const int start = static_cast<int>((static_cast<long long>(i) * n) / out);
  const int end = static_cast<int>((static_cast<long long>(i + 1) * n + out - 1) / out);
  return {start, end};
}

}  // namespace detail

// Valid strided convolution of the resampled image with every filter,
// rectified and max-pooled onto the bank's pool grid.
inline ResponseStack respond(const RgbFloatImage& img, const FilterBank& bank) {
  const RgbFloatImage in = resize_bilinear(img, kFilterInputSize, kFilterInputSize);
  const int k = bank.size, s = bank.stride;
  if (in.width < k || in.height < k) throw ImageSizeError("image smaller than filter after resize");
  const int out_w = (in.width - k) / s + 1;
  const int out_h = (in.height - k) / s + 1;
  // Center the sampling grid when it does not tile the input exactly.
  const int off_x = ((in.width - k) % s) / 2;
  const int off_y = ((in.height - k) % s) / 2;
  const std::size_t len = bank.filter_len();
  const std::size_t row_len = static_cast<std::size_t>(k) * 3;

  // Filter-major weights transposed to tap-major so the inner loop runs
  // across filters; each filter still sums its taps in order.
  const std::size_t nf = static_cast<std::size_t>(bank.count);
  std::vector<double> wt(len * nf);
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t t = 0; t < len; ++t) wt[t * nf + f] = bank.weights[f * len + t];

  std::vector<double> conv(nf * out_w * out_h);
  std::vector<float> patch(len);
  std::vector<double> acc(nf);
  for (int oy = 0; oy < out_h; ++oy)
    for (int ox = 0; ox < out_w; ++ox) {
      const int y0 = off_y + oy * s, x0 = off_x + ox * s;
      for (int r = 0; r < k; ++r)
        std::memcpy(patch.data() + r * row_len, &in.values[(static_cast<std::size_t>(y0 + r) * in.width + x0) * 3],
                    row_len * sizeof(float));
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t t = 0; t < len; ++t) {
        const double p = patch[t];
        const double* w = &wt[t * nf];
        for (std::size_t f = 0; f < nf; ++f) acc[f] += w[f] * p;
      }
      for (std::size_t f = 0; f < nf; ++f)
        conv[(f * out_h + oy) * out_w + ox] = acc[f] > 0.0 ? acc[f] : 0.0;
    }

  ResponseStack st{bank.count, bank.pool_rows, bank.pool_cols,
                   std::vector<double>(static_cast<std::size_t>(bank.count) * bank.pool_rows * bank.pool_cols)};
  for (int f = 0; f < bank.count; ++f)
    for (int pr = 0; pr < bank.pool_rows; ++pr) {
      const auto [r0, r1] = detail::pool_window(pr, out_h, bank.pool_rows);
      for (int pc = 0; pc < bank.pool_cols; ++pc) {
        const auto [c0, c1] = detail::pool_window(pc, out_w, bank.pool_cols);
        double m = 0.0;
        for (int r = r0; r < r1; ++r)
          for (int c = c0; c < c1; ++c) m = std::max(m, conv[(static_cast<std::size_t>(f) * out_h + r) * out_w + c]);
        st.values[(static_cast<std::size_t>(f) * bank.pool_rows + pr) * bank.pool_cols + pc] = m;
      }
    }
  return st;
}

inline ResponseStack respond(const ImageBuffer& img, const FilterBank& bank) { return respond(to_float(img), bank); }

// Per-cell maximum over all maps.
inline PlaneImage max_over_filters(const ResponseStack& st) {
  PlaneImage out(st.cols, st.rows, 0.0);
  for (int f = 0; f < st.count; ++f)
    for (int r = 0; r < st.rows; ++r)
      for (int c = 0; c < st.cols; ++c) out.at(c, r) = std::max(out.at(c, r), st.at(f, r, c));
  return out;
}

// 1 - sum|A - A'| / sum max(A, A'), with 0/0 read as perfect symmetry.
inline double symmetry_score(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::abs(a[i] - b[i]);
    den += std::max(a[i], b[i]);
  }
  return den > 0.0 ? 1.0 - num / den : 1.0;
}

inline double symmetry_score(const PlaneImage& a, const PlaneImage& b) { return symmetry_score(a.values, b.values); }

inline double symmetry_score(const ResponseStack& a, const ResponseStack& b) {
  return symmetry_score(a.values, b.values);
}

struct SymmetryFeatures {
  double lr = 1;
  double ud = 1;
};

struct SparsenessFeatures {
  double sparseness = 0;
  double variability = 0;
};

// Every map of the image against the same map of its mirror, cell by cell.
// The flipped stacks are not flipped back: with a mirror-closed bank a map of
// the mirror is the mirror-paired map of the original seen from the mirrored
// position.
inline SymmetryFeatures symmetry_features(const RgbFloatImage& img, const FilterBank& bank,
                                          const ResponseStack* precomputed = nullptr) {
  const ResponseStack a = precomputed ? *precomputed : respond(img, bank);
  const ResponseStack lr = respond(flipped(img, Flip::Horizontal), bank);
  const ResponseStack ud = respond(flipped(img, Flip::Vertical), bank);
  return {symmetry_score(a, lr), symmetry_score(a, ud)};
}

inline SymmetryFeatures symmetry_features(const ImageBuffer& img, const FilterBank& bank) {
  return symmetry_features(to_float(img), bank);
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

// Sparseness: median over maps of each map's population variance.
// Variability: population variance of every pooled value across all maps.
inline SparsenessFeatures sparseness_variability(const ResponseStack& st) {
  std::vector<double> per_map;
  per_map.reserve(st.count);
  for (int f = 0; f < st.count; ++f) per_map.push_back(population_variance(st.map(f)));
  return {median(std::move(per_map)), population_variance(st.values)};
}

struct FilterBankFeatures {
  SymmetryFeatures symmetry;
  SparsenessFeatures sparseness;
};

inline FilterBankFeatures filterbank_features(const RgbFloatImage& img, const FilterBank& bank) {
  const ResponseStack st = respond(img, bank);
  return {symmetry_features(img, bank, &st), sparseness_variability(st)};
}

}  // namespace thumbscope
