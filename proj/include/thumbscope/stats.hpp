#pragma once

// Welch t-tests, Spearman correlations, power-law view fits and the
// feature-by-theme comparison tables built from them.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "thumbscope/error.hpp"
#include "thumbscope/features.hpp"
#include "thumbscope/numeric.hpp"
#include "thumbscope/record.hpp"

namespace thumbscope {

namespace detail {

// Modified Lentz evaluation of the incomplete beta continued fraction.
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 20000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// P(|T| >= |t|) for Student's t with df degrees of freedom.
inline double student_t_two_sided(double t, double df) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return std::clamp(incomplete_beta(0.5 * df, 0.5, df / (df + t * t)), 0.0, 1.0);
}

struct TTestResult {
  double t = 0;
  double df = 0;
  double p = 1;
  double mean_a = 0;
  double mean_b = 0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  bool degenerate = false;  // both samples have zero variance
};

inline TTestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ValidationError("t-test needs at least 2 samples per group");
  TTestResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  const double va = sample_variance(a) / static_cast<double>(a.size());
  const double vb = sample_variance(b) / static_cast<double>(b.size());
  const double se2 = va + vb;
  if (se2 <= 0.0) {
    r.degenerate = true;
    r.df = static_cast<double>(a.size() + b.size() - 2);
    if (r.mean_a == r.mean_b) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = r.mean_a > r.mean_b ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = (r.mean_a - r.mean_b) / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  r.p = student_t_two_sided(r.t, r.df);
  return r;
}

// Difference over sum; nullopt when the sum is numerically zero.
inline std::optional<double> normalized_diff(double mean_a, double mean_b) {
  const double s = mean_a + mean_b;
  if (std::abs(s) < 1e-12) return std::nullopt;
  return (mean_a - mean_b) / s;
}

// 1-based ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Pearson correlation; nullopt when either input has zero variance.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct SpearmanResult {
  double rho = 0;
  double p = 1;
  std::size_t n = 0;
};

// nullopt when either rank vector is constant.
inline std::optional<SpearmanResult> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman inputs differ in length");
  if (x.size() < 3) throw ValidationError("spearman needs at least 3 pairs");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const auto rho = pearson(rx, ry);
  if (!rho) return std::nullopt;
  SpearmanResult r{*rho, 0.0, x.size()};
  const double df = static_cast<double>(x.size()) - 2.0;
  const double denom = 1.0 - *rho * *rho;
  r.p = denom <= 0.0 ? 0.0 : student_t_two_sided(*rho * std::sqrt(df / denom), df);
  return r;
}

struct PowerLawFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 1;
  std::size_t n = 0;
};

// OLS of log10(views) on log10(rank) after sorting views descending.
inline PowerLawFit powerlaw_fit(std::span<const double> views) {
  if (views.size() < 10) throw FitError("power-law fit needs at least 10 videos");
  std::vector<double> sorted(views.begin(), views.end());
  for (double v : sorted)
    if (!(v >= 1.0)) throw FitError("power-law fit needs every view count >= 1");
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::vector<double> x(sorted.size()), y(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    x[i] = std::log10(static_cast<double>(i + 1));
    y[i] = std::log10(sorted[i]);
  }
  const LineFit f = fit_line(x, y);
  return {f.slope, f.intercept, f.r_squared, f.n};
}

struct EngagementRates {
  double like_rate = 0;
  double comment_rate = 0;
};

inline std::optional<EngagementRates> engagement_rates(const ThumbnailRecord& r) {
  if (r.views <= 0) return std::nullopt;
  const double v = static_cast<double>(r.views);
  return EngagementRates{static_cast<double>(r.likes) / v, static_cast<double>(r.comments) / v};
}

// One image joined with its group, theme and metadata.
struct Observation {
  std::string image_id;
  std::string group;
  std::string event;
  std::string theme;
  std::array<double, kFeatureCount> features{};
  double views = 0;
  double likes = 0;
  double comments = 0;
};

struct ComparisonCell {
  std::size_t feature = 0;
  std::string theme;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  bool sufficient = false;  // both groups have >= 2 images in the theme
  TTestResult test;
  std::optional<double> normalized_diff;
  bool significant = false;
  std::string larger_group;  // empty on ties or insufficient data
};

struct ComparisonMatrix {
  std::string group_a;
  std::string group_b;
  std::vector<std::string> themes;
  std::vector<ComparisonCell> cells;  // feature-major, themes in order

  const ComparisonCell& at(std::size_t feature, std::size_t theme) const {
    return cells[feature * themes.size() + theme];
  }
};

struct CompareOptions {
  double alpha = 0.05;
  std::optional<std::string> group_a;
  std::optional<std::string> group_b;
};

inline std::vector<std::string> distinct_themes(std::span<const Observation> obs) {
  std::set<std::string> s;
  for (const auto& o : obs) s.insert(o.theme);
  return {s.begin(), s.end()};
}

// Without configured groups the corpus must hold exactly two; group_a is
// the lexicographically first.
inline std::pair<std::string, std::string> resolve_groups(std::span<const Observation> obs,
                                                          const CompareOptions& opt) {
  std::set<std::string> groups;
  for (const auto& o : obs) groups.insert(o.group);
  if (opt.group_a && opt.group_b) {
    if (*opt.group_a == *opt.group_b) throw ConfigError("group_a and group_b must differ");
    for (const auto* g : {&*opt.group_a, &*opt.group_b})
      if (!groups.count(*g)) throw ValidationError("group '" + *g + "' has no images");
    return {*opt.group_a, *opt.group_b};
  }
  if (opt.group_a || opt.group_b) throw ConfigError("group_a and group_b must be configured together");
  if (groups.size() != 2)
    throw ValidationError("comparison needs exactly two groups, found " + std::to_string(groups.size()) +
                          "; configure group_a and group_b");
  return {*groups.begin(), *std::next(groups.begin())};
}

inline ComparisonMatrix compare_matrix(std::span<const Observation> obs, const CompareOptions& opt = {}) {
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  ComparisonMatrix m;
  std::tie(m.group_a, m.group_b) = resolve_groups(obs, opt);
  m.themes = distinct_themes(obs);
  m.cells.reserve(kFeatureCount * m.themes.size());
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    for (const auto& theme : m.themes) {
      std::vector<double> a, b;
      for (const auto& o : obs) {
        if (o.theme != theme) continue;
        if (o.group == m.group_a) a.push_back(o.features[f]);
        else if (o.group == m.group_b) b.push_back(o.features[f]);
      }
      ComparisonCell c;
      c.feature = f;
      c.theme = theme;
      c.n_a = a.size();
      c.n_b = b.size();
      c.sufficient = a.size() >= 2 && b.size() >= 2;
      if (c.sufficient) {
        c.test = welch_t(a, b);
        c.normalized_diff = normalized_diff(c.test.mean_a, c.test.mean_b);
        c.significant = c.test.p < opt.alpha;
        if (c.test.mean_a > c.test.mean_b) c.larger_group = m.group_a;
        else if (c.test.mean_b > c.test.mean_a) c.larger_group = m.group_b;
      }
      m.cells.push_back(std::move(c));
    }
  return m;
}

// Fraction of themes whose normalized difference shares the majority sign.
// Zero differences count against consistency; nullopt when no cell is usable.
inline std::optional<double> sign_consistency(const ComparisonMatrix& m, std::size_t feature) {
  int pos = 0, neg = 0, usable = 0;
  for (std::size_t t = 0; t < m.themes.size(); ++t) {
    const auto& c = m.at(feature, t);
    if (!c.sufficient || !c.normalized_diff) continue;
    ++usable;
    if (*c.normalized_diff > 0) ++pos;
    else if (*c.normalized_diff < 0) ++neg;
  }
  if (!usable) return std::nullopt;
  return static_cast<double>(std::max(pos, neg)) / usable;
}

inline std::optional<double> metric_value(const Observation& o, const std::string& metric) {
  if (metric == "views") return o.views;
  if (metric == "likes") return o.likes;
  if (metric == "comments") return o.comments;
  if (metric == "like_rate") return o.views > 0 ? std::optional(o.likes / o.views) : std::nullopt;
  if (metric == "comment_rate") return o.views > 0 ? std::optional(o.comments / o.views) : std::nullopt;
  throw ConfigError("unknown metric '" + metric + "' (views, likes, comments, like_rate, comment_rate)");
}

struct CorrelateOptions {
  std::vector<std::string> metrics{"views", "likes", "comments"};
  std::size_t min_n = 3;
};

struct CorrelationEntry {
  std::string metric;
  std::string group;
  std::string event;
  std::string theme;
  std::size_t feature = 0;
  std::size_t n = 0;
  bool sufficient = false;
  std::optional<SpearmanResult> result;  // nullopt: insufficient or constant ranks
};

// One entry per metric x (group, event, theme) stratum x feature.
inline std::vector<CorrelationEntry> correlate_metrics(std::span<const Observation> obs,
                                                       const CorrelateOptions& opt = {}) {
  if (opt.min_n < 3) throw ConfigError("correlation minimum n must be at least 3");
  std::map<std::array<std::string, 3>, std::vector<const Observation*>> strata;
  for (const auto& o : obs) strata[{o.group, o.event, o.theme}].push_back(&o);
  std::vector<CorrelationEntry> out;
  out.reserve(opt.metrics.size() * strata.size() * kFeatureCount);
  for (const auto& metric : opt.metrics)
    for (const auto& [key, members] : strata) {
      std::vector<double> y;
      std::vector<const Observation*> used;
      for (const Observation* o : members)
        if (const auto v = metric_value(*o, metric)) {
          y.push_back(*v);
          used.push_back(o);
        }
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        CorrelationEntry e{metric, key[0], key[1], key[2], f, used.size(), used.size() >= opt.min_n, std::nullopt};
        if (e.sufficient) {
          std::vector<double> x;
          x.reserve(used.size());
          for (const Observation* o : used) x.push_back(o->features[f]);
          e.result = spearman(x, y);
        }
        out.push_back(std::move(e));
      }
    }
  return out;
}

}  // namespace thumbscope
