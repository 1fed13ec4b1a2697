#pragma once

// Visual themes: k-means over image embeddings, five tags per cluster, and
// Gini purity of categorical labels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "thumbscope/error.hpp"
#include "thumbscope/features_basic.hpp"
#include "thumbscope/hog.hpp"
#include "thumbscope/image.hpp"
#include "thumbscope/record.hpp"

namespace thumbscope {

inline constexpr int kFallbackEmbeddingDim = 64;
inline constexpr int kTagsPerTheme = 5;

// Keyed by image id, so iteration order is the canonical id order.
using EmbeddingSet = std::map<std::string, std::vector<double>>;

// 16-bin H, S, L* and gradient-orientation histograms, each L1-normalized,
// concatenated and L2-normalized.
inline std::vector<double> fallback_embedding(const ImageBuffer& img) {
  const HsvPlanes hsv = to_hsv(img);
  const LabPlanes lab = to_lab(img);
  std::vector<double> out;
  out.reserve(kFallbackEmbeddingDim);
  auto append = [&out](std::vector<double> h) {
    double s = 0.0;
    for (double v : h) s += v;
    for (double v : h) out.push_back(s > 0.0 ? v / s : 0.0);
  };
  append(histogram(hsv.h.values, 0.0, 1.0, 16));
  append(histogram(hsv.s.values, 0.0, 1.0, 16));
  append(histogram(lab.l.values, 0.0, 100.0, 16));

  std::vector<double> orient(16, 0.0);
  if (img.width() >= 3 && img.height() >= 3) {
    const GradientField g = gradient_field(lab);
    for (std::size_t i = 0; i < g.magnitude.size(); ++i)
      if (g.magnitude[i] > 0.0) orient[orientation_bin(g.orientation[i], 16)] += g.magnitude[i];
  }
  append(std::move(orient));

  double n2 = 0.0;
  for (double v : out) n2 += v * v;
  if (n2 > 0.0)
    for (double& v : out) v /= std::sqrt(n2);
  return out;
}

inline void validate_embeddings(const EmbeddingSet& emb) {
  std::size_t dim = 0;
  for (const auto& [id, v] : emb) {
    if (v.empty()) throw ValidationError("embedding for '" + id + "' is empty");
    if (!dim) dim = v.size();
    if (v.size() != dim)
      throw ValidationError("embedding for '" + id + "' has dimension " + std::to_string(v.size()) +
                            ", expected " + std::to_string(dim));
    for (double x : v)
      if (!std::isfinite(x)) throw ValidationError("embedding for '" + id + "' has a non-finite value");
  }
}

struct KRange {
  int min = 2;
  int max = 8;
};

struct ThemeModel {
  int k = 0;
  std::map<std::string, int> assignment;
  std::vector<std::vector<double>> centroids;
  std::vector<std::vector<std::string>> tags;
  std::vector<bool> tags_padded;  // fewer than five eligible tags were found
  int method = 0;                 // tagging method, 0 while untagged
  double silhouette = 0;
  std::map<int, double> silhouette_by_k;

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> s(static_cast<std::size_t>(k), 0);
    for (const auto& [id, c] : assignment) ++s[static_cast<std::size_t>(c)];
    return s;
  }
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; stable across standard
// library implementations.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

struct KMeansRun {
  std::vector<int> labels;
  std::vector<double> centers;  // k x d
  double inertia = 0;
};

inline KMeansRun kmeans_once(const std::vector<double>& x, std::size_t n, std::size_t d, int k,
                             std::mt19937_64& rng) {
  KMeansRun run;
  run.centers.assign(static_cast<std::size_t>(k) * d, 0.0);
  std::vector<double> closest(n, std::numeric_limits<double>::infinity());

  // k-means++ seeding.
  std::size_t first = std::min(n - 1, static_cast<std::size_t>(unit_draw(rng) * static_cast<double>(n)));
  std::copy_n(x.begin() + first * d, d, run.centers.begin());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], squared_distance(&x[i * d], &run.centers[(c - 1) * d], d));
      total += closest[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = unit_draw(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += closest[i];
        if (acc > target && closest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    std::copy_n(x.begin() + pick * d, d, run.centers.begin() + static_cast<std::size_t>(c) * d);
  }

  run.labels.assign(n, -1);
  std::vector<double> sums(static_cast<std::size_t>(k) * d);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k));
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double dist = squared_distance(&x[i * d], &run.centers[static_cast<std::size_t>(c) * d], d);
        if (dist < bd) bd = dist, best = c;
      }
      if (run.labels[i] != best) changed = true;
      run.labels[i] = best;
      closest[i] = bd;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(run.labels[i]);
      ++counts[c];
      for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += x[i * d + j];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      const auto cu = static_cast<std::size_t>(c);
      std::vector<double> next(d);
      if (counts[cu]) {
        for (std::size_t j = 0; j < d; ++j) next[j] = sums[cu * d + j] / static_cast<double>(counts[cu]);
      } else {
        // Empty cluster: move it onto the point farthest from its center.
        const auto far = static_cast<std::size_t>(std::max_element(closest.begin(), closest.end()) - closest.begin());
        std::copy_n(x.begin() + far * d, d, next.begin());
        closest[far] = 0.0;
        changed = true;
      }
      shift = std::max(shift, std::sqrt(squared_distance(next.data(), &run.centers[cu * d], d)));
      std::copy(next.begin(), next.end(), run.centers.begin() + cu * d);
    }
    if (!changed && shift < 1e-6) break;
  }
  run.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    run.inertia += squared_distance(&x[i * d], &run.centers[static_cast<std::size_t>(run.labels[i]) * d], d);
  return run;
}

// Mean silhouette from a full distance matrix; singleton clusters score 0.
inline double mean_silhouette(const std::vector<double>& dist, std::size_t n, const std::vector<int>& labels,
                              int k) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  std::vector<double> per_cluster(static_cast<std::size_t>(k));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(per_cluster.begin(), per_cluster.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) per_cluster[static_cast<std::size_t>(labels[j])] += dist[i * n + j];
    const auto own = static_cast<std::size_t>(labels[i]);
    if (sizes[own] <= 1) continue;
    const double a = per_cluster[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sizes.size(); ++c)
      if (c != own && sizes[c]) b = std::min(b, per_cluster[c] / static_cast<double>(sizes[c]));
    const double m = std::max(a, b);
    if (m > 0.0 && std::isfinite(b)) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

}  // namespace detail

// k-means on L2-normalized embeddings, k picked by mean silhouette (ties go
// to the smaller k). Cluster indices are numbered by first appearance in id
// order.
inline ThemeModel cluster(const EmbeddingSet& emb, KRange range = {}, std::uint64_t seed = 0, int restarts = 4) {
  if (range.min < 2 || range.max < range.min) throw ConfigError("k range must satisfy 2 <= min <= max");
  validate_embeddings(emb);
  const std::size_t n = emb.size();
  if (n < static_cast<std::size_t>(range.max) * 3)
    throw ClusterError("clustering needs at least " + std::to_string(range.max * 3) + " images, got " +
                       std::to_string(n));
  const std::size_t d = emb.begin()->second.size();
  std::vector<double> x;
  x.reserve(n * d);
  for (const auto& [id, v] : emb) {
    double n2 = 0.0;
    for (double t : v) n2 += t * t;
    const double s = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
    for (double t : v) x.push_back(t * s);
  }

  std::vector<double> dist(n * n, 0.0);
  double max_dist = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::sqrt(detail::squared_distance(&x[i * d], &x[j * d], d));
      dist[i * n + j] = dist[j * n + i] = v;
      max_dist = std::max(max_dist, v);
    }
  if (max_dist <= 0.0) throw ClusterError("all embeddings coincide; silhouette is undefined");

  std::set<std::vector<double>> distinct;
  for (std::size_t i = 0; i < n && distinct.size() <= static_cast<std::size_t>(range.max); ++i)
    distinct.emplace(x.begin() + i * d, x.begin() + (i + 1) * d);

  ThemeModel best;
  detail::KMeansRun best_run;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = range.min; k <= range.max; ++k) {
    if (distinct.size() < static_cast<std::size_t>(k)) break;
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(k)));
    detail::KMeansRun run;
    for (int r = 0; r < std::max(1, restarts); ++r) {
      auto candidate = detail::kmeans_once(x, n, d, k, rng);
      if (r == 0 || candidate.inertia < run.inertia) run = std::move(candidate);
    }
    const double score = detail::mean_silhouette(dist, n, run.labels, k);
    best.silhouette_by_k[k] = score;
    if (score > best_score) {
      best_score = score;
      best.k = k;
      best_run = std::move(run);
    }
  }

  std::vector<int> remap(static_cast<std::size_t>(best.k), -1);
  int next = 0;
  for (int l : best_run.labels)
    if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next++;
  for (auto& r : remap)
    if (r < 0) r = next++;
  best.centroids.assign(static_cast<std::size_t>(best.k), {});
  for (int c = 0; c < best.k; ++c) {
    const auto begin = best_run.centers.begin() + static_cast<std::ptrdiff_t>(c) * static_cast<std::ptrdiff_t>(d);
    best.centroids[static_cast<std::size_t>(remap[static_cast<std::size_t>(c)])].assign(begin, begin + static_cast<std::ptrdiff_t>(d));
  }
  std::size_t i = 0;
  for (const auto& [id, v] : emb) best.assignment[id] = remap[static_cast<std::size_t>(best_run.labels[i++])];
  best.silhouette = best_score;
  return best;
}

using TagLists = std::map<std::string, std::vector<std::string>>;

struct TagWeight {
  std::string tag;
  int cluster = 0;
  long long tf = 0;  // images in the cluster carrying the tag
  int df = 0;        // clusters containing the tag
  int n = 0;         // cluster count
  double w = 0;      // tf * ln(n / df)
};

struct TagOptions {
  int method = 2;
  double ubiquity_cap = 0.5;
};

struct TagStatistics {
  std::vector<std::map<std::string, long long>> tf;  // per cluster
  std::map<std::string, long long> corpus_count;     // images carrying the tag
  std::size_t images = 0;
};

// Tags are counted once per image.
inline TagStatistics tag_statistics(const ThemeModel& model, const TagLists& tags) {
  TagStatistics s;
  s.tf.resize(static_cast<std::size_t>(model.k));
  for (const auto& [id, c] : model.assignment) {
    const auto it = tags.find(id);
    if (it == tags.end()) throw ValidationError("no tag list for image '" + id + "'");
    const std::set<std::string> unique(it->second.begin(), it->second.end());
    for (const auto& t : unique) {
      ++s.tf[static_cast<std::size_t>(c)][t];
      ++s.corpus_count[t];
    }
    ++s.images;
  }
  return s;
}

inline std::vector<TagWeight> tag_weights(const TagStatistics& s) {
  const int n = static_cast<int>(s.tf.size());
  std::map<std::string, int> df;
  for (const auto& cluster : s.tf)
    for (const auto& [tag, count] : cluster)
      if (count > 0) ++df[tag];
  std::vector<TagWeight> out;
  for (int c = 0; c < n; ++c)
    for (const auto& [tag, count] : s.tf[static_cast<std::size_t>(c)]) {
      const int d = df[tag];
      const double w = d == n ? 0.0 : static_cast<double>(count) * std::log(static_cast<double>(n) / d);
      out.push_back({tag, c, count, d, n, w});
    }
  return out;
}

namespace detail {

template <class Score>
std::vector<std::string> top_tags(const std::map<std::string, long long>& tf, Score score,
                                  const std::set<std::string>& excluded) {
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& [tag, count] : tf)
    if (count > 0 && !excluded.count(tag)) ranked.emplace_back(tag, score(tag, count));
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && out.size() < kTagsPerTheme; ++i) out.push_back(ranked[i].first);
  return out;
}

}  // namespace detail

// Method 1: most frequent tags. Method 2: same, skipping tags carried by at
// least ubiquity_cap of all images. Method 3: highest tf-idf weight.
// Ties go to the lexicographically smaller tag. Short lists are padded with
// the cluster's remaining most frequent tags and flagged; method 3 never pads
// with tags present in every cluster.
inline ThemeModel tag_clusters(ThemeModel model, const TagLists& tags, const TagOptions& opt = {}) {
  if (opt.method < 1 || opt.method > 3) throw ConfigError("tagging method must be 1, 2 or 3");
  if (!(opt.ubiquity_cap > 0.0 && opt.ubiquity_cap <= 1.0)) throw ConfigError("ubiquity cap must lie in (0, 1]");
  const TagStatistics s = tag_statistics(model, tags);
  model.method = opt.method;
  model.tags.assign(static_cast<std::size_t>(model.k), {});
  model.tags_padded.assign(static_cast<std::size_t>(model.k), false);

  std::set<std::string> ubiquitous;
  for (const auto& [tag, count] : s.corpus_count)
    if (static_cast<double>(count) >= opt.ubiquity_cap * static_cast<double>(s.images)) ubiquitous.insert(tag);
  std::map<std::pair<int, std::string>, double> weight;
  std::set<std::string> everywhere;
  for (const auto& w : tag_weights(s)) {
    weight[{w.cluster, w.tag}] = w.w;
    if (w.df == w.n) everywhere.insert(w.tag);
  }

  for (int c = 0; c < model.k; ++c) {
    const auto& tf = s.tf[static_cast<std::size_t>(c)];
    auto frequency = [](const std::string&, long long count) { return static_cast<double>(count); };
    std::vector<std::string> chosen;
    std::set<std::string> pad_excluded;
    if (opt.method == 1) {
      chosen = detail::top_tags(tf, frequency, {});
    } else if (opt.method == 2) {
      chosen = detail::top_tags(tf, frequency, ubiquitous);
    } else {
      chosen = detail::top_tags(tf, [&](const std::string& t, long long) { return weight.at({c, t}); }, everywhere);
      pad_excluded = everywhere;
    }
    if (chosen.size() < kTagsPerTheme) {
      model.tags_padded[static_cast<std::size_t>(c)] = true;
      pad_excluded.insert(chosen.begin(), chosen.end());
      for (const auto& t : detail::top_tags(tf, frequency, pad_excluded)) {
        if (chosen.size() >= kTagsPerTheme) break;
        chosen.push_back(t);
      }
    }
    model.tags[static_cast<std::size_t>(c)] = std::move(chosen);
  }
  return model;
}

using CategoricalDistribution = std::map<std::string, long long>;

// 1 - sum of squared class proportions.
inline double gini(const CategoricalDistribution& dist) {
  long double total = 0;
  for (const auto& [label, count] : dist) {
    if (count < 0) throw ValidationError("negative count for class '" + label + "'");
    total += count;
  }
  if (total <= 0) throw ValidationError("gini of an empty distribution");
  long double sum_sq = 0;
  for (const auto& [label, count] : dist) {
    const long double p = count / total;
    sum_sq += p * p;
  }
  return static_cast<double>(1.0L - sum_sq);
}

struct DistributionRow {
  std::string group;
  std::string theme;
  long long count = 0;
  double fraction = 0;  // of the group's images
  double ratio = 0;     // count over the group's smallest nonzero theme count
};

inline std::string record_field(const ThumbnailRecord& r, const std::string& field) {
  if (field == "group") return r.group;
  if (field == "event") return r.event;
  if (field == "channel") return r.channel;
  if (field == "all") return "all";
  throw ConfigError("unknown grouping field '" + field + "' (group, event, channel, all)");
}

// Dense table: every (group, theme) pair appears, sorted by group then theme.
inline std::vector<DistributionRow> theme_distribution(const std::map<std::string, std::string>& themes,
                                                       std::span<const ThumbnailRecord> records,
                                                       const std::string& group_by = "group") {
  record_field(ThumbnailRecord{}, group_by);
  std::map<std::string, const ThumbnailRecord*> by_id;
  for (const auto& r : records) by_id[r.image_id] = &r;
  std::map<std::string, std::map<std::string, long long>> counts;
  std::set<std::string> all_themes;
  for (const auto& [id, theme] : themes) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("no record for themed image '" + id + "'");
    ++counts[record_field(*it->second, group_by)][theme];
    all_themes.insert(theme);
  }
  std::vector<DistributionRow> out;
  for (const auto& [group, per_theme] : counts) {
    long long total = 0, smallest = 0;
    for (const auto& [t, c] : per_theme) {
      total += c;
      if (c > 0 && (smallest == 0 || c < smallest)) smallest = c;
    }
    for (const auto& theme : all_themes) {
      const auto it = per_theme.find(theme);
      const long long c = it == per_theme.end() ? 0 : it->second;
      out.push_back({group, theme, c, static_cast<double>(c) / static_cast<double>(total),
                     static_cast<double>(c) / static_cast<double>(smallest)});
    }
  }
  return out;
}

}  // namespace thumbscope
