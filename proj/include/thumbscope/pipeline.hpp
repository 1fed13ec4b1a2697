#pragma once

// Run configuration and the report-producing commands: ingest, extract,
// themes, compare, performance, temporal, inspect, validate-sidecar.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "thumbscope/corpus.hpp"
#include "thumbscope/csv.hpp"
#include "thumbscope/error.hpp"
#include "thumbscope/features.hpp"
#include "thumbscope/stats.hpp"
#include "thumbscope/svg.hpp"
#include "thumbscope/themes.hpp"

namespace thumbscope {

namespace fs = std::filesystem;

struct ExtractSettings {
  double bar_threshold = kDefaultBarThreshold;
  bool crop_bars = true;
  bool spectrum_resize = true;
  int spectrum_size = 512;
  double fit_min = 10;
  double fit_max = 256;
  double max_failure_fraction = 0.1;
  unsigned workers = 0;  // 0: hardware concurrency, at most 8
};

struct ThemeSettings {
  int k_min = 2;
  int k_max = 8;
  bool per_event = false;
  bool fallback_embedding = false;
  int method = 2;
  double ubiquity_cap = 0.5;
  int restarts = 4;
  std::string categorical = "setting";
  std::string distribution_by = "group";
};

struct CompareSettings {
  double alpha = 0.05;
  std::optional<std::string> group_a;
  std::optional<std::string> group_b;
};

struct PerformanceSettings {
  std::vector<std::string> metrics{"views", "likes", "comments"};
  std::size_t min_n = 3;
  int rate_bins = 20;
};

struct InspectSettings {
  std::string feature = "symmetry_lr";
  std::size_t k = 10;
};

struct IngestEvent {
  std::string name;
  std::string query;
  std::string published_after;
};

struct IngestChannel {
  std::string id;
  std::string group;
};

struct IngestSettings {
  std::string preset;
  std::vector<IngestEvent> events;
  std::vector<IngestChannel> channels;
  std::size_t per_channel = 300;
  std::string api_key_env = kApiKeyVariable;
  std::string base_url = "https://www.googleapis.com/youtube/v3";
  std::string thumbnails_dir = "thumbnails";
  unsigned parallelism = 8;
};

struct RunConfig {
  fs::path manifest = "manifest.jsonl";
  std::optional<fs::path> embeddings;
  std::optional<fs::path> tags;
  std::optional<fs::path> annotations;
  std::optional<fs::path> filter_bank;
  fs::path output_dir = "out";
  std::uint64_t seed = 0;
  ExtractSettings extract;
  ThemeSettings themes;
  CompareSettings compare;
  PerformanceSettings performance;
  InspectSettings inspect;
  IngestSettings ingest;
};

// ------------------------------------------------------------ config file

namespace detail {

inline void only_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

inline fs::path resolve_path(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

}  // namespace detail

// Relative paths are taken relative to base_dir (the config file's folder).
inline RunConfig parse_config(const nlohmann::json& j, const fs::path& base_dir) {
  using detail::read_opt;
  detail::only_keys(j, "config", {"manifest", "sidecars", "filter_bank", "output_dir", "seed", "extract", "themes",
                                  "compare", "performance", "inspect", "ingest"});
  RunConfig c;
  std::string s;
  if (j.contains("manifest")) {
    read_opt(j, "manifest", s, "config");
    c.manifest = s;
  }
  c.manifest = detail::resolve_path(base_dir, c.manifest);
  if (j.contains("output_dir")) {
    read_opt(j, "output_dir", s, "config");
    c.output_dir = s;
  }
  c.output_dir = detail::resolve_path(base_dir, c.output_dir);
  if (j.contains("filter_bank")) {
    read_opt(j, "filter_bank", s, "config");
    c.filter_bank = detail::resolve_path(base_dir, s);
  }
  read_opt(j, "seed", c.seed, "config");
  if (const auto it = j.find("sidecars"); it != j.end()) {
    detail::only_keys(*it, "sidecars", {"embeddings", "tags", "annotations"});
    for (auto [key, slot] : {std::pair{"embeddings", &c.embeddings}, {"tags", &c.tags}, {"annotations", &c.annotations}})
      if (it->contains(key)) {
        read_opt(*it, key, s, "sidecars");
        *slot = detail::resolve_path(base_dir, s);
      }
  }
  if (const auto it = j.find("extract"); it != j.end()) {
    detail::only_keys(*it, "extract", {"bar_threshold", "crop_bars", "spectrum_resize", "spectrum_size", "fit_min",
                                       "fit_max", "max_failure_fraction", "workers"});
    auto& e = c.extract;
    read_opt(*it, "bar_threshold", e.bar_threshold, "extract");
    read_opt(*it, "crop_bars", e.crop_bars, "extract");
    read_opt(*it, "spectrum_resize", e.spectrum_resize, "extract");
    read_opt(*it, "spectrum_size", e.spectrum_size, "extract");
    read_opt(*it, "fit_min", e.fit_min, "extract");
    read_opt(*it, "fit_max", e.fit_max, "extract");
    read_opt(*it, "max_failure_fraction", e.max_failure_fraction, "extract");
    read_opt(*it, "workers", e.workers, "extract");
  }
  if (const auto it = j.find("themes"); it != j.end()) {
    detail::only_keys(*it, "themes", {"k_min", "k_max", "per_event", "fallback_embedding", "method", "ubiquity_cap",
                                      "restarts", "categorical", "distribution_by"});
    auto& t = c.themes;
    read_opt(*it, "k_min", t.k_min, "themes");
    read_opt(*it, "k_max", t.k_max, "themes");
    read_opt(*it, "per_event", t.per_event, "themes");
    read_opt(*it, "fallback_embedding", t.fallback_embedding, "themes");
    read_opt(*it, "method", t.method, "themes");
    read_opt(*it, "ubiquity_cap", t.ubiquity_cap, "themes");
    read_opt(*it, "restarts", t.restarts, "themes");
    read_opt(*it, "categorical", t.categorical, "themes");
    read_opt(*it, "distribution_by", t.distribution_by, "themes");
  }
  if (const auto it = j.find("compare"); it != j.end()) {
    detail::only_keys(*it, "compare", {"alpha", "group_a", "group_b"});
    read_opt(*it, "alpha", c.compare.alpha, "compare");
    if (it->contains("group_a")) c.compare.group_a = (*it)["group_a"].get<std::string>();
    if (it->contains("group_b")) c.compare.group_b = (*it)["group_b"].get<std::string>();
  }
  if (const auto it = j.find("performance"); it != j.end()) {
    detail::only_keys(*it, "performance", {"metrics", "min_n", "rate_bins"});
    read_opt(*it, "metrics", c.performance.metrics, "performance");
    read_opt(*it, "min_n", c.performance.min_n, "performance");
    read_opt(*it, "rate_bins", c.performance.rate_bins, "performance");
  }
  if (const auto it = j.find("inspect"); it != j.end()) {
    detail::only_keys(*it, "inspect", {"feature", "k"});
    read_opt(*it, "feature", c.inspect.feature, "inspect");
    read_opt(*it, "k", c.inspect.k, "inspect");
  }
  if (const auto it = j.find("ingest"); it != j.end()) {
    detail::only_keys(*it, "ingest", {"preset", "events", "channels", "per_channel", "api_key_env", "base_url",
                                      "thumbnails_dir", "parallelism"});
    auto& g = c.ingest;
    read_opt(*it, "preset", g.preset, "ingest");
    read_opt(*it, "per_channel", g.per_channel, "ingest");
    read_opt(*it, "api_key_env", g.api_key_env, "ingest");
    read_opt(*it, "base_url", g.base_url, "ingest");
    read_opt(*it, "thumbnails_dir", g.thumbnails_dir, "ingest");
    read_opt(*it, "parallelism", g.parallelism, "ingest");
    g.thumbnails_dir = detail::resolve_path(base_dir, g.thumbnails_dir).string();
    if (const auto ev = it->find("events"); ev != it->end()) {
      if (!ev->is_array()) throw ConfigError("ingest.events must be an array");
      for (const auto& e : *ev) {
        detail::only_keys(e, "ingest.events[]", {"name", "query", "published_after"});
        IngestEvent x;
        read_opt(e, "name", x.name, "ingest.events[]");
        read_opt(e, "query", x.query, "ingest.events[]");
        read_opt(e, "published_after", x.published_after, "ingest.events[]");
        if (x.name.empty() || x.query.empty()) throw ConfigError("every ingest event needs a name and a query");
        g.events.push_back(x);
      }
    }
    if (const auto ch = it->find("channels"); ch != it->end()) {
      if (!ch->is_array()) throw ConfigError("ingest.channels must be an array");
      for (const auto& e : *ch) {
        detail::only_keys(e, "ingest.channels[]", {"id", "group"});
        IngestChannel x;
        read_opt(e, "id", x.id, "ingest.channels[]");
        read_opt(e, "group", x.group, "ingest.channels[]");
        if (x.id.empty() || x.group.empty()) throw ConfigError("every ingest channel needs an id and a group");
        g.channels.push_back(x);
      }
    }
  }

  if (!(c.compare.alpha > 0.0 && c.compare.alpha < 1.0)) throw ConfigError("compare.alpha must lie in (0, 1)");
  if (c.themes.k_min < 2 || c.themes.k_max < c.themes.k_min) throw ConfigError("themes needs 2 <= k_min <= k_max");
  if (c.themes.method < 1 || c.themes.method > 3) throw ConfigError("themes.method must be 1, 2 or 3");
  if (c.extract.fit_min >= c.extract.fit_max) throw ConfigError("extract.fit_min must be below fit_max");
  if (c.extract.spectrum_size < 32) throw ConfigError("extract.spectrum_size must be at least 32");
  if (c.performance.rate_bins < 1) throw ConfigError("performance.rate_bins must be positive");
  return c;
}

inline RunConfig load_config(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(j, fs::absolute(path).parent_path());
}

// ------------------------------------------------------------- file names

inline constexpr const char* kFeaturesCsv = "features.csv";
inline constexpr const char* kThemesCsv = "themes.csv";

inline CsvRow features_header() {
  CsvRow h{"image_id"};
  for (auto n : kFeatureNames) h.emplace_back(n);
  h.insert(h.end(), {"shot_scale", "setting", "objects"});
  return h;
}

// --------------------------------------------------------------- helpers

namespace detail {

inline void save_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::min(8u, std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, jobs)));
}

// Runs job(i) for i in [0, n) on a bounded pool.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) job(i);
  };
  const unsigned threads = worker_count(workers, n);
  if (threads <= 1) {
    run();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run);
  for (auto& t : pool) t.join();
}

inline std::string fmt(double v, const char* spec = "%.4g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline fs::path image_path(const RunConfig& cfg, const ThumbnailRecord& r) {
  return resolve_path(cfg.manifest.parent_path(), r.thumbnail_path);
}

}  // namespace detail

inline std::map<std::string, std::array<double, kFeatureCount>> read_features(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t id = t.column("image_id");
  std::array<std::size_t, kFeatureCount> cols{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) cols[f] = t.column(std::string(kFeatureNames[f]));
  std::map<std::string, std::array<double, kFeatureCount>> out;
  for (const auto& row : t.rows) {
    std::array<double, kFeatureCount> v{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) v[f] = parse_double(row[cols[f]]);
    out[row[id]] = v;
  }
  return out;
}

inline std::map<std::string, std::string> read_themes(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t id = t.column("image_id"), theme = t.column("theme");
  std::map<std::string, std::string> out;
  for (const auto& row : t.rows) out[row[id]] = row[theme];
  return out;
}

// ---------------------------------------------------------------- extract

struct ExtractResult {
  std::size_t rows = 0;
  std::vector<FetchFailure> failures;
};

inline ExtractOptions extract_options(const ExtractSettings& s) {
  ExtractOptions o;
  o.bar_threshold = s.bar_threshold;
  o.crop_bars = s.crop_bars;
  o.spectrum = {s.spectrum_resize, s.spectrum_size};
  o.fit_range = {s.fit_min, s.fit_max};
  return o;
}

inline ExtractResult cmd_extract(const RunConfig& cfg, std::ostream& log) {
  const Manifest m = load_manifest(cfg.manifest);
  const FilterBank bank = cfg.filter_bank ? load_filter_bank(*cfg.filter_bank) : default_filter_bank();
  std::map<std::string, Annotation> annotations;
  if (cfg.annotations) annotations = load_sidecar(*cfg.annotations, SidecarKind::Annotations, m).annotations;

  std::vector<const ThumbnailRecord*> recs;
  for (const auto& r : m.records) recs.push_back(&r);
  std::sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->image_id < b->image_id; });

  const ExtractOptions opt = extract_options(cfg.extract);
  std::vector<std::optional<FeatureVector>> results(recs.size());
  std::vector<std::string> errors(recs.size());
  detail::parallel_for(recs.size(), cfg.extract.workers, [&](std::size_t i) {
    try {
      if (recs[i]->thumbnail_path.empty()) throw ValidationError("no thumbnail file");
      results[i] = extract_features(load_image(detail::image_path(cfg, *recs[i])), bank, opt);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  fs::create_directories(cfg.output_dir);
  CsvWriter out(features_header());
  CsvWriter failed({"image_id", "error"});
  ExtractResult res;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (!results[i]) {
      res.failures.push_back({recs[i]->image_id, errors[i]});
      failed.row({recs[i]->image_id, errors[i]});
      log << "extract: " << recs[i]->image_id << ": " << errors[i] << "\n";
      continue;
    }
    CsvRow row{recs[i]->image_id};
    for (double v : results[i]->values) row.push_back(format_double(v));
    const auto a = annotations.find(recs[i]->image_id);
    if (a != annotations.end()) {
      row.push_back(a->second.shot_scale.value_or(""));
      row.push_back(a->second.setting.value_or(""));
      row.push_back(a->second.objects ? nlohmann::json(*a->second.objects).dump() : "");
    } else {
      row.insert(row.end(), {"", "", ""});
    }
    out.row(row);
    ++res.rows;
  }
  out.save(cfg.output_dir / kFeaturesCsv);
  failed.save(cfg.output_dir / "extract_failures.csv");
  log << "extract: " << res.rows << " images, " << res.failures.size() << " failures\n";
  if (!recs.empty() &&
      static_cast<double>(res.failures.size()) > cfg.extract.max_failure_fraction * static_cast<double>(recs.size()))
    throw DataQualityError(std::to_string(res.failures.size()) + " of " + std::to_string(recs.size()) +
                           " images failed feature extraction");
  return res;
}

// ----------------------------------------------------------------- themes

struct ThemesResult {
  std::map<std::string, std::string> labels;  // image id -> theme label
  std::map<std::string, ThemeModel> models;   // partition (event or "") -> model
};

inline std::string theme_label(const std::string& partition, int cluster) {
  return partition.empty() ? std::to_string(cluster) : partition + ":" + std::to_string(cluster);
}

inline ThemesResult cmd_themes(const RunConfig& cfg, std::ostream& log) {
  const Manifest m = load_manifest(cfg.manifest);
  EmbeddingSet emb;
  if (cfg.embeddings) {
    SidecarReport rep;
    emb = load_sidecar(*cfg.embeddings, SidecarKind::Embeddings, m, &rep).embeddings;
    for (const auto& w : rep.warnings) log << "themes: " << w << "\n";
  } else if (cfg.themes.fallback_embedding) {
    std::vector<std::optional<std::vector<double>>> vecs(m.records.size());
    detail::parallel_for(m.records.size(), cfg.extract.workers, [&](std::size_t i) {
      try {
        ImageBuffer img = load_image(detail::image_path(cfg, m.records[i]));
        if (cfg.extract.crop_bars) img = crop_black_bars(img, cfg.extract.bar_threshold);
        vecs[i] = fallback_embedding(img);
      } catch (const std::exception& e) {
        vecs[i].reset();
      }
    });
    for (std::size_t i = 0; i < vecs.size(); ++i) {
      if (vecs[i]) emb[m.records[i].image_id] = *vecs[i];
      else log << "themes: no fallback embedding for " << m.records[i].image_id << "\n";
    }
  } else {
    throw ConfigError("themes needs an embeddings sidecar or themes.fallback_embedding = true");
  }

  std::map<std::string, EmbeddingSet> partitions;
  for (const auto& r : m.records) {
    const auto it = emb.find(r.image_id);
    if (it == emb.end()) continue;
    partitions[cfg.themes.per_event ? r.event : std::string()].insert(*it);
  }

  TagLists tags;
  const bool have_tags = cfg.tags.has_value();
  if (have_tags) tags = load_sidecar(*cfg.tags, SidecarKind::Tags, m).tags;
  std::map<std::string, Annotation> annotations;
  if (cfg.annotations) annotations = load_sidecar(*cfg.annotations, SidecarKind::Annotations, m).annotations;

  ThemesResult res;
  CsvWriter sil({"partition", "k", "silhouette", "selected"});
  for (auto& [part, set] : partitions) {
    ThemeModel model = cluster(set, {cfg.themes.k_min, cfg.themes.k_max}, cfg.seed, cfg.themes.restarts);
    if (have_tags) {
      TagLists scoped;
      for (const auto& [id, c] : model.assignment) {
        const auto it = tags.find(id);
        scoped[id] = it == tags.end() ? std::vector<std::string>{} : it->second;
      }
      model = tag_clusters(std::move(model), scoped, {cfg.themes.method, cfg.themes.ubiquity_cap});
    }
    for (const auto& [k, s] : model.silhouette_by_k)
      sil.row({part, std::to_string(k), format_double(s), k == model.k ? "1" : "0"});
    for (const auto& [id, c] : model.assignment) res.labels[id] = theme_label(part, c);
    log << "themes: " << (part.empty() ? "corpus" : part) << " -> k=" << model.k << "\n";
    res.models[part] = std::move(model);
  }

  fs::create_directories(cfg.output_dir);
  std::map<std::string, const ThumbnailRecord*> by_id;
  for (const auto& r : m.records) by_id[r.image_id] = &r;
  CsvWriter themes_csv({"image_id", "event", "theme"});
  for (const auto& [id, label] : res.labels) themes_csv.row({id, by_id.at(id)->event, label});
  themes_csv.save(cfg.output_dir / kThemesCsv);
  sil.save(cfg.output_dir / "silhouette.csv");

  CsvRow tag_header{"theme", "size", "method"};
  for (int i = 1; i <= kTagsPerTheme; ++i) tag_header.push_back("tag_" + std::to_string(i));
  tag_header.push_back("padded");
  CsvWriter tag_csv(tag_header);
  for (const auto& [part, model] : res.models) {
    const auto sizes = model.cluster_sizes();
    for (int c = 0; c < model.k; ++c) {
      CsvRow row{theme_label(part, c), std::to_string(sizes[static_cast<std::size_t>(c)]),
                 have_tags ? std::to_string(model.method) : ""};
      for (int i = 0; i < kTagsPerTheme; ++i) {
        const auto& list = have_tags ? model.tags[static_cast<std::size_t>(c)] : std::vector<std::string>{};
        row.push_back(static_cast<std::size_t>(i) < list.size() ? list[static_cast<std::size_t>(i)] : "");
      }
      row.push_back(have_tags && model.tags_padded[static_cast<std::size_t>(c)] ? "1" : "0");
      tag_csv.row(row);
    }
  }
  tag_csv.save(cfg.output_dir / "theme_tags.csv");

  std::string md = "# Visual themes\n\n";
  for (const auto& [part, model] : res.models) {
    md += "## " + (part.empty() ? std::string("Corpus") : "Event " + part) + "\n\n";
    md += "Selected k = " + std::to_string(model.k) + " (mean silhouette " + detail::fmt(model.silhouette) + ").\n\n";
    md += "| theme | images | tags |\n|---|---|---|\n";
    const auto sizes = model.cluster_sizes();
    for (int c = 0; c < model.k; ++c)
      md += "| " + theme_label(part, c) + " | " + std::to_string(sizes[static_cast<std::size_t>(c)]) + " | " +
            (have_tags ? join(model.tags[static_cast<std::size_t>(c)], ", ") : std::string("(no tag sidecar)")) +
            " |\n";
    md += "\n";
  }

  // Purity of a categorical annotation per theme against the corpus.
  if (cfg.annotations && !cfg.themes.categorical.empty()) {
    auto value_of = [&](const Annotation& a) -> std::optional<std::string> {
      if (cfg.themes.categorical == "setting") return a.setting;
      if (cfg.themes.categorical == "shot_scale") return a.shot_scale;
      throw ConfigError("themes.categorical must be setting or shot_scale");
    };
    std::map<std::string, CategoricalDistribution> per_theme;
    CategoricalDistribution corpus;
    for (const auto& [id, label] : res.labels) {
      const auto a = annotations.find(id);
      if (a == annotations.end()) continue;
      if (const auto v = value_of(a->second)) {
        ++per_theme[label][*v];
        ++corpus[*v];
      }
    }
    CsvWriter g({"scope", "theme", "n", "gini", "classes"});
    auto classes = [](const CategoricalDistribution& d) {
      std::vector<std::string> parts;
      long long n = 0;
      for (const auto& [k, v] : d) {
        parts.push_back(k + "=" + std::to_string(v));
        n += v;
      }
      return std::pair{join(parts, ";"), n};
    };
    md += "## Gini purity of " + cfg.themes.categorical + "\n\n| scope | images | gini | classes |\n|---|---|---|---|\n";
    if (!corpus.empty()) {
      const auto [cl, n] = classes(corpus);
      g.row({"corpus", "", std::to_string(n), format_double(gini(corpus)), cl});
      md += "| corpus | " + std::to_string(n) + " | " + detail::fmt(gini(corpus)) + " | " + cl + " |\n";
    }
    for (const auto& [label, d] : per_theme) {
      const auto [cl, n] = classes(d);
      g.row({"theme", label, std::to_string(n), format_double(gini(d)), cl});
      md += "| theme " + label + " | " + std::to_string(n) + " | " + detail::fmt(gini(d)) + " | " + cl + " |\n";
    }
    md += "\n";
    g.save(cfg.output_dir / "gini.csv");
  }

  const auto dist = theme_distribution(res.labels, m.records, cfg.themes.distribution_by);
  CsvWriter d({cfg.themes.distribution_by, "theme", "count", "fraction", "ratio"});
  for (const auto& row : dist)
    d.row({row.group, row.theme, std::to_string(row.count), format_double(row.fraction), format_double(row.ratio)});
  d.save(cfg.output_dir / "theme_distribution.csv");
  detail::save_text(cfg.output_dir / "themes.md", md);
  return res;
}

// ----------------------------------------------------------- observations

// Images present in the manifest, features.csv and themes.csv.
inline std::vector<Observation> load_observations(const RunConfig& cfg) {
  const Manifest m = load_manifest(cfg.manifest);
  const fs::path fpath = cfg.output_dir / kFeaturesCsv, tpath = cfg.output_dir / kThemesCsv;
  if (!fs::exists(fpath)) throw ConfigError(fpath.string() + " not found; run extract first");
  if (!fs::exists(tpath)) throw ConfigError(tpath.string() + " not found; run themes first");
  const auto features = read_features(fpath);
  const auto themes = read_themes(tpath);
  std::vector<Observation> obs;
  for (const auto& r : m.records) {
    const auto f = features.find(r.image_id);
    const auto t = themes.find(r.image_id);
    if (f == features.end() || t == themes.end()) continue;
    Observation o;
    o.image_id = r.image_id;
    o.group = r.group;
    o.event = r.event;
    o.theme = t->second;
    o.features = f->second;
    o.views = static_cast<double>(r.views);
    o.likes = static_cast<double>(r.likes);
    o.comments = static_cast<double>(r.comments);
    obs.push_back(std::move(o));
  }
  std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  return obs;
}

// ---------------------------------------------------------------- compare

inline std::string render_heatmap(const ComparisonMatrix& m) {
  const double cell_w = 64, cell_h = 22, left = 130, top = 70;
  const double width = left + cell_w * static_cast<double>(m.themes.size()) + 20;
  const double height = top + cell_h * kFeatureCount + 50;
  SvgDocument svg(width, height);
  svg.text(10, 20, "Normalized difference " + m.group_a + " vs " + m.group_b, 13, "start", true);
  svg.text(10, 38, "Blue: " + m.group_a + " is greater. Red: " + m.group_b + " is greater. Bold border: p < alpha.", 10);
  for (std::size_t t = 0; t < m.themes.size(); ++t)
    svg.text(left + cell_w * (static_cast<double>(t) + 0.5), top - 8, "theme " + m.themes[t], 10, "middle");
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const double y = top + cell_h * static_cast<double>(f);
    svg.text(left - 6, y + cell_h * 0.68, kFeatureNames[f], 10, "end");
    double scale = 0;
    for (std::size_t t = 0; t < m.themes.size(); ++t)
      if (const auto& c = m.at(f, t); c.sufficient && c.normalized_diff)
        scale = std::max(scale, std::abs(*c.normalized_diff));
    for (std::size_t t = 0; t < m.themes.size(); ++t) {
      const auto& c = m.at(f, t);
      const double x = left + cell_w * static_cast<double>(t);
      if (!c.sufficient || !c.normalized_diff) {
        svg.rect(x, y, cell_w, cell_h, "#cccccc", "#ffffff", 1);
        svg.text(x + cell_w / 2, y + cell_h * 0.68, c.sufficient ? "undef" : "n/a", 9, "middle");
        continue;
      }
      const double tnorm = scale > 0 ? *c.normalized_diff / scale : 0.0;
      if (c.significant) svg.rect(x + 1, y + 1, cell_w - 2, cell_h - 2, css_color(diverging_color(tnorm)), "#000000", 2.5);
      else svg.rect(x, y, cell_w, cell_h, css_color(diverging_color(tnorm)), "#ffffff", 1);
      svg.text(x + cell_w / 2, y + cell_h * 0.68, detail::fmt(*c.normalized_diff, "%.3f"), 9, "middle", c.significant);
    }
  }
  return svg.str();
}

inline ComparisonMatrix cmd_compare(const RunConfig& cfg, std::ostream& log) {
  const auto obs = load_observations(cfg);
  CompareOptions opt{cfg.compare.alpha, cfg.compare.group_a, cfg.compare.group_b};
  const ComparisonMatrix m = compare_matrix(obs, opt);

  CsvWriter csv({"feature", "theme", "n_a", "n_b", "mean_a", "mean_b", "t", "df", "p", "normalized_diff",
                 "significant", "larger_group", "status"});
  for (const auto& c : m.cells) {
    const std::string status = !c.sufficient ? "insufficient" : !c.normalized_diff ? "undefined" : "ok";
    if (!c.sufficient) {
      csv.row({std::string(kFeatureNames[c.feature]), c.theme, std::to_string(c.n_a), std::to_string(c.n_b), "", "", "",
               "", "", "", "0", "", status});
      continue;
    }
    csv.row({std::string(kFeatureNames[c.feature]), c.theme, std::to_string(c.n_a), std::to_string(c.n_b),
             format_double(c.test.mean_a), format_double(c.test.mean_b), format_double(c.test.t),
             format_double(c.test.df), format_double(c.test.p), format_optional(c.normalized_diff),
             c.significant ? "1" : "0", c.larger_group, status});
  }
  fs::create_directories(cfg.output_dir);
  csv.save(cfg.output_dir / "compare.csv");
  detail::save_text(cfg.output_dir / "compare.svg", render_heatmap(m));

  std::size_t significant = 0, usable = 0;
  for (const auto& c : m.cells) {
    usable += c.sufficient;
    significant += c.significant;
  }
  std::string md = "# Aesthetic comparison: " + m.group_a + " vs " + m.group_b + "\n\n";
  md += "Welch two-sample t-tests per feature and theme at alpha = " + detail::fmt(cfg.compare.alpha) +
        ". Normalized difference is (mean_a - mean_b) / (mean_a + mean_b) with a = " + m.group_a + ".\n\n";
  md += "| feature | consistency | significant themes | larger group (majority) |\n|---|---|---|---|\n";
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    int sig = 0, a = 0, b = 0;
    for (std::size_t t = 0; t < m.themes.size(); ++t) {
      const auto& c = m.at(f, t);
      sig += c.significant;
      a += c.larger_group == m.group_a;
      b += c.larger_group == m.group_b;
    }
    const auto cons = sign_consistency(m, f);
    md += "| " + std::string(kFeatureNames[f]) + " | " + (cons ? detail::fmt(*cons, "%.2f") : std::string("n/a")) +
          " | " + std::to_string(sig) + "/" + std::to_string(m.themes.size()) + " | " +
          (a > b ? m.group_a : b > a ? m.group_b : std::string("tie")) + " |\n";
  }
  md += "\n" + std::to_string(significant) + " of " + std::to_string(usable) +
        " testable cells are significant; no multiple-comparison correction is applied across the " +
        std::to_string(m.cells.size()) + " cells.\n";
  detail::save_text(cfg.output_dir / "compare.md", md);
  log << "compare: " << significant << " significant of " << usable << " cells\n";
  return m;
}

// ------------------------------------------------------------ performance

struct PerformanceResult {
  std::map<std::pair<std::string, std::string>, std::optional<PowerLawFit>> fits;  // (group, event)
  std::vector<CorrelationEntry> correlations;
};

inline PerformanceResult cmd_performance(const RunConfig& cfg, std::ostream& log) {
  const Manifest m = load_manifest(cfg.manifest);
  PerformanceResult res;
  fs::create_directories(cfg.output_dir);

  std::map<std::pair<std::string, std::string>, std::vector<double>> views;
  for (const auto& r : m.records)
    if (r.views >= 1) views[{r.group, r.event}].push_back(static_cast<double>(r.views));
  CsvWriter pl({"group", "event", "n", "slope", "intercept", "r_squared", "status"});
  for (const auto& [key, v] : views) {
    if (v.size() < 10) {
      res.fits[key] = std::nullopt;
      pl.row({key.first, key.second, std::to_string(v.size()), "", "", "", "insufficient"});
      continue;
    }
    const auto f = powerlaw_fit(v);
    res.fits[key] = f;
    pl.row({key.first, key.second, std::to_string(v.size()), format_double(f.slope), format_double(f.intercept),
            format_double(f.r_squared), "ok"});
  }
  pl.save(cfg.output_dir / "powerlaw.csv");

  std::map<std::string, std::vector<double>> like_rates, comment_rates;
  for (const auto& r : m.records)
    if (const auto e = engagement_rates(r)) {
      like_rates[r.group].push_back(e->like_rate);
      comment_rates[r.group].push_back(e->comment_rate);
    }
  CsvWriter hist({"group", "metric", "bin", "bin_low", "bin_high", "count"});
  CsvWriter summary({"group", "metric", "n", "mean", "median"});
  for (auto [name, rates] : {std::pair{"like_rate", &like_rates}, {"comment_rate", &comment_rates}}) {
    double hi = 0;
    for (const auto& [g, v] : *rates)
      for (double x : v) hi = std::max(hi, x);
    if (hi <= 0) hi = 1;
    const int bins = cfg.performance.rate_bins;
    for (const auto& [g, v] : *rates) {
      std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
      for (double x : v) ++counts[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(x / hi * bins)))];
      for (int b = 0; b < bins; ++b)
        hist.row({g, name, std::to_string(b), format_double(hi * b / bins), format_double(hi * (b + 1) / bins),
                  std::to_string(counts[static_cast<std::size_t>(b)])});
      summary.row({g, name, std::to_string(v.size()), format_double(mean(v)), format_double(median(v))});
    }
  }
  hist.save(cfg.output_dir / "engagement.csv");
  summary.save(cfg.output_dir / "engagement_summary.csv");

  const auto obs = load_observations(cfg);
  CorrelateOptions copt{cfg.performance.metrics, cfg.performance.min_n};
  res.correlations = correlate_metrics(obs, copt);
  CsvWriter cor({"metric", "group", "event", "theme", "feature", "n", "rho", "p", "significant", "status"});
  std::size_t sig = 0;
  for (const auto& e : res.correlations) {
    const std::string status = !e.sufficient ? "insufficient" : !e.result ? "undefined" : "ok";
    const bool s = e.result && e.result->p < cfg.compare.alpha;
    sig += s;
    cor.row({e.metric, e.group, e.event, e.theme, std::string(kFeatureNames[e.feature]), std::to_string(e.n),
             e.result ? format_double(e.result->rho) : "", e.result ? format_double(e.result->p) : "", s ? "1" : "0",
             status});
  }
  cor.save(cfg.output_dir / "correlations.csv");

  std::string md = "# Viewership and engagement\n\n## Power-law fits of views against view rank\n\n";
  md += "| group | event | n | slope | r^2 |\n|---|---|---|---|---|\n";
  for (const auto& [key, f] : res.fits)
    md += "| " + key.first + " | " + key.second + " | " + std::to_string(views[key].size()) + " | " +
          (f ? detail::fmt(f->slope) : std::string("n/a")) + " | " + (f ? detail::fmt(f->r_squared) : std::string("n/a")) +
          " |\n";
  md += "\n## Like and comment rates\n\n| group | median like rate | median comment rate |\n|---|---|---|\n";
  for (const auto& [g, v] : like_rates)
    md += "| " + g + " | " + detail::fmt(median(v)) + " | " + detail::fmt(median(comment_rates[g])) + " |\n";
  md += "\n## Feature correlations\n\n" + std::to_string(res.correlations.size()) + " Spearman correlations (" +
        std::to_string(copt.metrics.size()) + " metrics x strata x " + std::to_string(kFeatureCount) +
        " features); " + std::to_string(sig) + " have p < " + detail::fmt(cfg.compare.alpha) + ".\n";
  detail::save_text(cfg.output_dir / "performance.md", md);
  log << "performance: " << res.fits.size() << " power-law strata, " << res.correlations.size() << " correlations\n";
  return res;
}

// --------------------------------------------------------------- temporal

inline std::vector<std::string> month_range(const std::string& first, const std::string& last) {
  int y = std::stoi(first.substr(0, 4)), mo = std::stoi(first.substr(5, 2));
  std::vector<std::string> out;
  for (;;) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%04d-%02d", y, mo);
    out.emplace_back(buf);
    if (out.back() >= last) break;
    if (++mo > 12) mo = 1, ++y;
  }
  return out;
}

struct TemporalRow {
  std::string month;
  std::string theme;
  std::string group;
  long long count = 0;
};

inline std::vector<TemporalRow> cmd_temporal(const RunConfig& cfg, std::ostream& log) {
  const Manifest m = load_manifest(cfg.manifest);
  const fs::path tpath = cfg.output_dir / kThemesCsv;
  if (!fs::exists(tpath)) throw ConfigError(tpath.string() + " not found; run themes first");
  const auto themes = read_themes(tpath);
  std::map<std::tuple<std::string, std::string, std::string>, long long> counts;
  std::set<std::string> theme_set, groups;
  std::string first, last;
  for (const auto& r : m.records) {
    const auto t = themes.find(r.image_id);
    if (t == themes.end()) continue;
    const std::string month = format_month(r.published_at);
    ++counts[{month, t->second, r.group}];
    theme_set.insert(t->second);
    groups.insert(r.group);
    if (first.empty() || month < first) first = month;
    if (last.empty() || month > last) last = month;
  }
  std::vector<TemporalRow> rows;
  const auto months = first.empty() ? std::vector<std::string>{} : month_range(first, last);
  for (const auto& month : months)
    for (const auto& theme : theme_set)
      for (const auto& g : groups) {
        const auto it = counts.find({month, theme, g});
        rows.push_back({month, theme, g, it == counts.end() ? 0 : it->second});
      }
  CsvWriter csv({"month", "theme", "group", "count"});
  for (const auto& r : rows) csv.row({r.month, r.theme, r.group, std::to_string(r.count)});
  fs::create_directories(cfg.output_dir);
  csv.save(cfg.output_dir / "temporal.csv");

  // One panel per theme, one line per group.
  static const std::vector<std::string> palette{"#2166ac", "#b2182b", "#1b7837", "#762a83", "#e08214", "#4d4d4d"};
  const double panel_h = 150, left = 60, plot_w = std::max(240.0, 28.0 * static_cast<double>(months.size()));
  SvgDocument svg(left + plot_w + 140, 30 + panel_h * static_cast<double>(std::max<std::size_t>(1, theme_set.size())));
  svg.text(10, 18, "Monthly image count per theme", 13, "start", true);
  std::size_t panel = 0;
  for (const auto& theme : theme_set) {
    const double y0 = 30 + panel_h * static_cast<double>(panel++), plot_h = panel_h - 45;
    long long peak = 1;
    for (const auto& r : rows)
      if (r.theme == theme) peak = std::max(peak, r.count);
    svg.text(left, y0 + 12, "theme " + theme, 11, "start", true);
    svg.line(left, y0 + 20 + plot_h, left + plot_w, y0 + 20 + plot_h, "#000000");
    svg.line(left, y0 + 20, left, y0 + 20 + plot_h, "#000000");
    svg.text(left - 4, y0 + 24, std::to_string(peak), 9, "end");
    svg.text(left - 4, y0 + 20 + plot_h, "0", 9, "end");
    const double step = months.size() > 1 ? plot_w / static_cast<double>(months.size() - 1) : 0;
    for (std::size_t i = 0; i < months.size(); ++i)
      if (months.size() <= 12 || i % ((months.size() + 11) / 12) == 0)
        svg.text(left + step * static_cast<double>(i), y0 + 32 + plot_h, months[i], 8, "middle");
    std::size_t gi = 0;
    for (const auto& g : groups) {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t i = 0; i < months.size(); ++i) {
        const auto it = counts.find({months[i], theme, g});
        const double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
        pts.emplace_back(left + step * static_cast<double>(i), y0 + 20 + plot_h - plot_h * c / static_cast<double>(peak));
      }
      const auto& color = palette[gi % palette.size()];
      svg.polyline(pts, color);
      svg.text(left + plot_w + 10, y0 + 30 + 14 * static_cast<double>(gi), g, 10);
      svg.line(left + plot_w + 60, y0 + 26 + 14 * static_cast<double>(gi), left + plot_w + 80,
               y0 + 26 + 14 * static_cast<double>(gi), color, 2);
      ++gi;
    }
  }
  detail::save_text(cfg.output_dir / "temporal.svg", svg.str());
  log << "temporal: " << months.size() << " months x " << theme_set.size() << " themes\n";
  return rows;
}

// ---------------------------------------------------------------- inspect

struct InspectResult {
  std::vector<std::pair<std::string, double>> top;
  std::vector<std::pair<std::string, double>> bottom;
};

inline std::size_t require_feature(const std::string& name) {
  const auto idx = feature_index(name);
  if (!idx) {
    std::vector<std::string> names(kFeatureNames.begin(), kFeatureNames.end());
    throw ConfigError("unknown feature '" + name + "'; valid names: " + join(names, ", "));
  }
  return *idx;
}

inline InspectResult cmd_inspect(const RunConfig& cfg, const std::string& feature, std::size_t k, std::ostream& log) {
  const std::size_t f = require_feature(feature);
  const fs::path fpath = cfg.output_dir / kFeaturesCsv;
  if (!fs::exists(fpath)) throw ConfigError(fpath.string() + " not found; run extract first");
  const auto features = read_features(fpath);
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& [id, v] : features) ranked.emplace_back(id, v[f]);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  InspectResult res;
  const std::size_t n = std::min(k, ranked.size());
  res.top.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n));
  res.bottom.assign(ranked.rbegin(), ranked.rbegin() + static_cast<std::ptrdiff_t>(n));

  CsvWriter csv({"position", "rank", "image_id", "value"});
  for (std::size_t i = 0; i < n; ++i) csv.row({"top", std::to_string(i + 1), res.top[i].first, format_double(res.top[i].second)});
  for (std::size_t i = 0; i < n; ++i)
    csv.row({"bottom", std::to_string(i + 1), res.bottom[i].first, format_double(res.bottom[i].second)});
  fs::create_directories(cfg.output_dir);
  csv.save(cfg.output_dir / ("inspect_" + feature + ".csv"));

  std::map<std::string, fs::path> paths;
  try {
    const Manifest m = load_manifest(cfg.manifest);
    for (const auto& r : m.records) paths[r.image_id] = detail::image_path(cfg, r);
  } catch (const Error&) {
    log << "inspect: manifest unavailable, contact sheet has no images\n";
  }
  const double tw = 160, th = 90, pad = 10, label_h = 28;
  const double cols = static_cast<double>(std::max<std::size_t>(1, n));
  SvgDocument svg(pad + cols * (tw + pad), 40 + 2 * (th + label_h + 20));
  svg.text(pad, 20, "Highest and lowest " + feature, 13, "start", true);
  for (int row = 0; row < 2; ++row) {
    const auto& list = row == 0 ? res.top : res.bottom;
    const double y = 40 + row * (th + label_h + 20);
    svg.text(pad, y + 10, row == 0 ? "top" : "bottom", 11, "start", true);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const double x = pad + static_cast<double>(i) * (tw + pad);
      svg.rect(x, y + 16, tw, th, "#eeeeee");
      if (const auto it = paths.find(list[i].first); it != paths.end())
        svg.image(x, y + 16, tw, th, fs::relative(it->second, fs::absolute(cfg.output_dir)).generic_string());
      svg.text(x, y + 16 + th + 12, list[i].first, 9);
      svg.text(x, y + 16 + th + 23, detail::fmt(list[i].second, "%.5g"), 9);
    }
  }
  detail::save_text(cfg.output_dir / ("inspect_" + feature + ".svg"), svg.str());
  return res;
}

// ----------------------------------------------------------------- ingest

inline void apply_preset(IngestSettings& s) {
  if (s.preset.empty()) return;
  if (s.preset != "paper-2400") throw ConfigError("unknown ingest preset '" + s.preset + "' (paper-2400)");
  // Two events, two groups of two channels each, 300 videos per cell.
  s.per_channel = 300;
  std::map<std::string, int> per_group;
  for (const auto& c : s.channels) ++per_group[c.group];
  if (s.events.size() != 2 || s.channels.size() != 4 || per_group.size() != 2 ||
      std::any_of(per_group.begin(), per_group.end(), [](const auto& p) { return p.second != 2; }))
    throw ConfigError("preset paper-2400 needs 2 events and 4 channels split 2 + 2 across two groups");
}

struct IngestResult {
  Manifest manifest;
  FetchReport thumbnails;
  std::vector<std::string> warnings;
};

inline IngestResult cmd_ingest(const RunConfig& cfg, HttpTransport& transport, const ApiConfig& api, std::ostream& log) {
  IngestSettings s = cfg.ingest;
  apply_preset(s);
  if (s.events.empty() || s.channels.empty()) throw ConfigError("ingest needs at least one event and one channel");
  IngestResult res;
  std::vector<std::string> queries, afters;
  for (const auto& c : s.channels) res.manifest.provenance.channel_ids.push_back(c.id);
  std::set<std::string> seen;
  for (const auto& e : s.events) {
    queries.push_back(e.query);
    afters.push_back(e.published_after);
    for (const auto& c : s.channels) {
      auto recs = search_videos(e.query, c.id, e.published_after, s.per_channel, transport, api);
      fetch_statistics(recs, transport, api);
      log << "ingest: " << e.name << " / " << c.id << ": " << recs.size() << " videos\n";
      for (auto& r : recs) {
        if (!seen.insert(r.image_id).second) {
          res.warnings.push_back("video " + r.image_id + " returned for several queries; kept the first");
          continue;
        }
        r.group = c.group;
        r.event = e.name;
        r.channel = c.id;
        res.manifest.records.push_back(std::move(r));
      }
    }
  }
  res.manifest.provenance.query = join(queries, " | ");
  res.manifest.provenance.published_after = join(afters, " | ");
  res.manifest.provenance.retrieved_at =
      format_timestamp(std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()));

  res.thumbnails = fetch_thumbnails(res.manifest.records, s.thumbnails_dir, transport, {s.parallelism});
  const fs::path manifest_dir = fs::absolute(cfg.manifest).parent_path();
  for (auto& r : res.manifest.records)
    if (!r.thumbnail_path.empty())
      r.thumbnail_path = fs::relative(fs::absolute(r.thumbnail_path), manifest_dir).generic_string();
  fs::create_directories(manifest_dir);
  save_manifest(res.manifest, cfg.manifest);
  fs::create_directories(cfg.output_dir);
  CsvWriter failed({"image_id", "error"});
  for (const auto& f : res.thumbnails.failures) failed.row({f.image_id, f.reason});
  failed.save(cfg.output_dir / "ingest_failures.csv");
  for (const auto& w : res.warnings) log << "ingest: " << w << "\n";
  log << "ingest: " << res.manifest.records.size() << " records, " << res.thumbnails.downloaded << " downloaded, "
      << res.thumbnails.skipped << " already present, " << res.thumbnails.failures.size() << " failed\n";
  return res;
}

}  // namespace thumbscope
