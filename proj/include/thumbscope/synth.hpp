#pragma once

// Synthetic corpora with known ground truth: textured images, metadata with
// planted group effects, and embedding/tag/annotation sidecars.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "thumbscope/codec.hpp"
#include "thumbscope/corpus.hpp"
#include "thumbscope/csv.hpp"
#include "thumbscope/image.hpp"

namespace thumbscope {

struct SynthOptions {
  int images = 200;
  int width = 320;
  int height = 180;
  int themes = 3;
  std::vector<std::string> groups{"a", "b"};
  std::vector<std::string> events{"synthetic"};
  double luminance_shift = 20.0;  // L* added to every image of the first group
  double like_rate_ratio = 2.0;   // first group's like rate over the others'
  int embedding_dim = 32;
  double blob_spread = 0.05;
  int corrupt = 0;                // trailing images written as undecodable bytes
  bool mirrored_first = false;    // make the first image exactly left-right symmetric
  std::uint64_t seed = 1;
};

struct SynthImage {
  std::string image_id;
  int theme = 0;
  std::string group;
  std::string event;
};

namespace detail {

inline double synth_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline double synth_normal(std::mt19937_64& rng) {
  const double u1 = std::max(synth_uniform(rng, 0.0, 1.0), 1e-300);
  const double u2 = synth_uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

// Gratings plus rectangles in L*, tinted per theme, shifted by `shift` L*.
// Uses only explicit arithmetic on the engine output so corpora are the same
// on every standard library.
inline ImageBuffer synth_image(int w, int h, int theme, double shift, std::mt19937_64& rng) {
  const double base = detail::synth_uniform(rng, 32.0, 48.0);
  const double tint_a = 12.0 * std::cos(2.0 * std::numbers::pi * theme / 5.0);
  const double tint_b = 12.0 * std::sin(2.0 * std::numbers::pi * theme / 5.0);
  struct Grating {
    double fx, fy, phase, amp;
  };
  std::vector<Grating> gratings(3);
  for (auto& g : gratings) {
    const double angle = detail::synth_uniform(rng, 0.0, std::numbers::pi);
    const double cycles = detail::synth_uniform(rng, 2.0, 24.0);
    g = {cycles * std::cos(angle) / w, cycles * std::sin(angle) / h, detail::synth_uniform(rng, 0.0, 6.3),
         detail::synth_uniform(rng, 2.0, 6.0)};
  }
  struct Box {
    int x0, y0, x1, y1;
    double dl;
  };
  std::vector<Box> boxes(4);
  for (auto& b : boxes) {
    const int bw = static_cast<int>(detail::synth_uniform(rng, 0.1, 0.4) * w);
    const int bh = static_cast<int>(detail::synth_uniform(rng, 0.1, 0.4) * h);
    const int x0 = static_cast<int>(detail::synth_uniform(rng, 0.0, 1.0) * (w - bw));
    const int y0 = static_cast<int>(detail::synth_uniform(rng, 0.0, 1.0) * (h - bh));
    b = {x0, y0, x0 + bw, y0 + bh, detail::synth_uniform(rng, -8.0, 8.0)};
  }
  ImageBuffer img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double l = base + shift;
      for (const auto& g : gratings) l += g.amp * std::sin(2.0 * std::numbers::pi * (g.fx * x + g.fy * y) + g.phase);
      for (const auto& b : boxes)
        if (x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1) l += b.dl;
      img.set(x, y, lab_to_rgb(std::clamp(l, 0.0, 100.0), tint_a, tint_b));
    }
  return img;
}

inline std::string synth_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "img%04d", i);
  return buf;
}

// Writes images/, manifest.jsonl, embeddings/tags/annotations sidecars,
// truth.csv and config.json under dir. Image i belongs to theme i % themes
// and alternates groups within each theme.
inline std::vector<SynthImage> write_synthetic_corpus(const std::filesystem::path& dir, const SynthOptions& opt) {
  namespace fs = std::filesystem;
  if (opt.images < 1 || opt.themes < 1 || opt.groups.empty() || opt.events.empty())
    throw ConfigError("synthetic corpus needs images, themes, groups and events");
  fs::create_directories(dir / "images");
  std::mt19937_64 rng(opt.seed);

  std::vector<SynthImage> truth;
  Manifest m;
  m.provenance = {"synthetic", {}, "2022-01-01T00:00:00Z", "2023-01-01T00:00:00Z"};
  for (const auto& g : opt.groups)
    for (int c = 1; c <= 2; ++c) m.provenance.channel_ids.push_back("chan_" + g + std::to_string(c));

  const auto start = *parse_timestamp("2022-01-01T00:00:00Z");
  std::string embeddings, tags, annotations;
  std::vector<std::vector<int>> ranks(opt.groups.size());
  for (int i = 0; i < opt.images; ++i) {
    SynthImage s;
    s.image_id = synth_id(i);
    s.theme = i % opt.themes;
    const int within = i / opt.themes;
    const std::size_t gi = static_cast<std::size_t>(within) % opt.groups.size();
    s.group = opt.groups[gi];
    s.event = opt.events[static_cast<std::size_t>(within / static_cast<int>(opt.groups.size())) % opt.events.size()];
    truth.push_back(s);

    const bool corrupt = i >= opt.images - opt.corrupt;
    const std::string file = "images/" + s.image_id + ".png";
    ImageBuffer img = synth_image(opt.width, opt.height, s.theme, gi == 0 ? opt.luminance_shift : 0.0, rng);
    if (i == 0 && opt.mirrored_first)
      for (int y = 0; y < img.height(); ++y)
        for (int x = img.width() / 2; x < img.width(); ++x) img.set(x, y, img.at(img.width() - 1 - x, y));
    if (corrupt) {
      const std::string junk = "\x89PNG\r\n\x1a\n-not-really-an-image-";
      write_file_bytes(dir / file, std::span(reinterpret_cast<const std::uint8_t*>(junk.data()), junk.size()));
    } else {
      write_file_bytes(dir / file, encode_png(img));
    }

    ThumbnailRecord r;
    r.image_id = s.image_id;
    r.group = s.group;
    r.event = s.event;
    r.channel = "chan_" + s.group + std::to_string(1 + within % 2);
    // Theme 0 is concentrated in April 2022; the rest spread over the year.
    const bool april = s.theme == 0 && rng() % 2 == 0;
    const long day = april ? 90 + static_cast<long>(rng() % 30) : static_cast<long>(rng() % 365);
    r.published_at = start + std::chrono::days(day) + std::chrono::seconds(static_cast<long>(rng() % 86400));
    r.thumbnail_path = file;
    r.url = "https://thumbnails.invalid/" + s.image_id + ".png";
    m.records.push_back(std::move(r));

    nlohmann::ordered_json e;
    e["image_id"] = s.image_id;
    std::vector<double> v(static_cast<std::size_t>(opt.embedding_dim));
    for (double& x : v) x = opt.blob_spread * detail::synth_normal(rng);
    v[static_cast<std::size_t>(s.theme % opt.embedding_dim)] += 1.0;
    double n2 = 0;
    for (double x : v) n2 += x * x;
    for (double& x : v) x = std::round(x / std::sqrt(n2) * 1e6) / 1e6;
    e["embedding"] = v;
    embeddings += e.dump() + "\n";

    nlohmann::ordered_json t;
    t["image_id"] = s.image_id;
    std::vector<std::string> tl;
    if (rng() % 10 != 0) tl.push_back("man");
    for (int k = 0; k < 7; ++k)
      if (static_cast<int>(rng() % 10) < 7 - k) tl.push_back("theme" + std::to_string(s.theme) + "_tag" + std::to_string(k));
    if (rng() % 3 == 0) tl.push_back("text");
    t["tags"] = tl;
    tags += t.dump() + "\n";

    nlohmann::ordered_json a;
    a["image_id"] = s.image_id;
    static constexpr const char* scales[] = {"close", "medium", "long"};
    a["shot_scale"] = scales[rng() % 3];
    a["objects"] = {{"person", static_cast<int>(rng() % 4)}};
    const bool indoor = s.theme == 0 ? rng() % 20 != 0 : rng() % 2 == 0;
    a["setting"] = indoor ? "indoor" : "outdoor";
    annotations += a.dump() + "\n";
  }

  // Views follow a power law within each group, steeper for the first group.
  for (std::size_t g = 0; g < opt.groups.size(); ++g) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < m.records.size(); ++i)
      if (truth[i].group == opt.groups[g]) members.push_back(i);
    for (std::size_t j = members.size(); j > 1; --j) std::swap(members[j - 1], members[rng() % j]);
    const double exponent = g == 0 ? 1.4 : 0.9;
    const double like_rate = g == 0 ? 0.02 * opt.like_rate_ratio : 0.02;
    for (std::size_t rank = 0; rank < members.size(); ++rank) {
      auto& r = m.records[members[rank]];
      const double noise = std::exp(0.1 * detail::synth_normal(rng));
      r.views = 1 + std::llround(2e6 * std::pow(static_cast<double>(rank + 1), -exponent) * noise);
      r.likes = std::llround(static_cast<double>(r.views) * like_rate * std::exp(0.2 * detail::synth_normal(rng)));
      r.comments = std::llround(static_cast<double>(r.views) * 0.002 * std::exp(0.3 * detail::synth_normal(rng)));
    }
  }

  save_manifest(m, dir / "manifest.jsonl");
  auto write_text = [&](const char* name, const std::string& text) {
    write_file_bytes(dir / name, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  };
  write_text("embeddings.jsonl", embeddings);
  write_text("tags.jsonl", tags);
  write_text("annotations.jsonl", annotations);

  CsvWriter truth_csv({"image_id", "theme", "group", "event"});
  for (const auto& s : truth) truth_csv.row({s.image_id, std::to_string(s.theme), s.group, s.event});
  truth_csv.save(dir / "truth.csv");

  nlohmann::ordered_json cfg;
  cfg["manifest"] = "manifest.jsonl";
  cfg["output_dir"] = "out";
  cfg["seed"] = opt.seed;
  cfg["sidecars"] = {{"embeddings", "embeddings.jsonl"}, {"tags", "tags.jsonl"}, {"annotations", "annotations.jsonl"}};
  cfg["themes"] = {{"k_min", 2}, {"k_max", 8}, {"method", 2}, {"ubiquity_cap", 0.5}, {"categorical", "setting"}};
  cfg["compare"] = {{"alpha", 0.05}};
  write_text("config.json", cfg.dump(2) + "\n");
  return truth;
}

}  // namespace thumbscope
