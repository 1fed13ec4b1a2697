#pragma once

// Corpus ingestion and persistence: the JSON Lines manifest, sidecar files,
// the video-platform API client and the thumbnail fetcher.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "thumbscope/codec.hpp"
#include "thumbscope/error.hpp"
#include "thumbscope/features.hpp"
#include "thumbscope/record.hpp"
#include "thumbscope/themes.hpp"

namespace thumbscope {

using ordered_json = nlohmann::ordered_json;

struct Provenance {
  std::string query;
  std::vector<std::string> channel_ids;
  std::string published_after;
  std::string retrieved_at;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Manifest {
  Provenance provenance;
  std::vector<ThumbnailRecord> records;

  friend bool operator==(const Manifest&, const Manifest&) = default;

  const ThumbnailRecord* find(const std::string& id) const {
    for (const auto& r : records)
      if (r.image_id == id) return &r;
    return nullptr;
  }
};

// ---------------------------------------------------------------- manifest

inline ordered_json record_to_json(const ThumbnailRecord& r) {
  ordered_json j;
  j["image_id"] = r.image_id;
  j["channel"] = r.channel;
  j["group"] = r.group;
  j["event"] = r.event;
  j["published_at"] = format_timestamp(r.published_at);
  j["views"] = r.views;
  j["likes"] = r.likes;
  j["comments"] = r.comments;
  j["thumbnail_path"] = r.thumbnail_path;
  j["url"] = r.url;
  return j;
}

inline ordered_json provenance_to_json(const Provenance& p) {
  ordered_json inner;
  inner["query"] = p.query;
  inner["channel_ids"] = p.channel_ids;
  inner["published_after"] = p.published_after;
  inner["retrieved_at"] = p.retrieved_at;
  ordered_json j;
  j["provenance"] = std::move(inner);
  return j;
}

inline std::string serialize_manifest(const Manifest& m) {
  std::string out = provenance_to_json(m.provenance).dump() + "\n";
  for (const auto& r : m.records) out += record_to_json(r).dump() + "\n";
  return out;
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'", line);
  return *it;
}

inline std::string require_string(const nlohmann::json& j, const char* key, std::size_t line) {
  const auto& v = require(j, key, line);
  if (!v.is_string()) throw ValidationError(std::string("field '") + key + "' must be a string", line);
  return v.get<std::string>();
}

inline long long require_count(const nlohmann::json& j, const char* key, std::size_t line) {
  const auto& v = require(j, key, line);
  if (!v.is_number_integer()) throw ValidationError(std::string("field '") + key + "' must be an integer", line);
  const long long n = v.get<long long>();
  if (n < 0) throw ValidationError(std::string("field '") + key + "' is negative", line);
  return n;
}

inline nlohmann::json parse_line(const std::string& text, std::size_t line) {
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ValidationError("expected a JSON object", line);
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what(), line);
  }
}

inline bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace detail

inline ThumbnailRecord record_from_json(const nlohmann::json& j, std::size_t line) {
  ThumbnailRecord r;
  r.image_id = detail::require_string(j, "image_id", line);
  if (r.image_id.empty()) throw ValidationError("empty image_id", line);
  r.channel = detail::require_string(j, "channel", line);
  r.group = detail::require_string(j, "group", line);
  r.event = detail::require_string(j, "event", line);
  const std::string ts = detail::require_string(j, "published_at", line);
  const auto parsed = parse_timestamp(ts);
  if (!parsed) throw ValidationError("bad published_at timestamp '" + ts + "'", line);
  r.published_at = *parsed;
  r.views = detail::require_count(j, "views", line);
  r.likes = detail::require_count(j, "likes", line);
  r.comments = detail::require_count(j, "comments", line);
  r.thumbnail_path = detail::require_string(j, "thumbnail_path", line);
  r.url = detail::require_string(j, "url", line);
  return r;
}

// The first non-blank line must carry the provenance object. An empty text
// yields an empty manifest and a warning.
inline Manifest parse_manifest(const std::string& text, std::vector<std::string>* warnings = nullptr) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  bool have_provenance = false;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++n;
    if (detail::blank(line)) continue;
    const auto j = detail::parse_line(line, n);
    if (!have_provenance) {
      const auto it = j.find("provenance");
      if (it == j.end() || !it->is_object()) throw ValidationError("first line must hold the provenance object", n);
      const auto& p = *it;
      m.provenance.query = detail::require_string(p, "query", n);
      const auto& ch = detail::require(p, "channel_ids", n);
      if (!ch.is_array()) throw ValidationError("provenance channel_ids must be an array", n);
      for (const auto& c : ch) {
        if (!c.is_string()) throw ValidationError("provenance channel_ids must hold strings", n);
        m.provenance.channel_ids.push_back(c.get<std::string>());
      }
      m.provenance.published_after = detail::require_string(p, "published_after", n);
      m.provenance.retrieved_at = detail::require_string(p, "retrieved_at", n);
      have_provenance = true;
      continue;
    }
    ThumbnailRecord r = record_from_json(j, n);
    if (!ids.insert(r.image_id).second) throw ValidationError("duplicate image_id '" + r.image_id + "'", n);
    m.records.push_back(std::move(r));
  }
  if (!have_provenance && warnings) warnings->push_back("manifest is empty");
  return m;
}

inline void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  const std::string text = serialize_manifest(m);
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Manifest load_manifest(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr) {
  return parse_manifest(read_text_file(path), warnings);
}

// ----------------------------------------------------------------- sidecars

enum class SidecarKind { Embeddings, Tags, Annotations };

inline const char* sidecar_kind_name(SidecarKind k) {
  switch (k) {
    case SidecarKind::Embeddings: return "embeddings";
    case SidecarKind::Tags: return "tags";
    case SidecarKind::Annotations: return "annotations";
  }
  return "";
}

inline SidecarKind parse_sidecar_kind(const std::string& s) {
  if (s == "embeddings") return SidecarKind::Embeddings;
  if (s == "tags") return SidecarKind::Tags;
  if (s == "annotations") return SidecarKind::Annotations;
  throw ConfigError("unknown sidecar kind '" + s + "' (embeddings, tags, annotations)");
}

struct SidecarIssue {
  std::size_t line = 0;
  std::string message;
};

struct SidecarReport {
  SidecarKind kind = SidecarKind::Embeddings;
  std::size_t lines = 0;  // non-blank lines
  std::size_t valid = 0;
  double coverage = 0;    // fraction of manifest ids present
  std::size_t dimension = 0;
  std::vector<SidecarIssue> errors;
  std::vector<std::string> warnings;
};

struct SidecarData {
  EmbeddingSet embeddings;
  TagLists tags;
  std::map<std::string, Annotation> annotations;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, std::size_t line) {
  for (const auto& [key, value] : j.items())
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ValidationError("unknown field '" + key + "'", line);
}

inline Annotation parse_annotation(const nlohmann::json& j, std::size_t line) {
  check_keys(j, {"image_id", "shot_scale", "objects", "setting"}, line);
  Annotation a;
  if (const auto it = j.find("shot_scale"); it != j.end()) {
    if (!it->is_string()) throw ValidationError("shot_scale must be a string", line);
    const auto s = it->get<std::string>();
    if (s != "close" && s != "medium" && s != "long")
      throw ValidationError("shot_scale must be close, medium or long, got '" + s + "'", line);
    a.shot_scale = s;
  }
  if (const auto it = j.find("setting"); it != j.end()) {
    if (!it->is_string()) throw ValidationError("setting must be a string", line);
    const auto s = it->get<std::string>();
    if (s != "indoor" && s != "outdoor") throw ValidationError("setting must be indoor or outdoor, got '" + s + "'", line);
    a.setting = s;
  }
  if (const auto it = j.find("objects"); it != j.end()) {
    if (!it->is_object()) throw ValidationError("objects must map labels to counts", line);
    std::map<std::string, long long> objects;
    for (const auto& [label, count] : it->items()) {
      if (!count.is_number_integer() || count.get<long long>() < 0)
        throw ValidationError("object count for '" + label + "' must be a non-negative integer", line);
      objects[label] = count.get<long long>();
    }
    a.objects = std::move(objects);
  }
  return a;
}

}  // namespace detail

// Checks every line, collecting all problems instead of stopping at the first.
inline SidecarReport read_sidecar(const std::string& text, SidecarKind kind, const Manifest& manifest,
                                  SidecarData* out = nullptr) {
  SidecarReport rep;
  rep.kind = kind;
  std::set<std::string> manifest_ids;
  for (const auto& r : manifest.records) manifest_ids.insert(r.image_id);
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t n = 0;
  while (std::getline(in, raw)) {
    ++n;
    if (detail::blank(raw)) continue;
    ++rep.lines;
    try {
      const auto j = detail::parse_line(raw, n);
      const std::string id = detail::require_string(j, "image_id", n);
      if (!manifest_ids.count(id)) throw ValidationError("image_id '" + id + "' is not in the manifest", n);
      if (seen.count(id)) throw ValidationError("duplicate image_id '" + id + "'", n);
      if (kind == SidecarKind::Embeddings) {
        detail::check_keys(j, {"image_id", "embedding"}, n);
        const auto& e = detail::require(j, "embedding", n);
        if (!e.is_array() || e.empty()) throw ValidationError("embedding must be a non-empty array", n);
        std::vector<double> v;
        v.reserve(e.size());
        for (const auto& x : e) {
          if (!x.is_number()) throw ValidationError("embedding values must be numbers", n);
          v.push_back(x.get<double>());
        }
        if (!rep.dimension) rep.dimension = v.size();
        if (v.size() != rep.dimension)
          throw ValidationError("embedding dimension " + std::to_string(v.size()) + " differs from " +
                                    std::to_string(rep.dimension),
                                n);
        if (out) out->embeddings[id] = std::move(v);
      } else if (kind == SidecarKind::Tags) {
        detail::check_keys(j, {"image_id", "tags"}, n);
        const auto& t = detail::require(j, "tags", n);
        if (!t.is_array()) throw ValidationError("tags must be an array", n);
        std::vector<std::string> tags;
        for (const auto& x : t) {
          if (!x.is_string()) throw ValidationError("tags must be strings", n);
          tags.push_back(x.get<std::string>());
        }
        if (out) out->tags[id] = std::move(tags);
      } else {
        Annotation a = detail::parse_annotation(j, n);
        if (out) out->annotations[id] = std::move(a);
      }
      seen.insert(id);
      ++rep.valid;
    } catch (const ValidationError& e) {
      rep.errors.push_back({n, e.what()});
    }
  }
  rep.coverage = manifest_ids.empty() ? 0.0 : static_cast<double>(seen.size()) / static_cast<double>(manifest_ids.size());
  if (rep.lines == 0) rep.warnings.push_back(std::string(sidecar_kind_name(kind)) + " sidecar is empty");
  if (rep.coverage < 1.0) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s sidecar covers %.3f of the manifest", sidecar_kind_name(kind), rep.coverage);
    rep.warnings.push_back(buf);
  }
  return rep;
}

inline SidecarReport validate_sidecar(const std::filesystem::path& path, SidecarKind kind, const Manifest& manifest) {
  return read_sidecar(read_text_file(path), kind, manifest);
}

// Throws the first error, as ValidationError naming its line.
inline SidecarData load_sidecar(const std::filesystem::path& path, SidecarKind kind, const Manifest& manifest,
                                SidecarReport* report = nullptr) {
  SidecarData data;
  SidecarReport rep = read_sidecar(read_text_file(path), kind, manifest, &data);
  if (!rep.errors.empty()) throw ValidationError(path.filename().string() + ": " + rep.errors.front().message);
  if (report) *report = std::move(rep);
  return data;
}

// --------------------------------------------------------------- transport

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Implementations must be safe to call from several threads at once.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const std::string& url) = 0;
};

struct ApiConfig {
  std::string api_key;
  std::string base_url = "https://www.googleapis.com/youtube/v3";
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

inline constexpr const char* kApiKeyVariable = "YOUTUBE_API_KEY";

inline std::string api_key_from_env(const char* variable = kApiKeyVariable) {
  const char* v = std::getenv(variable);
  if (!v || !*v) throw ConfigError(std::string("environment variable ") + variable + " is not set");
  return v;
}

inline std::string url_encode(const std::string& s) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

inline std::string build_url(const std::string& base, const std::vector<std::pair<std::string, std::string>>& query) {
  std::string url = base;
  char sep = '?';
  for (const auto& [k, v] : query) {
    url += sep;
    url += url_encode(k) + "=" + url_encode(v);
    sep = '&';
  }
  return url;
}

namespace detail {

inline bool is_quota_reason(const nlohmann::json& body) {
  const auto err = body.find("error");
  if (err == body.end() || !err->is_object()) return false;
  const auto errors = err->find("errors");
  if (errors == err->end() || !errors->is_array()) return false;
  for (const auto& e : *errors) {
    const auto r = e.find("reason");
    if (r != e.end() && r->is_string()) {
      const auto s = r->get<std::string>();
      if (s == "quotaExceeded" || s == "dailyLimitExceeded" || s == "rateLimitExceeded") return true;
    }
  }
  return false;
}

}  // namespace detail

// 401 and non-quota 403 are auth failures, quota 403 is QuotaError, 5xx and
// transport failures retry with doubling backoff up to max_attempts.
inline nlohmann::json api_get(HttpTransport& transport, const std::string& url, const ApiConfig& cfg) {
  std::chrono::milliseconds delay = cfg.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    HttpResponse resp;
    bool transient = false;
    std::string failure;
    try {
      resp = transport.get(url);
    } catch (const TransportError& e) {
      transient = true;
      failure = e.what();
    }
    if (!transient) {
      if (resp.status == 200) {
        try {
          auto j = nlohmann::json::parse(resp.body);
          if (!j.is_object()) throw MalformedResponseError("API response is not a JSON object");
          return j;
        } catch (const nlohmann::json::exception& e) {
          throw MalformedResponseError(std::string("API response is not valid JSON: ") + e.what());
        }
      }
      if (resp.status == 401) throw AuthError("API rejected the credentials (HTTP 401)");
      if (resp.status == 403) {
        const auto body = nlohmann::json::parse(resp.body, nullptr, false);
        if (!body.is_discarded() && detail::is_quota_reason(body)) throw QuotaError("API quota exhausted (HTTP 403)");
        throw AuthError("API refused the request (HTTP 403)");
      }
      if (resp.status < 500) throw TransportError("API request failed with HTTP " + std::to_string(resp.status), resp.status);
      failure = "HTTP " + std::to_string(resp.status);
    }
    if (attempt >= cfg.max_attempts)
      throw TransportError("API request failed after " + std::to_string(attempt) + " attempts: " + failure,
                           resp.status);
    if (cfg.sleep) cfg.sleep(delay);
    delay *= 2;
  }
}

namespace detail {

inline std::string best_thumbnail(const nlohmann::json& snippet) {
  const auto th = snippet.find("thumbnails");
  if (th == snippet.end() || !th->is_object()) return {};
  for (const char* key : {"maxres", "standard", "high", "medium", "default"}) {
    const auto it = th->find(key);
    if (it != th->end() && it->is_object() && it->contains("url") && (*it)["url"].is_string())
      return (*it)["url"].get<std::string>();
  }
  return {};
}

inline long long stat_count(const nlohmann::json& stats, const char* key) {
  const auto it = stats.find(key);
  if (it == stats.end()) return 0;  // hidden counts
  try {
    if (it->is_string()) return std::stoll(it->get<std::string>());
    if (it->is_number_integer()) return it->get<long long>();
  } catch (const std::exception&) {
  }
  throw MalformedResponseError(std::string("statistic '") + key + "' is not a count");
}

}  // namespace detail

// Relevance-ordered search results for one channel, at most `limit`.
inline std::vector<ThumbnailRecord> search_videos(const std::string& query, const std::string& channel_id,
                                                  const std::string& published_after, std::size_t limit,
                                                  HttpTransport& transport, const ApiConfig& cfg) {
  std::vector<ThumbnailRecord> out;
  std::string page_token;
  while (out.size() < limit) {
    std::vector<std::pair<std::string, std::string>> q = {
        {"part", "snippet"},
        {"type", "video"},
        {"order", "relevance"},
        {"maxResults", std::to_string(std::min<std::size_t>(50, limit - out.size()))},
        {"q", query}};
    if (!channel_id.empty()) q.emplace_back("channelId", channel_id);
    if (!published_after.empty()) q.emplace_back("publishedAfter", published_after);
    if (!page_token.empty()) q.emplace_back("pageToken", page_token);
    q.emplace_back("key", cfg.api_key);
    const auto j = api_get(transport, build_url(cfg.base_url + "/search", q), cfg);
    const auto items = j.find("items");
    if (items == j.end() || !items->is_array()) throw MalformedResponseError("search response lacks an items array");
    for (const auto& item : *items) {
      if (out.size() >= limit) break;
      const auto id = item.find("id");
      if (id == item.end() || !id->is_object() || !id->contains("videoId") || !(*id)["videoId"].is_string())
        throw MalformedResponseError("search item lacks id.videoId");
      const auto sn = item.find("snippet");
      if (sn == item.end() || !sn->is_object()) throw MalformedResponseError("search item lacks a snippet");
      ThumbnailRecord r;
      r.image_id = (*id)["videoId"].get<std::string>();
      r.channel = sn->value("channelId", channel_id);
      const auto ts = parse_timestamp(sn->value("publishedAt", ""));
      if (!ts) throw MalformedResponseError("search item '" + r.image_id + "' has a bad publishedAt");
      r.published_at = *ts;
      r.url = detail::best_thumbnail(*sn);
      out.push_back(std::move(r));
    }
    const auto next = j.find("nextPageToken");
    if (next == j.end() || !next->is_string() || items->empty()) break;
    page_token = next->get<std::string>();
  }
  return out;
}

// Fills views/likes/comments in place, 50 ids per request.
inline void fetch_statistics(std::vector<ThumbnailRecord>& records, HttpTransport& transport, const ApiConfig& cfg) {
  for (std::size_t start = 0; start < records.size(); start += 50) {
    const std::size_t end = std::min(records.size(), start + 50);
    std::string ids;
    for (std::size_t i = start; i < end; ++i) ids += (i > start ? "," : "") + records[i].image_id;
    const auto j = api_get(
        transport, build_url(cfg.base_url + "/videos", {{"part", "statistics"}, {"id", ids}, {"key", cfg.api_key}}),
        cfg);
    const auto items = j.find("items");
    if (items == j.end() || !items->is_array()) throw MalformedResponseError("videos response lacks an items array");
    std::map<std::string, const nlohmann::json*> stats;
    for (const auto& item : *items) {
      if (!item.contains("id") || !item["id"].is_string()) throw MalformedResponseError("video item lacks an id");
      const auto s = item.find("statistics");
      if (s != item.end() && s->is_object()) stats[item["id"].get<std::string>()] = &*s;
    }
    for (std::size_t i = start; i < end; ++i) {
      const auto it = stats.find(records[i].image_id);
      if (it == stats.end()) continue;
      records[i].views = detail::stat_count(*it->second, "viewCount");
      records[i].likes = detail::stat_count(*it->second, "likeCount");
      records[i].comments = detail::stat_count(*it->second, "commentCount");
    }
  }
}

// ----------------------------------------------------------- thumbnails

struct FetchFailure {
  std::string image_id;
  std::string reason;
};

struct FetchReport {
  std::size_t downloaded = 0;
  std::size_t skipped = 0;
  std::vector<FetchFailure> failures;  // in record order
};

struct FetchOptions {
  unsigned parallelism = 8;
};

inline std::string thumbnail_extension(const std::string& url) {
  std::string path = url.substr(0, url.find_first_of("?#"));
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    std::string ext = path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == "jpeg") ext = "jpg";
    if (ext == "jpg" || ext == "png" || ext == "webp") return ext;
  }
  return "jpg";
}

// Downloads each record's url to dest_dir/<image_id>.<ext> and sets
// thumbnail_path. Existing non-empty files are kept; per-record failures are
// collected and do not stop the batch.
inline FetchReport fetch_thumbnails(std::vector<ThumbnailRecord>& records, const std::filesystem::path& dest_dir,
                                    HttpTransport& transport, const FetchOptions& opt = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dest_dir);
  std::vector<std::optional<std::string>> errors(records.size());
  std::vector<char> skipped(records.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < records.size();) {
      auto& r = records[i];
      const fs::path target = dest_dir / (r.image_id + "." + thumbnail_extension(r.url));
      std::error_code ec;
      if (fs::exists(target, ec) && fs::file_size(target, ec) > 0 && !ec) {
        r.thumbnail_path = target.string();
        skipped[i] = 1;
        continue;
      }
      if (r.url.empty()) {
        errors[i] = "no thumbnail url";
        continue;
      }
      try {
        const HttpResponse resp = transport.get(r.url);
        if (resp.status != 200) {
          errors[i] = "HTTP " + std::to_string(resp.status);
          continue;
        }
        if (resp.body.empty()) {
          errors[i] = "empty response body";
          continue;
        }
        const fs::path tmp = target.string() + ".part";
        write_file_bytes(tmp, std::span(reinterpret_cast<const std::uint8_t*>(resp.body.data()), resp.body.size()));
        fs::rename(tmp, target);
        r.thumbnail_path = target.string();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, opt.parallelism), std::max<std::size_t>(1, records.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  FetchReport rep;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (errors[i]) rep.failures.push_back({records[i].image_id, *errors[i]});
    else if (skipped[i]) ++rep.skipped;
    else ++rep.downloaded;
  }
  return rep;
}

}  // namespace thumbscope
