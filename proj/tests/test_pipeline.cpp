#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include "thumbscope/pipeline.hpp"
#include "thumbscope/synth.hpp"

using namespace thumbscope;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("thumbscope_pipeline_" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

SynthOptions small(int images = 30) {
  SynthOptions o;
  o.images = images;
  o.width = 160;
  o.height = 90;
  o.mirrored_first = true;
  o.seed = 11;
  return o;
}

// One corpus with extract and themes already run, shared by the read-only tests.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    truth_ = write_synthetic_corpus(dir_->path(), small());
    cfg_ = load_config(dir_->path() / "config.json");
    std::ostringstream log;
    cmd_extract(cfg_, log);
    cmd_themes(cfg_, log);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static inline TempDir* dir_ = nullptr;
  static inline std::vector<SynthImage> truth_;
  static inline RunConfig cfg_;
};

int run_cli(const std::string& args) {
  const int status = std::system((std::string(THUMBSCOPE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, RelativePathsFollowTheConfigFile) {
  const auto c = parse_config(nlohmann::json::parse(R"({"manifest":"m.jsonl","sidecars":{"tags":"t.jsonl"}})"),
                              "/data/run");
  EXPECT_EQ(c.manifest, fs::path("/data/run/m.jsonl"));
  EXPECT_EQ(*c.tags, fs::path("/data/run/t.jsonl"));
  EXPECT_EQ(c.output_dir, fs::path("/data/run/out"));
  EXPECT_FALSE(c.embeddings.has_value());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  const fs::path base = "/x";
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"manifets":"m"})"), base), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"themes":{"kmin":2}})"), base), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"compare":{"alpha":1.5}})"), base), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"themes":{"k_min":5,"k_max":3}})"), base), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"seed":"seven"})"), base), ConfigError);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"themes":{"method":4}})"), base), ConfigError);
}

TEST(Config, PresetNeedsTwoGroupsOfTwoChannels) {
  IngestSettings s;
  s.preset = "paper-2400";
  s.events = {{"e1", "q1", ""}, {"e2", "q2", ""}};
  s.channels = {{"c1", "a"}, {"c2", "a"}, {"c3", "b"}};
  EXPECT_THROW(apply_preset(s), ConfigError);
  s.channels.push_back({"c4", "b"});
  s.per_channel = 5;
  apply_preset(s);
  EXPECT_EQ(s.per_channel, 300u);
  s.preset = "other";
  EXPECT_THROW(apply_preset(s), ConfigError);
}

TEST(Schema, FeaturesHeaderIsFrozen) {
  EXPECT_EQ(fnv1a64(join(features_header(), ",")), 0x14d22fc9795c921cULL);
}

TEST_F(Pipeline, FeaturesTableCoversEveryImage) {
  const auto t = read_csv(cfg_.output_dir / kFeaturesCsv);
  ASSERT_EQ(t.rows.size(), truth_.size());
  EXPECT_EQ(t.header, features_header());
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_LT(t.rows[i - 1][0], t.rows[i][0]);
  EXPECT_FALSE(t.rows[0][t.column("setting")].empty());
  EXPECT_EQ(read_csv(cfg_.output_dir / "extract_failures.csv").rows.size(), 0u);
}

TEST_F(Pipeline, ThemesRecoverPlantedClusters) {
  const auto labels = read_themes(cfg_.output_dir / kThemesCsv);
  ASSERT_EQ(labels.size(), truth_.size());
  std::map<int, std::set<std::string>> by_truth;
  for (const auto& s : truth_) by_truth[s.theme].insert(labels.at(s.image_id));
  ASSERT_EQ(by_truth.size(), 3u);
  std::set<std::string> distinct;
  for (const auto& [t, ls] : by_truth) {
    EXPECT_EQ(ls.size(), 1u);
    distinct.insert(*ls.begin());
  }
  EXPECT_EQ(distinct.size(), 3u);
  const auto tags = read_csv(cfg_.output_dir / "theme_tags.csv");
  for (const auto& row : tags.rows) EXPECT_NE(row[tags.column("tag_1")], "man");
}

TEST_F(Pipeline, GiniTableHasCorpusBaseline) {
  const auto g = read_csv(cfg_.output_dir / "gini.csv");
  ASSERT_GE(g.rows.size(), 2u);
  EXPECT_EQ(g.rows[0][g.column("scope")], "corpus");
  EXPECT_EQ(g.rows[0][g.column("n")], std::to_string(truth_.size()));
}

TEST_F(Pipeline, CompareFindsPlantedLuminanceShift) {
  std::ostringstream log;
  const auto m = cmd_compare(cfg_, log);
  const std::size_t f = *feature_index("luminance");
  for (std::size_t t = 0; t < m.themes.size(); ++t) {
    const auto& c = m.at(f, t);
    EXPECT_TRUE(c.significant) << m.themes[t];
    EXPECT_EQ(c.larger_group, "a");
  }
  const std::string svg = slurp(cfg_.output_dir / "compare.svg");
  EXPECT_NE(svg.find("stroke-width=\"2.5\""), std::string::npos);
  EXPECT_NE(slurp(cfg_.output_dir / "compare.md").find("no multiple-comparison correction"), std::string::npos);
  EXPECT_EQ(read_csv(cfg_.output_dir / "compare.csv").rows.size(), kFeatureCount * m.themes.size());
}

TEST_F(Pipeline, TemporalTableIsDenseAndPeaksInApril) {
  std::ostringstream log;
  const auto rows = cmd_temporal(cfg_, log);
  const auto labels = read_themes(cfg_.output_dir / kThemesCsv);
  const std::string theme0 = labels.at(truth_[0].image_id);
  std::map<std::string, long long> per_month;
  std::set<std::string> months;
  for (const auto& r : rows) {
    months.insert(r.month);
    if (r.theme == theme0) per_month[r.month] += r.count;
  }
  EXPECT_EQ(rows.size(), months.size() * 3 * 2);
  const auto peak = std::max_element(per_month.begin(), per_month.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  EXPECT_EQ(peak->first, "2022-04");
}

TEST_F(Pipeline, InspectRanksMirroredImageFirst) {
  std::ostringstream log;
  const auto res = cmd_inspect(cfg_, "symmetry_lr", 3, log);
  ASSERT_EQ(res.top.size(), 3u);
  EXPECT_EQ(res.top[0].first, "img0000");
  EXPECT_DOUBLE_EQ(res.top[0].second, 1.0);
  EXPECT_LT(res.top[1].second, 1.0);
  EXPECT_LE(res.bottom[0].second, res.bottom[1].second);
  EXPECT_NE(slurp(cfg_.output_dir / "inspect_symmetry_lr.svg").find("img0000"), std::string::npos);
  EXPECT_THROW(cmd_inspect(cfg_, "brightness", 3, log), ConfigError);
}

TEST_F(Pipeline, InspectWithLargeKReturnsWholeRanking) {
  std::ostringstream log;
  const auto res = cmd_inspect(cfg_, "contrast", 1000, log);
  EXPECT_EQ(res.top.size(), truth_.size());
  EXPECT_EQ(res.bottom.size(), truth_.size());
  for (std::size_t i = 1; i < res.top.size(); ++i) EXPECT_GE(res.top[i - 1].second, res.top[i].second);
}

TEST_F(Pipeline, PerformanceRecoversExponentsAndRates) {
  std::ostringstream log;
  const auto res = cmd_performance(cfg_, log);
  const auto& a = res.fits.at({"a", "synthetic"});
  const auto& b = res.fits.at({"b", "synthetic"});
  ASSERT_TRUE(a && b);
  EXPECT_LT(a->slope, b->slope);
  EXPECT_EQ(res.correlations.size(), 3u * 2 * 3 * kFeatureCount);
  const auto s = read_csv(cfg_.output_dir / "engagement_summary.csv");
  double like_a = 0, like_b = 0;
  for (const auto& row : s.rows)
    if (row[1] == "like_rate") (row[0] == "a" ? like_a : like_b) = parse_double(row[s.column("median")]);
  EXPECT_NEAR(like_a / like_b, 2.0, 0.3);
}

TEST(PipelineRuns, ByteIdenticalAcrossRuns) {
  TempDir dir;
  write_synthetic_corpus(dir.path(), small(24));
  std::vector<std::map<std::string, std::string>> outputs;
  for (int run = 0; run < 2; ++run) {
    RunConfig cfg = load_config(dir.path() / "config.json");
    cfg.output_dir = dir.path() / ("out" + std::to_string(run));
    cfg.extract.workers = run == 0 ? 1 : 4;
    std::ostringstream log;
    cmd_extract(cfg, log);
    cmd_themes(cfg, log);
    cmd_compare(cfg, log);
    cmd_performance(cfg, log);
    cmd_temporal(cfg, log);
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(cfg.output_dir)) files[e.path().filename().string()] = slurp(e.path());
    outputs.push_back(files);
  }
  ASSERT_EQ(outputs[0].size(), outputs[1].size());
  for (const auto& [name, bytes] : outputs[0]) EXPECT_EQ(bytes, outputs[1].at(name)) << name;
}

TEST(PipelineRuns, TemporalSingleImageHasOneNonzeroCell) {
  TempDir dir;
  Manifest m;
  ThumbnailRecord r;
  r.image_id = "only";
  r.group = "a";
  r.event = "e";
  r.published_at = *parse_timestamp("2022-07-15T12:00:00Z");
  m.records.push_back(r);
  save_manifest(m, dir.path() / "manifest.jsonl");
  write(dir.path() / "config.json", "{}");
  RunConfig cfg = load_config(dir.path() / "config.json");
  fs::create_directories(cfg.output_dir);
  write(cfg.output_dir / kThemesCsv, "image_id,event,theme\nonly,e,0\n");
  std::ostringstream log;
  const auto rows = cmd_temporal(cfg, log);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].month, "2022-07");
  EXPECT_EQ(rows[0].count, 1);
}

TEST(PipelineRuns, CorruptImageIsReportedNotFatal) {
  TempDir dir;
  auto opt = small(10);
  opt.corrupt = 1;
  write_synthetic_corpus(dir.path(), opt);
  RunConfig cfg = load_config(dir.path() / "config.json");
  std::ostringstream log;
  const auto res = cmd_extract(cfg, log);
  EXPECT_EQ(res.rows, 9u);
  ASSERT_EQ(res.failures.size(), 1u);
  EXPECT_EQ(res.failures[0].image_id, "img0009");
  EXPECT_EQ(read_csv(cfg.output_dir / kFeaturesCsv).rows.size(), 9u);
  EXPECT_EQ(read_csv(cfg.output_dir / "extract_failures.csv").rows.size(), 1u);
}

TEST(PipelineRuns, TooManyFailuresIsDataQualityError) {
  TempDir dir;
  auto opt = small(10);
  opt.corrupt = 2;
  write_synthetic_corpus(dir.path(), opt);
  RunConfig cfg = load_config(dir.path() / "config.json");
  std::ostringstream log;
  EXPECT_THROW(cmd_extract(cfg, log), DataQualityError);
  EXPECT_EQ(read_csv(cfg.output_dir / kFeaturesCsv).rows.size(), 8u);
}

TEST(PipelineRuns, ThemesNeedEmbeddingsOrFallback) {
  TempDir dir;
  write_synthetic_corpus(dir.path(), small(24));
  RunConfig cfg = load_config(dir.path() / "config.json");
  cfg.embeddings.reset();
  std::ostringstream log;
  EXPECT_THROW(cmd_themes(cfg, log), ConfigError);
  cfg.themes.fallback_embedding = true;
  const auto res = cmd_themes(cfg, log);
  EXPECT_EQ(res.labels.size(), 24u);
  EXPECT_GE(res.models.at("").k, 2);
}

TEST(PipelineRuns, PerEventPartitionsAreLabelledByEvent) {
  TempDir dir;
  auto opt = small(48);
  opt.events = {"e1", "e2"};
  write_synthetic_corpus(dir.path(), opt);
  RunConfig cfg = load_config(dir.path() / "config.json");
  cfg.themes.per_event = true;
  cfg.themes.k_max = 4;
  std::ostringstream log;
  const auto res = cmd_themes(cfg, log);
  ASSERT_EQ(res.models.size(), 2u);
  for (const auto& [id, label] : res.labels) EXPECT_TRUE(label.rfind("e1:", 0) == 0 || label.rfind("e2:", 0) == 0);
}

TEST(PipelineRuns, IngestWritesManifestAndThumbnails) {
  // Answers search with two videos per channel, statistics for any id, and a
  // small PNG for any thumbnail URL.
  class FakeApi : public HttpTransport {
   public:
    HttpResponse get(const std::string& url) override {
      std::lock_guard lock(mu_);
      if (url.find("/search?") != std::string::npos) {
        const auto p = url.find("channelId=");
        const std::string ch = url.substr(p + 10, url.find('&', p) - p - 10);
        nlohmann::json j;
        j["items"] = nlohmann::json::array();
        for (int i = 0; i < 2; ++i)
          j["items"].push_back({{"id", {{"videoId", ch + "_v" + std::to_string(i)}}},
                                {"snippet",
                                 {{"channelId", ch},
                                  {"publishedAt", "2022-05-0" + std::to_string(i + 1) + "T08:00:00Z"},
                                  {"thumbnails", {{"high", {{"url", "https://img.test/" + ch + std::to_string(i) + ".png"}}}}}}}});
        return {200, j.dump()};
      }
      if (url.find("/videos?") != std::string::npos) {
        const auto p = url.find("id=");
        std::string ids = url.substr(p + 3, url.find('&', p) - p - 3);
        for (std::size_t q; (q = ids.find("%2C")) != std::string::npos;) ids.replace(q, 3, ",");
        nlohmann::json j;
        j["items"] = nlohmann::json::array();
        std::stringstream ss(ids);
        for (std::string id; std::getline(ss, id, ',');)
          j["items"].push_back({{"id", id}, {"statistics", {{"viewCount", "1000"}, {"likeCount", "40"}}}});
        return {200, j.dump()};
      }
      const auto png = encode_png(ImageBuffer(32, 18, Rgb8{90, 120, 30}));
      return {200, std::string(png.begin(), png.end())};
    }

   private:
    std::mutex mu_;
  };

  TempDir dir;
  write(dir.path() / "config.json", R"({
    "manifest": "data/manifest.jsonl",
    "ingest": {
      "events": [{"name": "e1", "query": "lockdown", "published_after": "2022-01-01T00:00:00Z"}],
      "channels": [{"id": "UCa", "group": "left"}, {"id": "UCb", "group": "right"}],
      "per_channel": 2,
      "thumbnails_dir": "data/thumbs"
    }
  })");
  RunConfig cfg = load_config(dir.path() / "config.json");
  FakeApi api;
  ApiConfig ac;
  ac.api_key = "k";
  ac.base_url = "https://api.test/v3";
  std::ostringstream log;
  const auto res = cmd_ingest(cfg, api, ac, log);
  EXPECT_EQ(res.thumbnails.downloaded, 4u);
  const Manifest m = load_manifest(dir.path() / "data/manifest.jsonl");
  ASSERT_EQ(m.records.size(), 4u);
  EXPECT_EQ(m.provenance.channel_ids, (std::vector<std::string>{"UCa", "UCb"}));
  const auto* r = m.find("UCb_v1");
  ASSERT_NE(r, nullptr);
  EXPECT_EQ(r->group, "right");
  EXPECT_EQ(r->event, "e1");
  EXPECT_EQ(r->views, 1000);
  EXPECT_EQ(r->comments, 0);
  EXPECT_EQ(r->thumbnail_path, "thumbs/UCb_v1.png");
  EXPECT_TRUE(fs::exists(dir.path() / "data/thumbs/UCb_v1.png"));
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const std::string d = dir.path().string();
  EXPECT_EQ(run_cli("synth " + d + "/ok --images 10 --seed 3"), 0);
  EXPECT_EQ(run_cli("--config " + d + "/ok/config.json extract"), 0);
  EXPECT_EQ(run_cli("--config " + d + "/missing.json extract"), 1);
  EXPECT_EQ(run_cli("--config " + d + "/ok/config.json inspect --feature nope"), 1);
  EXPECT_EQ(run_cli("--config " + d + "/ok/config.json validate-sidecar --kind tags " + d + "/ok/tags.jsonl"), 0);
  write(dir.path() / "bad.jsonl", "{\"image_id\":\"img0000\",\"tags\":[\"x\"],\"extra\":1}\n");
  EXPECT_EQ(run_cli("--config " + d + "/ok/config.json validate-sidecar --kind tags " + d + "/bad.jsonl"), 1);
  EXPECT_EQ(run_cli("synth " + d + "/bad --images 10 --corrupt 3"), 0);
  EXPECT_EQ(run_cli("--config " + d + "/bad/config.json extract"), 2);
  EXPECT_EQ(run_cli("no-such-command"), 1);
}

TEST(Cli, SeedOverrideAndDeterministicOutput) {
  TempDir dir;
  const std::string d = dir.path().string();
  ASSERT_EQ(run_cli("synth " + d + " --images 24 --seed 5"), 0);
  ASSERT_EQ(run_cli("--config " + d + "/config.json --output-dir " + d + "/r1 all"), 0);
  ASSERT_EQ(run_cli("--config " + d + "/config.json --output-dir " + d + "/r2 all"), 0);
  for (const char* f : {"features.csv", "themes.csv", "compare.csv", "correlations.csv", "temporal.csv"})
    EXPECT_EQ(slurp(dir.path() / "r1" / f), slurp(dir.path() / "r2" / f)) << f;
}
