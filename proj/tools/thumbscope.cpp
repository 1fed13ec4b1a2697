// thumbscope: command-line front end for the thumbnail aesthetics toolkit.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 too many
// images failed extraction.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "thumbscope/http_transport.hpp"
#include "thumbscope/pipeline.hpp"
#include "thumbscope/synth.hpp"

namespace fs = std::filesystem;
using namespace thumbscope;

namespace {

struct Globals {
  std::string config = "config.json";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

RunConfig load(const Globals& g) {
  RunConfig cfg = load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.output_dir) cfg.output_dir = fs::absolute(*g.output_dir);
  return cfg;
}

int print_sidecar_report(const SidecarReport& rep, const fs::path& path) {
  std::cout << path.string() << ": " << sidecar_kind_name(rep.kind) << ", " << rep.lines << " lines, " << rep.valid
            << " valid, coverage " << rep.coverage;
  if (rep.dimension) std::cout << ", dimension " << rep.dimension;
  std::cout << "\n";
  for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
  for (const auto& e : rep.errors) std::cerr << "line " << e.line << ": " << e.message << "\n";
  return rep.errors.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thumbnail aesthetics: feature extraction, visual themes and group comparisons"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Override the configured seed");
  app.add_option("--output-dir", g.output_dir, "Override the configured output directory");

  auto* ingest = app.add_subcommand("ingest", "Query the video API and download thumbnails");
  auto* extract = app.add_subcommand("extract", "Compute the 19 features for every manifest image");
  auto* themes = app.add_subcommand("themes", "Cluster embeddings into visual themes and tag them");
  auto* compare = app.add_subcommand("compare", "Welch tests per feature and theme between the two groups");
  auto* performance = app.add_subcommand("performance", "Power-law fits, engagement rates and correlations");
  auto* temporal = app.add_subcommand("temporal", "Monthly counts per theme and group");
  auto* all = app.add_subcommand("all", "Run extract, themes, compare, performance and temporal");

  auto* inspect = app.add_subcommand("inspect", "List the highest and lowest images for one feature");
  std::optional<std::string> feature;
  std::optional<std::size_t> k;
  inspect->add_option("--feature", feature, "Feature name");
  inspect->add_option("-k", k, "Images per end");

  auto* validate = app.add_subcommand("validate-sidecar", "Check an annotator sidecar against the manifest");
  std::string kind_name, sidecar_path;
  std::optional<std::string> manifest_path;
  validate->add_option("--kind", kind_name, "embeddings, tags or annotations")->required();
  validate->add_option("path", sidecar_path, "Sidecar JSONL file")->required();
  validate->add_option("--manifest", manifest_path, "Manifest (default: the configured one)");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with known themes and group effects");
  std::string synth_dir;
  SynthOptions so;
  synth->add_option("dir", synth_dir, "Output directory")->required();
  synth->add_option("--images", so.images, "Number of images");
  synth->add_option("--themes", so.themes, "Number of planted themes");
  synth->add_option("--luminance-shift", so.luminance_shift, "L* added to the first group");
  synth->add_option("--corrupt", so.corrupt, "Trailing images written as undecodable files");
  synth->add_flag("--mirrored-first", so.mirrored_first, "Make the first image left-right symmetric");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      if (g.seed) so.seed = *g.seed;
      const auto truth = write_synthetic_corpus(synth_dir, so);
      std::cerr << "synth: wrote " << truth.size() << " images to " << synth_dir << "\n";
      return 0;
    }
    if (*validate) {
      const SidecarKind kind = parse_sidecar_kind(kind_name);
      const Manifest m = load_manifest(manifest_path ? fs::path(*manifest_path) : load(g).manifest);
      return print_sidecar_report(validate_sidecar(sidecar_path, kind, m), sidecar_path);
    }
    const RunConfig cfg = load(g);
    if (*ingest) {
      HttplibTransport transport;
      ApiConfig api;
      api.api_key = api_key_from_env(cfg.ingest.api_key_env.c_str());
      api.base_url = cfg.ingest.base_url;
      cmd_ingest(cfg, transport, api, std::cerr);
    } else if (*extract) {
      cmd_extract(cfg, std::cerr);
    } else if (*themes) {
      cmd_themes(cfg, std::cerr);
    } else if (*compare) {
      cmd_compare(cfg, std::cerr);
    } else if (*performance) {
      cmd_performance(cfg, std::cerr);
    } else if (*temporal) {
      cmd_temporal(cfg, std::cerr);
    } else if (*all) {
      cmd_extract(cfg, std::cerr);
      cmd_themes(cfg, std::cerr);
      cmd_compare(cfg, std::cerr);
      cmd_performance(cfg, std::cerr);
      cmd_temporal(cfg, std::cerr);
    } else if (*inspect) {
      const auto res = cmd_inspect(cfg, feature.value_or(cfg.inspect.feature), k.value_or(cfg.inspect.k), std::cerr);
      for (const auto& [id, v] : res.top) std::cout << "top\t" << id << "\t" << format_double(v) << "\n";
      for (const auto& [id, v] : res.bottom) std::cout << "bottom\t" << id << "\t" << format_double(v) << "\n";
    }
    return 0;
  } catch (const DataQualityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
