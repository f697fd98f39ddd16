// relevance-lens: command line front end for preprocessing, explanation,
// analysis, robustness evaluation and rendering.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rlens/dataset.hpp"
#include "rlens/fixtures.hpp"
#include "rlens/harness.hpp"
#include "rlens/model_io.hpp"
#include "rlens/reference_models.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string folds;
  std::string class_name;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "Seed for sampling steps");
  cmd->add_option("--folds", f.folds, "Comma separated fold list, e.g. 1,2,10");
  cmd->add_option("--class", f.class_name, "Class name (robustness target / analyze filter)");
}

std::vector<int> parse_folds(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw rlens::ConfigError("--folds: '" + item + "' is not an integer");
    }
  }
  return out;
}

rlens::RunConfig resolve_config(const CommonFlags& f, bool class_filters_analysis) {
  rlens::RunConfig cfg = f.config.empty() ? rlens::RunConfig{} : rlens::load_run_config(f.config);
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.seed) cfg.seed = *f.seed;
  if (!f.folds.empty()) cfg.folds = parse_folds(f.folds);
  if (!f.class_name.empty()) {
    if (class_filters_analysis) {
      cfg.classes = {f.class_name};
    } else {
      cfg.target_class = f.class_name;
    }
  }
  return cfg;
}

void write_config(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream(path) << j.dump(2) << "\n";
}

void make_fixture(const fs::path& dir, std::uint64_t seed) {
  fs::create_directories(dir / "models");
  rlens::write_model(dir / "models" / "tiny-1d.json", rlens::tiny_1d_model());
  rlens::write_model(dir / "models" / "band-detector.json", rlens::band_detector_model());
  const auto refs = rlens::build_reference_architectures();
  rlens::write_model(dir / "models" / "waveform-cnn.json", refs.waveform);
  rlens::write_model(dir / "models" / "logmel-cnn.json", refs.logmel);
  rlens::write_clip_cache(dir / "synthetic", rlens::synthetic_clips(40, seed));
  rlens::write_clip_cache(dir / "tone_noise", rlens::tone_noise_clips(100, seed));

  nlohmann::ordered_json explain = {{"cache_dir", "synthetic"},
                                    {"model", "models/tiny-1d.json"},
                                    {"representation", "waveform"},
                                    {"rule", "epsilon_plus"},
                                    {"maps_dir", "maps"},
                                    {"out_dir", "analysis"}};
  write_config(dir / "explain.json", explain);
  nlohmann::ordered_json logmel = explain;
  logmel["model"] = "models/logmel-cnn.json";
  logmel["representation"] = "logmel";
  logmel["maps_dir"] = "maps_logmel";
  logmel["out_dir"] = "analysis_logmel";
  write_config(dir / "explain_logmel.json", logmel);
  nlohmann::ordered_json robust = {{"cache_dir", "tone_noise"},
                                   {"model", "models/band-detector.json"},
                                   {"class_names", {"tone", "noise"}},
                                   {"target_class", "tone"},
                                   {"out_dir", "robustness"}};
  write_config(dir / "robustness.json", robust);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise relevance propagation for audio classifiers"};
  app.require_subcommand(1);

  CommonFlags pre, exp, ana, rob;
  add_common(app.add_subcommand("preprocess", "Cut a WAV dataset into normalized one-second clips"), pre);
  add_common(app.add_subcommand("explain", "Write one mel relevance map per clip"), exp);
  add_common(app.add_subcommand("analyze", "Frequency focus, similarity and class-average heatmaps"), ana);
  add_common(app.add_subcommand("robustness", "Accuracy before and after filtering and pitch shifting"), rob);

  auto* render = app.add_subcommand("render", "Render a relevance map (.rlnm or grid .csv) to PPM");
  std::string render_in, render_out;
  render->add_option("input", render_in, "Map file")->required();
  render->add_option("--out", render_out, "Output path stem (default: input without extension)");

  auto* fixture = app.add_subcommand("make-fixture", "Write fixture models, synthetic clip caches and configs");
  std::string fixture_out = "fixture";
  std::uint64_t fixture_seed = 1;
  fixture->add_option("--out", fixture_out, "Output directory");
  fixture->add_option("--seed", fixture_seed, "Seed for the synthetic clips");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("preprocess")) {
      const auto s = rlens::cmd_preprocess(resolve_config(pre, false));
      std::printf("%zu clips from %zu files (%zu silent patches dropped, %zu files skipped)\n", s.clips, s.files,
                  s.dropped_silent, s.skipped.size());
      for (const auto& why : s.skipped) std::fprintf(stderr, "skipped %s\n", why.c_str());
    } else if (app.got_subcommand("explain")) {
      const auto r = rlens::cmd_explain(resolve_config(exp, false));
      std::printf("wrote %zu relevance maps\n", r.files.size());
    } else if (app.got_subcommand("analyze")) {
      const auto r = rlens::cmd_analyze(resolve_config(ana, true));
      std::printf("%-20s %6s %9s %10s\n", "class", "maps", "accuracy", "f_rel_hz");
      for (const auto& c : r.classes) {
        std::printf("%-20s %6zu %9.4f %10.1f\n", c.name.c_str(), c.count, c.accuracy, c.f_rel_hz);
      }
    } else if (app.got_subcommand("robustness")) {
      const auto r = rlens::cmd_robustness(resolve_config(rob, false));
      std::printf("%-20s %6s %8s %8s %8s\n", "condition", "clips", "before", "after", "delta");
      for (const auto& c : r.conditions) {
        std::printf("%-20s %6zu %8.4f %8.4f %+8.4f\n", c.label.c_str(), c.count, c.before, c.after, c.delta);
      }
    } else if (app.got_subcommand("render")) {
      fs::path stem = render_out.empty() ? fs::path(render_in).replace_extension() : fs::path(render_out);
      rlens::cmd_render(render_in, stem);
      std::printf("wrote %s.ppm\n", stem.string().c_str());
    } else if (app.got_subcommand("make-fixture")) {
      make_fixture(fixture_out, fixture_seed);
      std::printf("fixture written to %s\n", fixture_out.c_str());
    }
  } catch (const rlens::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const rlens::Error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  }
  return 0;
}
