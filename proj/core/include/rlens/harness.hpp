#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rlens/augment.hpp"
#include "rlens/dataset.hpp"
#include "rlens/dftlrp.hpp"
#include "rlens/lrp.hpp"
#include "rlens/model.hpp"
#include "rlens/relevance_map.hpp"

namespace rlens {

/// One robustness condition: a pipeline applied to every eligible clip.
struct RobustnessStep {
  std::string label;
  std::vector<AugmentSpec> pipeline;
  /// Restricts the condition to one class (name); empty = all classes.
  std::string only_class;
};

/// High-pass 3000 Hz and low-pass 3000 Hz on all classes, pitch shift
/// +7 and -7 semitones on `target_class`.
std::vector<RobustnessStep> default_robustness_steps(const std::string& target_class);

struct RunConfig {
  std::filesystem::path dataset_dir;
  std::filesystem::path metadata_csv;
  std::filesystem::path cache_dir;
  std::filesystem::path model;
  std::filesystem::path maps_dir;
  std::filesystem::path out_dir = "out";
  /// Must match the model when set.
  std::optional<Representation> representation;
  /// "epsilon", "zplus" or "epsilon_plus".
  std::string rule = "epsilon_plus";
  double epsilon = kDefaultEpsilon;
  VirtualInspectionConfig inspection;
  FrontendConfig frontend;
  std::vector<RobustnessStep> robustness;  // empty = defaults
  std::string target_class = "siren";
  /// Classes to report in analyze; each must have maps. Empty = all present.
  std::vector<std::string> classes;
  /// Label names for class ids; defaults to the UrbanSound8K list.
  std::vector<std::string> class_names;
  std::vector<int> folds;  // empty = all
  std::uint64_t seed = 0;
  std::size_t max_between_pairs = 200000;

  std::string class_name(int id) const;
  int class_id(std::string_view name) const;
};

/// Parses the JSON config. Relative paths resolve against `base_dir`.
/// Unknown keys and wrong types are ConfigErrors.
RunConfig parse_run_config(std::string_view json, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

LrpRule make_rule(const RunConfig& cfg, const ModelGraph& model);

/// Model input for a waveform: {1, L} or the {1, P, M} logmel grid.
Tensor model_input(const ModelGraph& model, const Waveform& x, const FrontendConfig& frontend);
std::size_t predict(const ModelGraph& model, const Waveform& x, const FrontendConfig& frontend);

/// Relevance of `class_index` on the mel grid (P x M) for either family.
RelevanceMap explain_clip(const ModelGraph& model, const Waveform& x, std::size_t class_index, const LrpRule& rule,
                          const RunConfig& cfg);

struct PreprocessSummary {
  std::size_t files = 0;
  std::size_t clips = 0;
  std::size_t dropped_silent = 0;
  std::vector<std::string> skipped;
  std::vector<std::size_t> per_class;  // indexed by class id
};

PreprocessSummary cmd_preprocess(const RunConfig& cfg);

/// Clips from the cache restricted to cfg.folds.
std::vector<LabeledClip> load_clips(const RunConfig& cfg);

struct ExplainResult {
  std::vector<RelevanceMap> maps;
  std::vector<std::filesystem::path> files;
};

/// Writes <maps_dir>/<record>.rlnm per clip plus predictions.csv.
ExplainResult cmd_explain(const RunConfig& cfg);
ExplainResult explain_clips(const ModelGraph& model, const std::vector<LabeledClip>& clips, const RunConfig& cfg);

struct ClassSummary {
  int class_id = 0;
  std::string name;
  std::size_t count = 0;
  double accuracy = 0.0;
  double f_rel_hz = 0.0;
  std::size_t f_rel_index = 0;
  double mean_index = 0.0;
};

struct AnalyzeResult {
  std::vector<ClassSummary> classes;
  std::string similarity_json;
};

/// Groups maps by true class; writes table.csv, centroids.csv,
/// similarity.json and signed / positive class-average renders.
AnalyzeResult cmd_analyze(const RunConfig& cfg);

struct ClassAccuracy {
  int class_id = 0;
  std::string name;
  std::size_t count = 0;
  double before = 0.0;
  double after = 0.0;
  double delta = 0.0;
};

struct RobustnessCondition {
  std::string label;
  std::string only_class;
  std::size_t count = 0;
  double before = 0.0;
  double after = 0.0;
  double delta = 0.0;
  std::vector<ClassAccuracy> per_class;
  /// Per evaluated clip: (clip index, clean prediction, augmented prediction).
  std::vector<std::array<std::size_t, 3>> predictions;
};

struct RobustnessReport {
  std::size_t clips = 0;
  std::vector<std::size_t> per_class_counts;
  std::vector<RobustnessCondition> conditions;
};

RobustnessReport evaluate_robustness(const ModelGraph& model, const std::vector<LabeledClip>& clips,
                                     const RunConfig& cfg);
std::string to_json(const RobustnessReport& report);
/// Writes robustness.json, robustness.csv and one prediction log per
/// condition into cfg.out_dir.
RobustnessReport cmd_robustness(const RunConfig& cfg);

/// Renders a .rlnm file or a grid CSV to <out_stem>.{ppm,csv,json}.
void cmd_render(const std::filesystem::path& input, const std::filesystem::path& out_stem);

}  // namespace rlens
