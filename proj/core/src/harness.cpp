#include "rlens/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>

#include "byte_io.hpp"
#include "csv.hpp"
#include "json.hpp"
#include "rlens/analysis.hpp"
#include "rlens/model_io.hpp"
#include "rlens/parallel.hpp"
#include "rlens/render.hpp"

namespace rlens {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string normalize_name(std::string_view name) {
  std::string s = lower(std::string(name));
  std::replace(s.begin(), s.end(), ' ', '_');
  return s;
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: \"") + key + "\" has the wrong type");
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
      throw ConfigError(where + ": unknown key \"" + k + "\"");
    }
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::string record_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<RobustnessStep> default_robustness_steps(const std::string& target_class) {
  return {
      {"highpass_3000", {AugmentSpec::high(3000.0)}, ""},
      {"lowpass_3000", {AugmentSpec::low(3000.0)}, ""},
      {"pitch_shift_+7", {AugmentSpec::pitch(7.0)}, target_class},
      {"pitch_shift_-7", {AugmentSpec::pitch(-7.0)}, target_class},
  };
}

std::string RunConfig::class_name(int id) const {
  if (id >= 0 && static_cast<std::size_t>(id) < class_names.size()) return class_names[static_cast<std::size_t>(id)];
  if (class_names.empty() && id >= 0 && static_cast<std::size_t>(id) < kUrbanSoundClasses.size()) {
    return std::string(kUrbanSoundClasses[static_cast<std::size_t>(id)]);
  }
  return "class_" + std::to_string(id);
}

int RunConfig::class_id(std::string_view name) const {
  const std::string want = normalize_name(name);
  if (class_names.empty()) return urban_sound_class_id(name);
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    if (normalize_name(class_names[i]) == want) return static_cast<int>(i);
  }
  return -1;
}

RunConfig parse_run_config(std::string_view text, const fs::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(j,
             {"dataset_dir", "metadata_csv", "cache_dir", "model", "maps_dir", "out_dir", "representation", "rule",
              "epsilon", "stdft", "mel", "robustness", "target_class", "classes", "class_names", "folds", "seed",
              "max_between_pairs"},
             "config");
  RunConfig c;
  for (auto [key, field] : {std::pair{"dataset_dir", &c.dataset_dir}, std::pair{"metadata_csv", &c.metadata_csv},
                            std::pair{"cache_dir", &c.cache_dir}, std::pair{"model", &c.model},
                            std::pair{"maps_dir", &c.maps_dir}, std::pair{"out_dir", &c.out_dir}}) {
    if (j.contains(key)) *field = resolve(base, get<std::string>(j, key));
  }
  if (j.contains("representation")) c.representation = representation_from_string(get<std::string>(j, "representation"));
  if (j.contains("rule")) c.rule = get<std::string>(j, "rule");
  if (c.rule != "epsilon" && c.rule != "zplus" && c.rule != "epsilon_plus") {
    throw ConfigError("config: rule must be epsilon, zplus or epsilon_plus");
  }
  if (j.contains("epsilon")) c.epsilon = get<double>(j, "epsilon");
  if (j.contains("stdft")) {
    const auto& s = j["stdft"];
    check_keys(s, {"window_length", "hop", "window", "stabilizer"}, "config.stdft");
    const auto n = s.contains("window_length") ? get<std::size_t>(s, "window_length") : std::size_t{800};
    const auto h = s.contains("hop") ? get<std::size_t>(s, "hop") : n;
    const auto w = s.contains("window") ? get<std::string>(s, "window") : std::string("rectangular");
    if (w == "rectangular") {
      c.inspection.stdft = StdftConfig::rectangular(n, h);
    } else if (w == "hann") {
      c.inspection.stdft = StdftConfig::hann(n, h);
    } else {
      throw ConfigError("config.stdft: window must be rectangular or hann");
    }
    if (s.contains("stabilizer")) c.inspection.stabilizer = get<double>(s, "stabilizer");
    c.frontend.stdft = c.inspection.stdft;
  }
  if (j.contains("mel")) {
    const auto& m = j["mel"];
    check_keys(m, {"bands", "f_min_hz", "f_max_hz", "log_floor"}, "config.mel");
    if (m.contains("bands")) c.frontend.mel_bands = get<std::size_t>(m, "bands");
    if (m.contains("f_min_hz")) c.frontend.f_min_hz = get<double>(m, "f_min_hz");
    if (m.contains("f_max_hz")) c.frontend.f_max_hz = get<double>(m, "f_max_hz");
    if (m.contains("log_floor")) c.frontend.log_floor = get<double>(m, "log_floor");
  }
  if (j.contains("target_class")) c.target_class = get<std::string>(j, "target_class");
  if (j.contains("classes")) c.classes = get<std::vector<std::string>>(j, "classes");
  if (j.contains("class_names")) c.class_names = get<std::vector<std::string>>(j, "class_names");
  if (j.contains("folds")) c.folds = get<std::vector<int>>(j, "folds");
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("max_between_pairs")) c.max_between_pairs = get<std::size_t>(j, "max_between_pairs");
  if (j.contains("robustness")) {
    if (!j["robustness"].is_array()) throw ConfigError("config.robustness must be an array");
    for (const auto& s : j["robustness"]) {
      if (!s.is_object()) throw ConfigError("config.robustness entries must be objects");
      RobustnessStep step;
      json spec = s;
      if (s.contains("class")) {
        step.only_class = get<std::string>(s, "class");
        spec.erase("class");
      }
      if (s.contains("label")) {
        step.label = get<std::string>(s, "label");
        spec.erase("label");
      }
      step.pipeline = pipeline_from_json(s.contains("pipeline") ? s["pipeline"].dump() : spec.dump());
      if (step.label.empty()) {
        for (const auto& a : step.pipeline) step.label += (step.label.empty() ? "" : "+") + a.label();
      }
      c.robustness.push_back(std::move(step));
    }
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_run_config(text, path.parent_path());
}

LrpRule make_rule(const RunConfig& cfg, const ModelGraph& model) {
  if (cfg.rule == "epsilon") return LrpRule::epsilon(cfg.epsilon);
  if (cfg.rule == "zplus") return LrpRule::zplus();
  return composite_epsilon_plus(model, cfg.epsilon);
}

Tensor model_input(const ModelGraph& model, const Waveform& x, const FrontendConfig& frontend) {
  if (model.representation == Representation::logmel) {
    const auto lm = logmel_spectrogram(x, frontend);
    return Tensor({1, lm.values.rows(), lm.values.cols()}, lm.values.data());
  }
  if (model.representation != Representation::waveform) {
    throw ConfigError("model '" + model.name + "' does not take audio input");
  }
  return Tensor({1, x.size()}, x.samples);
}

std::size_t predict(const ModelGraph& model, const Waveform& x, const FrontendConfig& frontend) {
  const auto trace = forward(model, model_input(model, x, frontend));
  return argmax(trace.logits().values());
}

RelevanceMap explain_clip(const ModelGraph& model, const Waveform& x, std::size_t class_index, const LrpRule& rule,
                          const RunConfig& cfg) {
  const auto trace = forward(model, model_input(model, x, cfg.frontend));
  auto ex = lrp_backward(model, trace, class_index, rule);
  RelevanceMap out;
  if (model.representation == Representation::logmel) {
    out = std::move(ex.map);
  } else {
    const auto tf = dft_lrp(x, ex.map, cfg.inspection);
    out = relevance_to_mel(tf, cfg.frontend.filterbank(x.sample_rate_hz));
  }
  out.class_index = class_index;
  out.logit = trace.logits().data[class_index];
  out.predicted_class = static_cast<int>(argmax(trace.logits().values()));
  return out;
}

PreprocessSummary cmd_preprocess(const RunConfig& cfg) {
  if (cfg.metadata_csv.empty()) throw ConfigError("preprocess: metadata_csv is not set");
  if (cfg.dataset_dir.empty()) throw ConfigError("preprocess: dataset_dir is not set");
  const fs::path cache = cfg.cache_dir.empty() ? cfg.out_dir : cfg.cache_dir;
  auto meta = read_metadata_csv(cfg.metadata_csv);
  if (!cfg.folds.empty()) {
    std::erase_if(meta, [&](const MetadataRow& r) {
      return std::find(cfg.folds.begin(), cfg.folds.end(), r.fold) == cfg.folds.end();
    });
  }
  auto report = preprocess_dataset(cfg.dataset_dir, meta);
  if (report.clips.empty()) throw DataError("preprocess: no clips produced from " + cfg.dataset_dir.string());

  PreprocessSummary s;
  s.files = meta.size() - report.skipped.size();
  s.clips = report.clips.size();
  s.dropped_silent = report.dropped_silent;
  s.skipped = report.skipped;
  for (const auto& c : report.clips) {
    const auto id = static_cast<std::size_t>(c.class_id);
    if (s.per_class.size() <= id) s.per_class.resize(id + 1, 0);
    ++s.per_class[id];
  }
  write_clip_cache(cache, report.clips);

  nlohmann::ordered_json j;
  j["files"] = s.files;
  j["clips"] = s.clips;
  j["dropped_silent"] = s.dropped_silent;
  j["skipped"] = s.skipped;
  auto per = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.per_class.size(); ++i) {
    per.push_back({{"class_id", i}, {"class", cfg.class_name(static_cast<int>(i))}, {"clips", s.per_class[i]}});
  }
  j["per_class"] = std::move(per);
  write_text(cache / "summary.json", j.dump(2) + "\n");
  return s;
}

std::vector<LabeledClip> load_clips(const RunConfig& cfg) {
  if (cfg.cache_dir.empty()) throw ConfigError("cache_dir is not set");
  auto clips = read_clip_cache(cfg.cache_dir);
  if (!cfg.folds.empty()) {
    std::erase_if(clips, [&](const LabeledClip& c) {
      return std::find(cfg.folds.begin(), cfg.folds.end(), c.fold) == cfg.folds.end();
    });
  }
  if (clips.empty()) throw DataError("no clips in " + cfg.cache_dir.string() + " for the selected folds");
  return clips;
}

namespace {

ModelGraph load_checked_model(const RunConfig& cfg) {
  if (cfg.model.empty()) throw ConfigError("model is not set");
  auto model = read_model(cfg.model);
  if (cfg.representation && *cfg.representation != model.representation) {
    throw ConfigError("config representation '" + std::string(to_string(*cfg.representation)) + "' does not match model '" +
                      model.name + "' (" + std::string(to_string(model.representation)) + ")");
  }
  return model;
}

}  // namespace

ExplainResult explain_clips(const ModelGraph& model, const std::vector<LabeledClip>& clips, const RunConfig& cfg) {
  const auto rule = make_rule(cfg, model);
  if (model.representation == Representation::waveform) cfg.inspection.validate(model.input_shape.back());
  ExplainResult res;
  res.maps.resize(clips.size());
  parallel_for(clips.size(), [&](std::size_t i) {
    const auto& c = clips[i];
    if (c.class_id < 0 || static_cast<std::size_t>(c.class_id) >= model.class_count) {
      throw DataError("clip " + std::to_string(i) + ": class " + std::to_string(c.class_id) + " is outside the model's " +
                      std::to_string(model.class_count) + " outputs");
    }
    auto map = explain_clip(model, c.waveform, static_cast<std::size_t>(c.class_id), rule, cfg);
    map.true_class = c.class_id;
    map.fold = c.fold;
    res.maps[i] = std::move(map);
  });
  return res;
}

ExplainResult cmd_explain(const RunConfig& cfg) {
  const auto model = load_checked_model(cfg);
  const auto clips = load_clips(cfg);
  auto res = explain_clips(model, clips, cfg);
  const fs::path dir = cfg.maps_dir.empty() ? cfg.out_dir / "maps" : cfg.maps_dir;
  fs::create_directories(dir);
  std::string log = "record,source_file,patch_index,fold,true_class,predicted_class,logit,relevance_total,map_file\n";
  for (std::size_t i = 0; i < res.maps.size(); ++i) {
    const auto& m = res.maps[i];
    const fs::path file = dir / (record_name(i) + ".rlnm");
    write_relevance_map(file, m);
    res.files.push_back(file);
    log += std::to_string(i) + "," + csv_escape(clips[i].source_file) + "," + std::to_string(clips[i].patch_index) + "," +
           std::to_string(m.fold) + "," + std::to_string(m.true_class) + "," + std::to_string(m.predicted_class) + "," +
           fmt(m.logit) + "," + fmt(m.total()) + "," + file.filename().string() + "\n";
  }
  write_text(dir / "predictions.csv", log);
  return res;
}

AnalyzeResult cmd_analyze(const RunConfig& cfg) {
  const fs::path dir = cfg.maps_dir.empty() ? cfg.out_dir / "maps" : cfg.maps_dir;
  if (!fs::is_directory(dir)) throw DataError("maps directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".rlnm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::map<int, std::vector<Grid>> groups;
  std::map<int, std::size_t> correct;
  for (const auto& f : files) {
    const auto m = read_relevance_map(f);
    if (m.domain != RelevanceDomain::mel_time_frequency) {
      throw DataError(f.string() + ": expected a mel time-frequency map");
    }
    if (!cfg.folds.empty() && std::find(cfg.folds.begin(), cfg.folds.end(), m.fold) == cfg.folds.end()) continue;
    groups[m.true_class].push_back(m.values);
    correct[m.true_class] += m.predicted_class == m.true_class ? 1 : 0;
  }
  if (!cfg.classes.empty()) {
    std::map<int, std::vector<Grid>> wanted;
    for (const auto& name : cfg.classes) {
      const int id = cfg.class_id(name);
      if (id < 0) throw ConfigError("analyze: unknown class '" + name + "'");
      auto it = groups.find(id);
      if (it == groups.end() || it->second.empty()) throw DataError("analyze: class '" + name + "' has no relevance maps");
      wanted[id] = std::move(it->second);
    }
    groups = std::move(wanted);
  }
  if (groups.empty()) throw DataError("analyze: no relevance maps in " + dir.string());

  const auto fb = cfg.frontend.filterbank(kDefaultSampleRate);
  const auto& centers = fb.center_hz();
  AnalyzeResult res;
  std::string table = "class_id,class,count,accuracy,f_rel_hz,f_rel_index,mean_argmax_index\n";
  std::string centroids = "class_id,class,frame,centroid_hz,maps_with_positive_relevance\n";
  for (const auto& [id, maps] : groups) {
    const auto focus = most_relevant_frequency(maps, centers);
    ClassSummary s{id, cfg.class_name(id), maps.size(), ratio(correct[id], maps.size()), focus.hz, focus.index,
                   focus.mean_index};
    table += std::to_string(id) + "," + csv_escape(s.name) + "," + std::to_string(s.count) + "," + fmt(s.accuracy) +
             "," + fmt(s.f_rel_hz) + "," + std::to_string(s.f_rel_index) + "," + fmt(s.mean_index) + "\n";
    const std::size_t frames = maps.front().cols();
    std::vector<double> sum(frames, 0.0);
    std::vector<std::size_t> n(frames, 0);
    for (const auto& m : maps) {
      const auto c = relevance_centroid(m, centers);
      for (std::size_t t = 0; t < frames; ++t) {
        if (c[t]) {
          sum[t] += *c[t];
          ++n[t];
        }
      }
    }
    for (std::size_t t = 0; t < frames; ++t) {
      centroids += std::to_string(id) + "," + csv_escape(s.name) + "," + std::to_string(t) + "," +
                   (n[t] ? fmt(sum[t] / static_cast<double>(n[t])) : std::string()) + "," + std::to_string(n[t]) + "\n";
    }
    res.classes.push_back(std::move(s));
  }
  write_text(cfg.out_dir / "table.csv", table);
  write_text(cfg.out_dir / "centroids.csv", centroids);

  std::size_t eligible = 0;
  for (const auto& [id, maps] : groups) eligible += maps.size() >= 2 ? 1 : 0;
  if (eligible >= 2) {
    res.similarity_json = to_json(similarity_report(groups, cfg.seed, cfg.max_between_pairs));
    write_text(cfg.out_dir / "similarity.json", res.similarity_json);
  }
  for (bool positive : {false, true}) {
    for (const auto& [id, avg] : class_average_heatmaps(groups, positive)) {
      write_rendering(cfg.out_dir / "average" / (cfg.class_name(id) + (positive ? "_positive" : "_signed")), avg);
    }
  }
  return res;
}

RobustnessReport evaluate_robustness(const ModelGraph& model, const std::vector<LabeledClip>& clips,
                                     const RunConfig& cfg) {
  const auto steps = cfg.robustness.empty() ? default_robustness_steps(cfg.target_class) : cfg.robustness;
  RobustnessReport rep;
  rep.clips = clips.size();
  rep.per_class_counts.assign(model.class_count, 0);
  for (const auto& c : clips) {
    if (c.class_id < 0 || static_cast<std::size_t>(c.class_id) >= model.class_count) {
      throw DataError("clip class " + std::to_string(c.class_id) + " is outside the model's outputs");
    }
    ++rep.per_class_counts[static_cast<std::size_t>(c.class_id)];
  }
  std::vector<std::size_t> clean(clips.size());
  parallel_for(clips.size(), [&](std::size_t i) { clean[i] = predict(model, clips[i].waveform, cfg.frontend); });

  for (const auto& step : steps) {
    int only = -1;
    if (!step.only_class.empty()) {
      only = cfg.class_id(step.only_class);
      if (only < 0) throw ConfigError("robustness: unknown class '" + step.only_class + "'");
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      if (only < 0 || clips[i].class_id == only) idx.push_back(i);
    }
    std::vector<std::size_t> after(idx.size());
    parallel_for(idx.size(), [&](std::size_t j) {
      const auto& c = clips[idx[j]];
      const auto y = augment(step.pipeline, c.waveform);
      if (y.size() != c.waveform.size()) throw ConfigError("robustness: '" + step.label + "' changed the clip length");
      after[j] = predict(model, y, cfg.frontend);
    });

    RobustnessCondition cond;
    cond.label = step.label;
    cond.only_class = step.only_class;
    cond.count = idx.size();
    std::vector<std::size_t> n(model.class_count, 0), ok_before(model.class_count, 0), ok_after(model.class_count, 0);
    std::size_t tb = 0, ta = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto i = idx[j];
      const auto t = static_cast<std::size_t>(clips[i].class_id);
      ++n[t];
      ok_before[t] += clean[i] == t ? 1 : 0;
      ok_after[t] += after[j] == t ? 1 : 0;
      cond.predictions.push_back({i, clean[i], after[j]});
    }
    for (std::size_t t = 0; t < model.class_count; ++t) {
      tb += ok_before[t];
      ta += ok_after[t];
      if (n[t] == 0) continue;
      ClassAccuracy a{static_cast<int>(t), cfg.class_name(static_cast<int>(t)), n[t], ratio(ok_before[t], n[t]),
                      ratio(ok_after[t], n[t]), 0.0};
      a.delta = a.after - a.before;
      cond.per_class.push_back(std::move(a));
    }
    cond.before = ratio(tb, idx.size());
    cond.after = ratio(ta, idx.size());
    cond.delta = cond.after - cond.before;
    rep.conditions.push_back(std::move(cond));
  }
  return rep;
}

std::string to_json(const RobustnessReport& r) {
  nlohmann::ordered_json j;
  j["clips"] = r.clips;
  j["per_class_counts"] = r.per_class_counts;
  auto conds = nlohmann::ordered_json::array();
  for (const auto& c : r.conditions) {
    nlohmann::ordered_json cj;
    cj["label"] = c.label;
    cj["class"] = c.only_class.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(c.only_class);
    cj["clips"] = c.count;
    cj["accuracy_before"] = c.before;
    cj["accuracy_after"] = c.after;
    cj["delta"] = c.delta;
    auto per = nlohmann::ordered_json::array();
    for (const auto& a : c.per_class) {
      per.push_back({{"class_id", a.class_id},
                     {"class", a.name},
                     {"clips", a.count},
                     {"accuracy_before", a.before},
                     {"accuracy_after", a.after},
                     {"delta", a.delta}});
    }
    cj["per_class"] = std::move(per);
    conds.push_back(std::move(cj));
  }
  j["conditions"] = std::move(conds);
  return j.dump(2) + "\n";
}

RobustnessReport cmd_robustness(const RunConfig& cfg) {
  const auto model = load_checked_model(cfg);
  const auto clips = load_clips(cfg);
  auto rep = evaluate_robustness(model, clips, cfg);
  write_text(cfg.out_dir / "robustness.json", to_json(rep));
  std::string csv = "condition,class_id,class,clips,accuracy_before,accuracy_after,delta\n";
  for (const auto& c : rep.conditions) {
    csv += csv_escape(c.label) + ",,all," + std::to_string(c.count) + "," + fmt(c.before) + "," + fmt(c.after) + "," +
           fmt(c.delta) + "\n";
    for (const auto& a : c.per_class) {
      csv += csv_escape(c.label) + "," + std::to_string(a.class_id) + "," + csv_escape(a.name) + "," +
             std::to_string(a.count) + "," + fmt(a.before) + "," + fmt(a.after) + "," + fmt(a.delta) + "\n";
    }
    std::string log = "record,source_file,true_class,clean_prediction,augmented_prediction\n";
    for (const auto& [i, before, after] : c.predictions) {
      log += std::to_string(i) + "," + csv_escape(clips[i].source_file) + "," + std::to_string(clips[i].class_id) + "," +
             std::to_string(before) + "," + std::to_string(after) + "\n";
    }
    write_text(cfg.out_dir / ("predictions_" + c.label + ".csv"), log);
  }
  write_text(cfg.out_dir / "robustness.csv", csv);
  return rep;
}

void cmd_render(const fs::path& input, const fs::path& out_stem) {
  Grid grid;
  if (input.extension() == ".csv") {
    const auto bytes = read_file(input);
    grid = grid_from_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } else {
    grid = read_relevance_map(input).values;
  }
  write_rendering(out_stem, grid);
}

}  // namespace rlens
