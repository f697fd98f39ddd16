// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rlens/analysis.hpp"
#include "rlens/augment.hpp"
#include "rlens/dftlrp.hpp"
#include "rlens/fixtures.hpp"
#include "rlens/harness.hpp"
#include "rlens/lrp.hpp"
#include "rlens/model_io.hpp"
#include "rlens/reference_models.hpp"
#include "rlens/signal.hpp"

namespace fs = std::filesystem;
using namespace rlens;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// 1. DFT round trip and Parseval.
Outcome dft_round_trip() {
  Rng rng(101);
  double worst_rt = 0.0, worst_parseval = 0.0;
  for (std::size_t n : {8, 64, 800}) {
    for (int i = 0; i < 1000; ++i) {
      const auto x = oracle::random_signal(rng, n);
      const auto spec = dft(std::span<const double>(x));
      const auto back = idft(spec);
      std::vector<double> re(n);
      for (std::size_t t = 0; t < n; ++t) re[t] = back[t].real();
      worst_rt = std::max(worst_rt, oracle::rms_diff(x, re));
      double ex = 0.0, ey = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        ex += x[t] * x[t];
        ey += std::norm(spec[t]);
      }
      worst_parseval = std::max(worst_parseval, std::abs(ex - ey / static_cast<double>(n)) / ex);
    }
  }
  return {worst_rt < 1e-9 && worst_parseval < 1e-6,
          fmt("max round-trip RMS %.2e, max Parseval rel %.2e", worst_rt, worst_parseval)};
}

// 2. Shape contract.
Outcome stdft_shapes() {
  Rng rng(102);
  Waveform x{oracle::random_signal(rng, 16000), 16000};
  const auto spec = stdft(x, StdftConfig::rectangular(800, 800));
  const auto lm = logmel_spectrogram(x, FrontendConfig{});
  const bool ok = spec.bins() == 401 && spec.frames() == 20 && lm.values.rows() == 64 && lm.values.cols() == 20;
  return {ok, fmt("stdft %.0f x %.0f, logmel ", spec.bins(), spec.frames()) +
                  fmt("%.0f x %.0f", lm.values.rows(), lm.values.cols())};
}

ModelGraph random_network(Rng& rng, bool two_d, std::uint64_t seed) {
  ModelGraph m;
  m.name = "random";
  m.representation = Representation::features;
  m.class_count = 3;
  if (two_d) {
    const std::size_t h = 6 + rng.below(5), w = 6 + rng.below(5), c = 2 + rng.below(3);
    m.input_shape = {1, h, w};
    m.layers.push_back(LayerSpec::conv2d(1, c, 3, 3, 1, 1, Padding::same));
    m.layers.push_back(LayerSpec::relu());
    if (rng.below(2) == 0) {
      m.layers.push_back(LayerSpec::maxpool2d(2, 2, 2, 2));
    } else {
      m.layers.push_back(LayerSpec::depthwise_conv2d(c, 3, 3, 2, 2, Padding::same));
    }
    m.layers.push_back(LayerSpec::global_avgpool());
    m.layers.push_back(LayerSpec::dense(c, 3));
  } else {
    const std::size_t len = 24 + rng.below(16), c = 2 + rng.below(4);
    m.input_shape = {1, len};
    m.layers.push_back(LayerSpec::conv1d(1, c, 3 + rng.below(3), 1 + rng.below(2)));
    m.layers.push_back(LayerSpec::relu());
    m.layers.push_back(rng.below(2) == 0 ? LayerSpec::maxpool(2, 2) : LayerSpec::avgpool(2, 2));
    m.layers.push_back(LayerSpec::flatten());
    m.layers.push_back(LayerSpec::dense(element_count(m.layer_shapes()[4]), 3));
  }
  initialize_weights(m, seed);
  m.validate();
  return m;
}

// 3. Conservation and z+ positivity.
Outcome lrp_conservation() {
  Rng rng(103);
  double worst = 0.0;
  bool zplus_ok = true;
  int explained = 0;
  for (int i = 0; i < 50; ++i) {
    auto m = random_network(rng, i % 2 == 1, 1000 + static_cast<std::uint64_t>(i));
    Tensor input(m.input_shape);
    for (double& v : input.data) v = rng.normal();
    const auto trace = forward(m, input);
    const auto& logits = trace.logits().data;
    const auto cls = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    const auto eps = lrp_backward(m, trace, cls, LrpRule::epsilon(1e-9));
    worst = std::max(worst, std::abs(eps.layer_totals.front() - logits[cls]) / std::abs(logits[cls]));
    if (logits[cls] > 0.0) {
      const auto zp = lrp_backward(m, trace, cls, LrpRule::zplus());
      for (double v : zp.input_relevance.data) zplus_ok = zplus_ok && v >= 0.0;
      ++explained;
    }
  }
  return {worst < 1e-4 && zplus_ok && explained > 0,
          fmt("max relative leak %.2e, z+ nonnegative on %.0f networks", worst, explained) +
              (zplus_ok ? "" : " (negative z+ value found)")};
}

// 4. Closed form against the explicit synthesis-matrix oracle.
Outcome dft_lrp_oracle() {
  Rng rng(104);
  double worst = 0.0;
  for (std::size_t n : {8, 64, 800}) {
    const auto w = oracle::synthesis_matrix(n);
    const std::size_t bins = n / 2 + 1;
    for (int i = 0; i < 20; ++i) {
      Waveform x{oracle::random_signal(rng, n), 16000};
      RelevanceMap rt;
      rt.values = Grid(1, n, oracle::random_signal(rng, n));
      VirtualInspectionConfig cfg;
      cfg.stdft = StdftConfig::rectangular(n, n);
      const auto got = dft_lrp(x, rt, cfg);

      const auto spec = oracle::naive_dft(x.samples);
      std::vector<double> a(2 * bins);
      for (std::size_t k = 0; k < bins; ++k) {
        a[2 * k] = spec[k].real();
        a[2 * k + 1] = spec[k].imag();
      }
      const auto r_in = oracle::explicit_epsilon_lrp(w, a, rt.values.data(), cfg.stabilizer);
      for (std::size_t k = 0; k < bins; ++k) {
        worst = std::max(worst, std::abs(got.values(k, 0) - (r_in[2 * k] + r_in[2 * k + 1])));
      }
    }
  }
  return {worst < 1e-5, fmt("max elementwise difference %.2e", worst)};
}

// 5. Identity loop neutrality.
Outcome virtual_layer_neutrality() {
  const auto model = tiny_1d_model();
  const auto clips = synthetic_clips(10, 105);
  double worst = 0.0;
  for (const auto& c : clips) {
    const auto direct = forward(model, Tensor({1, 16000}, c.waveform.samples));
    const auto looped = virtual_identity_loop(c.waveform, StdftConfig::rectangular(800, 800));
    const auto via = forward(model, Tensor({1, 16000}, looped));
    for (std::size_t k = 0; k < model.class_count; ++k) {
      worst = std::max(worst, std::abs(direct.logits().data[k] - via.logits().data[k]));
    }
  }
  return {worst < 1e-6, fmt("max logit change %.2e on 10 clips", worst)};
}

// 6. Alignment recovery.
Outcome alignment_recovery() {
  Rng rng(106);
  int wrong = 0;
  double worst_self = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto a = oracle::random_grid(rng, 64, 20);
    worst_self = std::max(worst_self, std::abs(aligned_cosine_similarity(a, a).similarity - 1.0));
    for (std::size_t s = 0; s < 20; ++s) {
      const auto r = aligned_cosine_similarity(a, circular_time_shift(a, s));
      if (r.shift != s) ++wrong;
    }
  }
  return {wrong == 0 && worst_self < 1e-9,
          fmt("%.0f of 2000 shifts missed, max |self-similarity - 1| %.2e", wrong, worst_self)};
}

// 7. Frequency focus and centroid unit cases.
Outcome analysis_unit_cases() {
  std::vector<double> f(64);
  for (std::size_t p = 0; p < 64; ++p) f[p] = 100.0 * static_cast<double>(p + 1);
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };

  Grid one(64, 20);
  for (std::size_t m = 0; m < 20; ++m) one(5, m) = 1.0;
  const std::vector<Grid> single{one};
  check(most_relevant_frequency(single, f).hz == f[5], "single map bin 5");

  Grid g4(64, 20), g6(64, 20);
  g4(4, 0) = 1.0;
  g6(6, 0) = 1.0;
  const std::vector<Grid> pair{g4, g6};
  const auto focus = most_relevant_frequency(pair, f);
  check(focus.index == 5 && focus.hz == f[5], "argmax 4 and 6 average to 5");

  Grid uniform(64, 20, 1.0);
  double mean_f = 0.0;
  for (double v : f) mean_f += v;
  mean_f /= 64.0;
  bool uni = true;
  for (const auto& c : relevance_centroid(uniform, f)) uni = uni && c && std::abs(*c - mean_f) < 1e-9 * mean_f;
  check(uni, "uniform relevance centroid");

  Grid spot(64, 20);
  spot(10, 3) = 2.5;
  const auto cs = relevance_centroid(spot, f);
  bool spot_ok = cs[3] && *cs[3] == f[10];
  for (std::size_t m = 0; m < 20; ++m) spot_ok = spot_ok && (m == 3 || !cs[m]);
  check(spot_ok, "single-bin centroid");

  std::vector<double> f2{200.0, 600.0};
  Grid two(2, 1);
  two(0, 0) = 1.0;
  two(1, 0) = 1.0;
  check(relevance_centroid(two, f2)[0] == 400.0, "equal masses at 200 and 600 Hz");

  std::string detail = "all 5 cases exact";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& s : failed) detail += " [" + s + "]";
  }
  return {failed.empty(), detail};
}

double band_rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

// 8. Augmentation physics.
Outcome augmentation_physics() {
  std::vector<double> tone100(16000), tone440(16000);
  for (std::size_t n = 0; n < 16000; ++n) {
    const double t = static_cast<double>(n) / 16000.0;
    tone100[n] = std::sin(2.0 * std::numbers::pi * 100.0 * t);
    tone440[n] = std::sin(2.0 * std::numbers::pi * 440.0 * t);
  }
  const Waveform a{tone100, 16000}, b{tone440, 16000};
  const auto hp = highpass(a, 3000.0);
  const double atten_db = 20.0 * std::log10(band_rms(hp.samples) / band_rms(a.samples));
  const auto shifted = pitch_shift(b, 7.0);
  const double peak = oracle::peak_frequency_hz(shifted.samples, 16000.0);
  const double target = 440.0 * std::pow(2.0, 7.0 / 12.0);

  Rng rng(108);
  Waveform noise_in{oracle::random_signal(rng, 16000), 16000};
  noise_in = rms_normalize(noise_in);
  double worst_ratio = 0.0;
  for (double ratio : {1e-4, 1e-3, 1e-2, 1e-1}) {
    const auto y = add_noise(noise_in, ratio, 7);
    std::vector<double> d(16000);
    for (std::size_t n = 0; n < 16000; ++n) d[n] = y.samples[n] - noise_in.samples[n];
    const double measured = std::pow(band_rms(d), 2) / std::pow(band_rms(noise_in.samples), 2);
    worst_ratio = std::max(worst_ratio, std::abs(measured / ratio - 1.0));
  }
  bool lengths = true;
  for (const auto& spec : {AugmentSpec::gain(-6.0), AugmentSpec::noise(1e-2, 3), AugmentSpec::delay(300.0),
                           AugmentSpec::band(3000.0, 800.0), AugmentSpec::low(3000.0), AugmentSpec::high(3000.0),
                           AugmentSpec::pitch(7.0), AugmentSpec::pitch(-7.0)}) {
    lengths = lengths && augment(spec, b).size() == 16000;
  }
  const bool ok = atten_db <= -40.0 && std::abs(peak - target) <= 0.01 * target && worst_ratio <= 0.05 && lengths;
  return {ok, fmt("100 Hz attenuation %.1f dB, +7 st peak %.1f Hz, noise ratio error %.2e", atten_db, peak, worst_ratio) +
                  (lengths ? ", lengths kept" : ", LENGTH CHANGED")};
}

// Full fixture pipeline (criteria 9 and 10): cache -> explain -> analyze.
RunConfig run_fixture_pipeline(const fs::path& dir, std::uint64_t seed) {
  fs::remove_all(dir);
  write_model(dir / "band-detector.json", band_detector_model());
  write_clip_cache(dir / "cache", tone_noise_clips(40, seed));
  RunConfig cfg;
  cfg.cache_dir = dir / "cache";
  cfg.model = dir / "band-detector.json";
  cfg.representation = Representation::waveform;
  cfg.rule = "epsilon";
  cfg.maps_dir = dir / "maps";
  cfg.out_dir = dir / "report";
  cfg.class_names = {"tone", "noise"};
  cfg.seed = seed;
  cmd_explain(cfg);
  cmd_analyze(cfg);
  return cfg;
}

// 9. Fixture discrimination.
Outcome fixture_discrimination(const fs::path& dir) {
  const auto cfg = run_fixture_pipeline(dir, 2024);
  const auto fb = cfg.frontend.filterbank(16000);
  const auto owner = mel_bin_assignment(fb);
  std::vector<bool> tone_row(fb.filters(), false);
  for (std::size_t k = 0; k < owner.size(); ++k) {
    const double hz = fb.bin_frequency_hz(k);
    if (hz >= 660.0 && hz <= 760.0) tone_row[owner[k]] = true;
  }
  std::map<int, std::vector<Grid>> groups;
  double inside = 0.0, total = 0.0;
  for (const auto& e : fs::directory_iterator(cfg.maps_dir)) {
    if (e.path().extension() != ".rlnm") continue;
    const auto m = read_relevance_map(e.path());
    groups[m.true_class].push_back(m.values);
    if (m.true_class != 0) continue;
    for (std::size_t p = 0; p < m.values.rows(); ++p) {
      for (std::size_t t = 0; t < m.values.cols(); ++t) {
        const double v = std::max(m.values(p, t), 0.0);
        total += v;
        if (tone_row[p]) inside += v;
      }
    }
  }
  const double fraction = total > 0.0 ? inside / total : 0.0;
  const auto rep = similarity_report(groups, cfg.seed);
  const double margin = rep.within_mean - rep.between_mean;
  return {fraction >= 0.6 && margin >= 0.2,
          fmt("tone-bin share of positive relevance %.3f, within %.3f vs between %.3f", fraction, rep.within_mean,
              rep.between_mean)};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream f(e.path(), std::ios::binary);
    out[fs::relative(e.path(), dir).string()] =
        std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  }
  return out;
}

// 10. Determinism of the fixture pipeline.
Outcome determinism(const fs::path& first, const fs::path& second) {
  run_fixture_pipeline(second, 2024);
  const auto a = read_tree(first), b = read_tree(second);
  std::size_t differing = 0;
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != bytes) ++differing;
  }
  const bool ok = differing == 0 && a.size() == b.size() && !a.empty();
  return {ok, fmt("%.0f files compared, %.0f differ", static_cast<double>(a.size()), static_cast<double>(differing))};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "rlens-acceptance";
  fs::create_directories(work);

  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "DFT round trip and Parseval", 5.0, dft_round_trip},
      {2, "STDFT and logmel shapes", 1.0, stdft_shapes},
      {3, "LRP conservation and z+ positivity", 30.0, lrp_conservation},
      {4, "DFT-LRP closed form vs synthesis-matrix oracle", 60.0, dft_lrp_oracle},
      {5, "virtual layer neutrality", 0.0, virtual_layer_neutrality},
      {6, "alignment recovery", 0.0, alignment_recovery},
      {7, "frequency focus and centroid unit cases", 0.0, analysis_unit_cases},
      {8, "augmentation physics", 0.0, augmentation_physics},
      {9, "fixture discrimination", 120.0, [&] { return fixture_discrimination(work / "run1"); }},
      {10, "determinism", 0.0, [&] { return determinism(work / "run1", work / "run2"); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail += fmt(" [runtime %.2f s exceeds %.0f s]", secs, c.limit_s);
    }
    std::printf("%s criterion %d: %s (%s; %.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
