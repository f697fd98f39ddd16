#include "rlens/fixtures.hpp"

#include <cmath>
#include <numbers>

#include "rlens/random.hpp"
#include "rlens/reference_models.hpp"

namespace rlens {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

LabeledClip make_clip(std::vector<double> samples, int class_id, std::string name, std::size_t index,
                      const char* source) {
  LabeledClip c;
  c.waveform.samples = std::move(samples);
  c.waveform = rms_normalize(std::move(c.waveform));
  c.class_id = class_id;
  c.class_name = std::move(name);
  c.fold = 1;
  c.source_file = std::string(source) + "-" + std::to_string(index);
  return c;
}

}  // namespace

ModelGraph tiny_1d_model(std::uint64_t seed) {
  ModelGraph m;
  m.name = "tiny-1d";
  m.representation = Representation::waveform;
  m.input_shape = {1, 16000};
  m.class_count = kUrbanSoundClasses.size();
  for (auto name : kUrbanSoundClasses) m.class_names.emplace_back(name);
  m.layers = {
      LayerSpec::conv1d(1, 8, 64, 8),   LayerSpec::relu(), LayerSpec::maxpool(4, 4),
      LayerSpec::conv1d(8, 16, 16, 4),  LayerSpec::relu(), LayerSpec::maxpool(4, 4),
      LayerSpec::conv1d(16, 32, 8, 2),  LayerSpec::relu(), LayerSpec::flatten(),
      LayerSpec::dense(384, m.class_count),
  };
  initialize_weights(m, seed);
  m.validate();
  return m;
}

std::vector<double> bandpass_kernel(double f_lo_hz, double f_hi_hz, std::size_t taps, int sample_rate_hz) {
  if (taps % 2 == 0 || taps < 3) throw ConfigError("bandpass_kernel: taps must be odd and >= 3");
  if (!(0.0 <= f_lo_hz && f_lo_hz < f_hi_hz && f_hi_hz <= sample_rate_hz / 2.0)) {
    throw ConfigError("bandpass_kernel: need 0 <= f_lo < f_hi <= fs/2");
  }
  const double lo = f_lo_hz / sample_rate_hz;
  const double hi = f_hi_hz / sample_rate_hz;
  const auto mid = static_cast<double>(taps / 2);
  std::vector<double> h(taps);
  for (std::size_t i = 0; i < taps; ++i) {
    const double t = static_cast<double>(i) - mid;
    const double ideal = t == 0.0 ? 2.0 * (hi - lo)
                                  : (std::sin(kTwoPi * hi * t) - std::sin(kTwoPi * lo * t)) / (std::numbers::pi * t);
    const double w = 0.54 - 0.46 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(taps - 1));
    h[i] = ideal * w;
  }
  // Normalize the response at the band center to one.
  const double fc = 0.5 * (lo + hi);
  Complex g{};
  for (std::size_t i = 0; i < taps; ++i) g += h[i] * std::polar(1.0, -kTwoPi * fc * static_cast<double>(i));
  for (double& v : h) v /= std::abs(g);
  return h;
}

ModelGraph band_detector_model(std::size_t taps) {
  ModelGraph m;
  m.name = "band-detector";
  m.representation = Representation::waveform;
  m.input_shape = {1, 16000};
  m.class_count = 2;
  m.class_names = {"tone", "noise"};
  auto conv = LayerSpec::conv1d(1, 4, taps, 2);
  const double bands[4][2] = {{600, 800}, {1000, 2500}, {4000, 5000}, {5000, 6000}};
  conv.weight = Tensor({4, 1, taps});
  for (std::size_t c = 0; c < 4; ++c) {
    const auto h = bandpass_kernel(bands[c][0], bands[c][1], taps);
    std::copy(h.begin(), h.end(), conv.weight.data.begin() + static_cast<std::ptrdiff_t>(c * taps));
  }
  conv.bias = Tensor({4});
  auto head = LayerSpec::dense(4, 2);
  head.weight = Tensor({2, 4}, {1, 0, 1, 0, 0, 1, 0, 1});
  head.bias = Tensor({2});
  m.layers = {conv, LayerSpec::relu(), LayerSpec::global_avgpool(), head};
  m.validate();
  return m;
}

std::vector<LabeledClip> synthetic_clips(std::size_t count, std::uint64_t seed, std::size_t classes) {
  if (classes == 0 || classes > kUrbanSoundClasses.size()) throw ConfigError("synthetic_clips: 1..10 classes");
  Rng rng(seed);
  std::vector<LabeledClip> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t cls = i % classes;
    const double f1 = 200.0 + 350.0 * static_cast<double>(cls);
    const double f2 = 1.5 * f1 + 40.0;
    const double p1 = rng.uniform(0.0, kTwoPi), p2 = rng.uniform(0.0, kTwoPi);
    std::vector<double> s(16000);
    for (std::size_t n = 0; n < s.size(); ++n) {
      const double t = static_cast<double>(n) / 16000.0;
      s[n] = std::sin(kTwoPi * f1 * t + p1) + 0.5 * std::sin(kTwoPi * f2 * t + p2) + 0.2 * rng.normal();
    }
    out.push_back(make_clip(std::move(s), static_cast<int>(cls), std::string(kUrbanSoundClasses[cls]), i, "synthetic"));
  }
  return out;
}

std::vector<LabeledClip> tone_noise_clips(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledClip> out;
  for (std::size_t i = 0; i < count; ++i) {
    const bool tone = i % 2 == 0;
    std::vector<double> s(16000);
    if (tone) {
      const double f = 680.0 + 20.0 * static_cast<double>(rng.below(4));
      const double phase = rng.uniform(0.0, kTwoPi);
      for (std::size_t n = 0; n < s.size(); ++n) {
        s[n] = std::sin(kTwoPi * f * static_cast<double>(n) / 16000.0 + phase) + 0.1 * rng.normal();
      }
    } else {
      for (double& v : s) v = rng.normal();
    }
    out.push_back(make_clip(std::move(s), tone ? 0 : 1, tone ? "tone" : "noise", i, "tone-noise"));
  }
  return out;
}

}  // namespace rlens
