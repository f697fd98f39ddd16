#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "rlens/augment.hpp"

using namespace rlens;

namespace {

Waveform tone(double hz, std::size_t n = 16000, double amp = 1.0) {
  Waveform x;
  x.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) x.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / 16000.0);
  return x;
}

Waveform noise(std::uint64_t seed) {
  Rng rng(seed);
  return Waveform{oracle::random_signal(rng, 16000), 16000};
}

double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

Waveform mix(double a, const Waveform& x, double b, const Waveform& y) {
  Waveform out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] = a * x.samples[i] + b * y.samples[i];
  return out;
}

}  // namespace

TEST_CASE("gain") {
  const auto x = noise(61);
  CHECK(apply_gain(x, 0.0).samples == x.samples);
  const auto half = apply_gain(x, -6.0206);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(half.samples[i] - 0.5 * x.samples[i]) < 1e-6);
  for (double db : {-12.0, -3.5, -1.0}) {
    CHECK(std::abs(rms(apply_gain(x, db).samples) - rms(x.samples) * std::pow(10.0, db / 20.0)) < 1e-9);
  }
}

TEST_CASE("noise power ratio, determinism and the zero limit") {
  const auto x = tone(440.0);
  Waveform unit = x;
  const double r0 = rms(x.samples);
  for (double& v : unit.samples) v /= r0;
  const auto y = add_noise(unit, 1e-4, 3);
  const auto n = mix(1.0, y, -1.0, unit);
  CHECK(rms(n.samples) == doctest::Approx(1e-2).epsilon(0.05));
  for (double ratio : {1e-4, 1e-3, 1e-2, 1e-1}) {
    const auto d = mix(1.0, add_noise(unit, ratio, 4), -1.0, unit);
    CHECK(std::pow(rms(d.samples), 2) == doctest::Approx(ratio).epsilon(0.05));
  }
  CHECK(add_noise(unit, 1e-3, 5).samples == add_noise(unit, 1e-3, 5).samples);
  CHECK(add_noise(unit, 1e-3, 5).samples != add_noise(unit, 1e-3, 6).samples);
  CHECK(add_noise(unit, 0.0, 5).samples == unit.samples);
  CHECK_THROWS_AS(add_noise(Waveform{std::vector<double>(16000, 0.0), 16000}, 1e-3, 1), DataError);
  CHECK_THROWS_AS(add_noise(unit, -1.0, 1), ConfigError);
}

TEST_CASE("delay shifts right with a zero head") {
  const auto x = noise(62);
  const auto d1 = apply_delay(x, 1.0);
  for (std::size_t i = 0; i < 16; ++i) CHECK(d1.samples[i] == 0.0);
  for (std::size_t i = 16; i < x.size(); ++i) CHECK(d1.samples[i] == x.samples[i - 16]);
  const auto d300 = apply_delay(x, 300.0);
  CHECK(d300.size() == 16000);
  for (std::size_t i = 0; i < 4800; ++i) CHECK(d300.samples[i] == 0.0);
  CHECK(d300.samples[4800] == x.samples[0]);
  CHECK_THROWS_AS(apply_delay(x, 1000.0), ConfigError);
}

TEST_CASE("delay peak of the exhaustive cross-correlation") {
  Rng rng(63);
  const Waveform x{oracle::random_signal(rng, 2000), 16000};
  for (double ms : {1.0, 7.5, 40.0}) {
    const auto y = apply_delay(x, ms);
    std::size_t best = 0;
    double best_c = -INFINITY;
    for (std::size_t lag = 0; lag < x.size(); ++lag) {
      double c = 0.0;
      for (std::size_t i = lag; i < x.size(); ++i) c += y.samples[i] * x.samples[i - lag];
      if (c > best_c) {
        best_c = c;
        best = lag;
      }
    }
    CHECK(best == static_cast<std::size_t>(std::lround(ms * 16.0)));
  }
}

TEST_CASE("filter attenuation and passband") {
  const auto low = tone(100.0);
  CHECK(rms(highpass(low, 3000.0).samples) < 0.01);
  CHECK(rms(lowpass(low, 3000.0).samples) == doctest::Approx(rms(low.samples)).epsilon(0.02));
  const auto high = tone(5000.0);
  CHECK(rms(lowpass(high, 3000.0).samples) < 0.01);
  CHECK(rms(bandpass(tone(1000.0), 3000.0, 500.0).samples) == doctest::Approx(rms(tone(1000.0).samples)).epsilon(0.02));
  CHECK(rms(bandpass(low, 3000.0, 500.0).samples) < 0.01);
  CHECK_THROWS_AS(bandpass(low, 500.0, 3000.0), ConfigError);
  CHECK_THROWS_AS(lowpass(low, 9000.0), ConfigError);
  CHECK_THROWS_AS(highpass(low, 0.0), ConfigError);
}

TEST_CASE("lowpass mask shape") {
  CHECK(lowpass_gain(0.0, 3000.0) == 1.0);
  CHECK(lowpass_gain(2850.0, 3000.0) == 1.0);
  CHECK(lowpass_gain(3000.0, 3000.0) == doctest::Approx(0.5));
  CHECK(lowpass_gain(3150.0, 3000.0) == 0.0);
  double prev = 1.0;
  for (double f = 2800.0; f < 3200.0; f += 10.0) {
    CHECK(lowpass_gain(f, 3000.0) <= prev);
    prev = lowpass_gain(f, 3000.0);
  }
}

TEST_CASE("lowpass plus highpass is the identity") {
  const auto x = noise(64);
  const auto lo = lowpass(x, 2000.0);
  const auto hi = highpass(x, 2000.0);
  CHECK(oracle::rms_diff(mix(1.0, lo, 1.0, hi).samples, x.samples) < 1e-3);
}

TEST_CASE("gain, delay and filters are linear") {
  const auto x = noise(65), y = noise(66);
  const double a = 0.7, b = -1.3;
  const auto xy = mix(a, x, b, y);
  auto check = [&](auto op) {
    const auto lhs = op(xy);
    const auto rhs = mix(a, op(x), b, op(y));
    CHECK(oracle::rms_diff(lhs.samples, rhs.samples) < 1e-6);
  };
  check([](const Waveform& w) { return apply_gain(w, -4.0); });
  check([](const Waveform& w) { return apply_delay(w, 12.0); });
  check([](const Waveform& w) { return lowpass(w, 3000.0); });
  check([](const Waveform& w) { return highpass(w, 3000.0); });
  check([](const Waveform& w) { return bandpass(w, 4000.0, 800.0); });
}

TEST_CASE("filters are idempotent outside the transition band") {
  const auto x = mix(1.0, tone(440.0), 1.0, tone(6000.0));
  const auto lp = lowpass(x, 3000.0);
  CHECK(oracle::rms_diff(lowpass(lp, 3000.0).samples, lp.samples) < 1e-4);
  const auto hp = highpass(x, 3000.0);
  CHECK(oracle::rms_diff(highpass(hp, 3000.0).samples, hp.samples) < 1e-4);
}

TEST_CASE("pitch shift moves the spectral peak and preserves length") {
  const auto x = tone(440.0);
  const auto up = pitch_shift(x, 7.0);
  CHECK(up.size() == 16000);
  CHECK(oracle::peak_frequency_hz(up.samples, 16000.0) == doctest::Approx(659.255).epsilon(0.01));
  CHECK(oracle::rms_diff(pitch_shift(x, 0.0).samples, x.samples) < 1e-3);
  const auto down = pitch_shift(x, -7.0);
  CHECK(oracle::peak_frequency_hz(down.samples, 16000.0) == doctest::Approx(440.0 / std::pow(2.0, 7.0 / 12.0)).epsilon(0.01));
  const auto back = pitch_shift(down, 7.0);
  CHECK(std::abs(oracle::peak_frequency_hz(back.samples, 16000.0) - 440.0) <= 1.0);
  CHECK_THROWS_AS(pitch_shift(x, 13.0), ConfigError);
}

TEST_CASE("every augmentation keeps the clip length") {
  const auto x = noise(67);
  Rng rng(68);
  for (auto kind : {AugmentKind::gain, AugmentKind::noise, AugmentKind::delay, AugmentKind::bandpass,
                    AugmentKind::lowpass, AugmentKind::highpass}) {
    const auto spec = draw_training_augment(kind, rng);
    CHECK(spec.kind == kind);
    CHECK(augment(spec, x).size() == 16000);
  }
  CHECK(augment(AugmentSpec::pitch(7.0), x).size() == 16000);
  CHECK_THROWS_AS(draw_training_augment(AugmentKind::pitch_shift, rng), ConfigError);
}

TEST_CASE("training ranges") {
  Rng rng(69);
  for (int i = 0; i < 50; ++i) {
    const auto g = draw_training_augment(AugmentKind::gain, rng);
    CHECK(g.value >= -12.0);
    CHECK(g.value <= -1.0);
    const auto n = draw_training_augment(AugmentKind::noise, rng);
    CHECK(n.value >= 1e-4);
    CHECK(n.value <= 1e-1);
    const auto d = draw_training_augment(AugmentKind::delay, rng);
    CHECK(d.value >= 1.0);
    CHECK(d.value <= 300.0);
    const auto b = draw_training_augment(AugmentKind::bandpass, rng);
    CHECK(b.value >= 1400.0);
    CHECK(b.value <= 4000.0);
    CHECK(b.value2 >= 500.0);
    CHECK(b.value2 <= 1200.0);
    for (const auto& s : {g, n, d, b}) CHECK(s.in_training_range());
  }
  CHECK_FALSE(AugmentSpec::gain(3.0).in_training_range());
  CHECK_FALSE(AugmentSpec::band(5000.0, 800.0).in_training_range());
}

TEST_CASE("pipelines apply in order and round-trip through JSON") {
  const std::vector<AugmentSpec> pipeline{AugmentSpec::gain(-3.0), AugmentSpec::noise(1e-3, 9), AugmentSpec::delay(5.0),
                                          AugmentSpec::band(3000.0, 700.0), AugmentSpec::low(3000.0),
                                          AugmentSpec::high(300.0), AugmentSpec::pitch(-7.0), AugmentSpec::identity()};
  CHECK(pipeline_from_json(pipeline_to_json(pipeline)) == pipeline);
  const auto x = tone(500.0);
  Waveform manual = x;
  for (const auto& s : pipeline) manual = augment(s, manual);
  CHECK(augment(pipeline, x).samples == manual.samples);

  const auto parsed = pipeline_from_json(R"([{"kind": "highpass", "cutoff_hz": 3000}])");
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0] == AugmentSpec::high(3000.0));
  CHECK(parsed[0].label() == "highpass_3000");
  CHECK(AugmentSpec::pitch(7.0).label() == "pitch_shift_+7");
  CHECK_THROWS_AS(pipeline_from_json(R"({"kind": "gain"})"), ConfigError);
  CHECK_THROWS_AS(pipeline_from_json(R"([{"kind": "reverb"}])"), ConfigError);
  CHECK_THROWS_AS(pipeline_from_json(R"([{"kind": "gain"}])"), ConfigError);
  CHECK_THROWS_AS(pipeline_from_json("[{"), ConfigError);
}
