#include "rlens/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "json.hpp"

namespace rlens {
namespace {

using nlohmann::json;

constexpr double kTransition = 0.05;
constexpr std::size_t kVocoderWindow = 1024;
constexpr std::size_t kVocoderHop = 256;

void require_nonempty(const Waveform& x, const char* op) {
  if (x.samples.empty()) throw DataError(std::string(op) + ": empty waveform");
}

double wrap_phase(double p) {
  return p - 2.0 * std::numbers::pi * std::round(p / (2.0 * std::numbers::pi));
}

double sample_at(const std::vector<double>& v, double pos) {
  if (pos < 0.0) return 0.0;
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return i < v.size() ? v[i] : 0.0;
  const double t = pos - static_cast<double>(i);
  return v[i] + t * (v[i + 1] - v[i]);
}

std::vector<double> time_stretch(const std::vector<double>& x, double rate) {
  const std::size_t n = kVocoderWindow;
  const std::size_t bins = n / 2 + 1;
  const double analysis_hop = static_cast<double>(kVocoderHop) / rate;
  std::vector<double> window(n);
  for (std::size_t i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  const std::size_t frames =
      x.size() < n ? 1 : static_cast<std::size_t>(std::floor(static_cast<double>(x.size() - n) / analysis_hop)) + 1;
  std::vector<double> out((frames - 1) * kVocoderHop + n, 0.0);
  std::vector<double> norm(out.size(), 0.0);
  std::vector<double> prev_phase(bins, 0.0), synth_phase(bins, 0.0), frame(n);
  std::vector<Complex> half(bins);
  std::size_t prev_pos = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    const auto pos = static_cast<std::size_t>(std::lround(static_cast<double>(t) * analysis_hop));
    for (std::size_t i = 0; i < n; ++i) frame[i] = (pos + i < x.size() ? x[pos + i] : 0.0) * window[i];
    const auto spec = dft(std::span<const double>(frame));
    const double hop_a = static_cast<double>(pos - prev_pos);
    for (std::size_t k = 0; k < bins; ++k) {
      const double phase = std::arg(spec[k]);
      if (t == 0) {
        synth_phase[k] = phase;
      } else {
        const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        const double dev = wrap_phase(phase - prev_phase[k] - omega * hop_a);
        const double inst = hop_a > 0.0 ? omega + dev / hop_a : omega;
        synth_phase[k] += inst * static_cast<double>(kVocoderHop);
      }
      prev_phase[k] = phase;
      half[k] = std::polar(std::abs(spec[k]), synth_phase[k]);
    }
    prev_pos = pos;
    const auto y = irdft(half, n);
    const std::size_t at = t * kVocoderHop;
    for (std::size_t i = 0; i < n; ++i) {
      out[at + i] += y[i] * window[i];
      norm[at + i] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (norm[i] > 1e-8) out[i] /= norm[i];
  }
  return out;
}

}  // namespace

Waveform apply_gain(const Waveform& x, double db) {
  Waveform y = x;
  const double g = std::pow(10.0, db / 20.0);
  for (auto& v : y.samples) v *= g;
  return y;
}

Waveform add_noise(const Waveform& x, double noise_ratio, std::uint64_t seed) {
  require_nonempty(x, "add_noise");
  if (!(noise_ratio >= 0.0) || !std::isfinite(noise_ratio)) {
    throw ConfigError("add_noise: noise ratio must be a finite value >= 0");
  }
  const double signal_rms = rms(x.samples);
  if (signal_rms == 0.0) throw DataError("add_noise: zero-power input");
  Waveform y = x;
  if (noise_ratio == 0.0) return y;
  Rng rng(seed);
  std::vector<double> noise(x.size());
  for (auto& v : noise) v = rng.normal();
  const double scale = signal_rms * std::sqrt(noise_ratio) / rms(noise);
  for (std::size_t i = 0; i < noise.size(); ++i) y.samples[i] += scale * noise[i];
  return y;
}

Waveform apply_delay(const Waveform& x, double ms) {
  const double shift_f = std::round(ms * x.sample_rate_hz / 1000.0);
  if (!(shift_f >= 0.0) || shift_f >= static_cast<double>(x.size())) {
    throw ConfigError("apply_delay: delay of " + std::to_string(ms) + " ms is not within the clip length");
  }
  const auto shift = static_cast<std::size_t>(shift_f);
  Waveform y = x;
  std::fill(y.samples.begin(), y.samples.end(), 0.0);
  std::copy(x.samples.begin(), x.samples.end() - static_cast<std::ptrdiff_t>(shift),
            y.samples.begin() + static_cast<std::ptrdiff_t>(shift));
  return y;
}

double lowpass_gain(double f_hz, double f_c_hz) {
  const double lo = f_c_hz * (1.0 - kTransition);
  const double hi = f_c_hz * (1.0 + kTransition);
  if (f_hz <= lo) return 1.0;
  if (f_hz >= hi) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (f_hz - lo) / (hi - lo)));
}

Waveform apply_filter(const Waveform& x, FilterKind kind, double f_c_hz, double f_hp_hz) {
  require_nonempty(x, "filter");
  const double nyquist = x.sample_rate_hz / 2.0;
  auto check = [&](double f) {
    if (!(f > 0.0 && f < nyquist)) {
      throw ConfigError("filter: cutoff " + std::to_string(f) + " Hz outside (0, " + std::to_string(nyquist) + ")");
    }
  };
  check(f_c_hz);
  if (kind == FilterKind::bandpass) {
    check(f_hp_hz);
    if (f_hp_hz >= f_c_hz) throw ConfigError("bandpass: highpass cutoff must lie below the lowpass cutoff");
  }
  auto spec = dft(std::span<const double>(x.samples));
  const std::size_t n = x.size();
  spec.resize(n / 2 + 1);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * x.sample_rate_hz / static_cast<double>(n);
    double g = 1.0;
    switch (kind) {
      case FilterKind::lowpass: g = lowpass_gain(f, f_c_hz); break;
      case FilterKind::highpass: g = 1.0 - lowpass_gain(f, f_c_hz); break;
      case FilterKind::bandpass: g = lowpass_gain(f, f_c_hz) * (1.0 - lowpass_gain(f, f_hp_hz)); break;
    }
    spec[k] *= g;
  }
  Waveform y;
  y.sample_rate_hz = x.sample_rate_hz;
  y.samples = irdft(spec, n);
  return y;
}

Waveform lowpass(const Waveform& x, double f_c_hz) { return apply_filter(x, FilterKind::lowpass, f_c_hz); }
Waveform highpass(const Waveform& x, double f_c_hz) { return apply_filter(x, FilterKind::highpass, f_c_hz); }
Waveform bandpass(const Waveform& x, double f_lp_hz, double f_hp_hz) {
  return apply_filter(x, FilterKind::bandpass, f_lp_hz, f_hp_hz);
}

Waveform pitch_shift(const Waveform& x, double semitones) {
  if (!(std::abs(semitones) <= 12.0)) throw ConfigError("pitch_shift: |semitones| must be <= 12");
  if (semitones == 0.0) return x;
  require_nonempty(x, "pitch_shift");
  const double rate = std::pow(2.0, semitones / 12.0);
  const std::size_t pad = kVocoderWindow;
  std::vector<double> padded(x.size() + 2 * pad, 0.0);
  std::copy(x.samples.begin(), x.samples.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad));
  const auto stretched = time_stretch(padded, rate);
  Waveform y;
  y.sample_rate_hz = x.sample_rate_hz;
  y.samples.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y.samples[i] = sample_at(stretched, static_cast<double>(i + pad) * rate);
  }
  return y;
}

std::string_view to_string(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::identity: return "identity";
    case AugmentKind::gain: return "gain";
    case AugmentKind::noise: return "noise";
    case AugmentKind::delay: return "delay";
    case AugmentKind::bandpass: return "bandpass";
    case AugmentKind::lowpass: return "lowpass";
    case AugmentKind::highpass: return "highpass";
    case AugmentKind::pitch_shift: return "pitch_shift";
  }
  return "?";
}

AugmentKind augment_kind_from_string(std::string_view name) {
  for (auto k : {AugmentKind::identity, AugmentKind::gain, AugmentKind::noise, AugmentKind::delay,
                 AugmentKind::bandpass, AugmentKind::lowpass, AugmentKind::highpass, AugmentKind::pitch_shift}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown augmentation '" + std::string(name) + "'");
}

std::string AugmentSpec::label() const {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  switch (kind) {
    case AugmentKind::identity: return "identity";
    case AugmentKind::bandpass: return "bandpass_" + num(value2) + "_" + num(value);
    case AugmentKind::pitch_shift: return std::string("pitch_shift_") + (value > 0 ? "+" : "") + num(value);
    default: return std::string(to_string(kind)) + "_" + num(value);
  }
}

bool AugmentSpec::in_training_range() const {
  switch (kind) {
    case AugmentKind::identity: return true;
    case AugmentKind::gain: return value >= -12.0 && value <= -1.0;
    case AugmentKind::noise: return value >= 1e-4 && value <= 1e-1;
    case AugmentKind::delay: return value >= 1.0 && value <= 300.0;
    case AugmentKind::bandpass:
      return value >= 1400.0 && value <= 4000.0 && value2 >= 500.0 && value2 <= 1200.0;
    case AugmentKind::lowpass: return value >= 1400.0 && value <= 4000.0;
    case AugmentKind::highpass: return value >= 500.0 && value <= 1200.0;
    case AugmentKind::pitch_shift: return false;
  }
  return false;
}

AugmentSpec draw_training_augment(AugmentKind kind, Rng& rng) {
  switch (kind) {
    case AugmentKind::identity: return AugmentSpec::identity();
    case AugmentKind::gain: return AugmentSpec::gain(rng.uniform(-12.0, -1.0));
    case AugmentKind::noise:
      // Log-uniform across the three decades.
      return AugmentSpec::noise(std::pow(10.0, rng.uniform(-4.0, -1.0)), rng.next());
    case AugmentKind::delay: return AugmentSpec::delay(rng.uniform(1.0, 300.0));
    case AugmentKind::bandpass: {
      const double lp = rng.uniform(1400.0, 4000.0);
      return AugmentSpec::band(lp, rng.uniform(500.0, 1200.0));
    }
    case AugmentKind::lowpass: return AugmentSpec::low(rng.uniform(1400.0, 4000.0));
    case AugmentKind::highpass: return AugmentSpec::high(rng.uniform(500.0, 1200.0));
    case AugmentKind::pitch_shift: break;
  }
  throw ConfigError("no training range for " + std::string(to_string(kind)));
}

Waveform augment(const AugmentSpec& s, const Waveform& x) {
  switch (s.kind) {
    case AugmentKind::identity: return x;
    case AugmentKind::gain: return apply_gain(x, s.value);
    case AugmentKind::noise: return add_noise(x, s.value, s.seed);
    case AugmentKind::delay: return apply_delay(x, s.value);
    case AugmentKind::bandpass: return bandpass(x, s.value, s.value2);
    case AugmentKind::lowpass: return lowpass(x, s.value);
    case AugmentKind::highpass: return highpass(x, s.value);
    case AugmentKind::pitch_shift: return pitch_shift(x, s.value);
  }
  return x;
}

Waveform augment(std::span<const AugmentSpec> pipeline, const Waveform& x) {
  Waveform y = x;
  for (const auto& s : pipeline) y = augment(s, y);
  return y;
}

std::string pipeline_to_json(std::span<const AugmentSpec> pipeline) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : pipeline) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(s.kind);
    switch (s.kind) {
      case AugmentKind::identity: break;
      case AugmentKind::gain: j["db"] = s.value; break;
      case AugmentKind::noise:
        j["noise_ratio"] = s.value;
        j["seed"] = s.seed;
        break;
      case AugmentKind::delay: j["ms"] = s.value; break;
      case AugmentKind::bandpass:
        j["lowpass_hz"] = s.value;
        j["highpass_hz"] = s.value2;
        break;
      case AugmentKind::lowpass:
      case AugmentKind::highpass: j["cutoff_hz"] = s.value; break;
      case AugmentKind::pitch_shift: j["semitones"] = s.value; break;
    }
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<AugmentSpec> pipeline_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("augmentation pipeline: ") + e.what());
  }
  if (doc.is_object()) doc = json::array({doc});
  if (!doc.is_array()) throw ConfigError("augmentation pipeline must be a JSON array");
  std::vector<AugmentSpec> out;
  for (const auto& j : doc) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("augmentation step needs a \"kind\"");
    auto number = [&](const char* key) {
      if (!j.contains(key) || !j[key].is_number()) {
        throw ConfigError("augmentation '" + j["kind"].get<std::string>() + "' needs numeric \"" + key + "\"");
      }
      return j[key].get<double>();
    };
    AugmentSpec s;
    s.kind = augment_kind_from_string(j["kind"].get<std::string>());
    switch (s.kind) {
      case AugmentKind::identity: break;
      case AugmentKind::gain: s.value = number("db"); break;
      case AugmentKind::noise:
        s.value = number("noise_ratio");
        s.seed = j.value("seed", std::uint64_t{0});
        break;
      case AugmentKind::delay: s.value = number("ms"); break;
      case AugmentKind::bandpass:
        s.value = number("lowpass_hz");
        s.value2 = number("highpass_hz");
        break;
      case AugmentKind::lowpass:
      case AugmentKind::highpass: s.value = number("cutoff_hz"); break;
      case AugmentKind::pitch_shift: s.value = number("semitones"); break;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace rlens
