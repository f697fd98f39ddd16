#include "rlens/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rlens {

double rms(std::span<const double> samples) {
  if (samples.empty()) return 0.0;
  std::vector<double> squares(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) squares[i] = samples[i] * samples[i];
  return std::sqrt(pairwise_sum(squares) / static_cast<double>(samples.size()));
}

Waveform rms_normalize(Waveform x) {
  const double r = rms(x.samples);
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw DataError("rms_normalize: zero-energy signal");
  }
  for (double& v : x.samples) v /= r;
  return x;
}

StdftConfig StdftConfig::rectangular(std::size_t window_length, std::size_t hop) {
  StdftConfig cfg;
  cfg.window_length = window_length;
  cfg.hop = hop;
  cfg.kind = WindowKind::rectangular;
  cfg.window.assign(window_length, 1.0);
  return cfg;
}

StdftConfig StdftConfig::hann(std::size_t window_length, std::size_t hop) {
  StdftConfig cfg;
  cfg.window_length = window_length;
  cfg.hop = hop;
  cfg.kind = WindowKind::hann;
  cfg.window.resize(window_length);
  for (std::size_t n = 0; n < window_length; ++n) {
    cfg.window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                         static_cast<double>(window_length));
  }
  return cfg;
}

std::size_t StdftConfig::frame_count(std::size_t signal_length) const {
  if (signal_length < window_length || hop == 0) return 0;
  return (signal_length - window_length) / hop + 1;
}

void StdftConfig::validate(std::size_t signal_length) const {
  if (window_length == 0 || window_length % 2 != 0) {
    throw ConfigError("stdft: window length must be even and positive, got " +
                      std::to_string(window_length));
  }
  if (hop == 0) throw ConfigError("stdft: hop must be >= 1");
  if (window.size() != window_length) {
    throw ConfigError("stdft: window has " + std::to_string(window.size()) +
                      " coefficients, expected " + std::to_string(window_length));
  }
  if (window_length > signal_length) {
    throw ShapeError("stdft: window length " + std::to_string(window_length) +
                     " exceeds signal length " + std::to_string(signal_length));
  }
}

Spectrogram::Spectrogram(std::size_t bins, std::size_t frames, StdftConfig cfg, int sample_rate_hz)
    : bins_(bins),
      frames_(frames),
      cfg_(std::move(cfg)),
      sample_rate_hz_(sample_rate_hz),
      data_(bins * frames) {}

Grid Spectrogram::magnitude() const {
  Grid g(bins_, frames_);
  for (std::size_t i = 0; i < data_.size(); ++i) g.values()[i] = std::abs(data_[i]);
  return g;
}

Grid Spectrogram::phase() const {
  Grid g(bins_, frames_);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    double p = std::arg(data_[i]);
    if (p <= -std::numbers::pi) p = std::numbers::pi;
    g.values()[i] = p;
  }
  return g;
}

double Spectrogram::bin_frequency_hz(std::size_t k) const {
  return static_cast<double>(k) * sample_rate_hz_ / static_cast<double>(cfg_.window_length);
}

double Spectrogram::frame_time_s(std::size_t m) const {
  return static_cast<double>(m * cfg_.hop) / sample_rate_hz_;
}

Spectrogram stdft(const Waveform& x, const StdftConfig& cfg) {
  cfg.validate(x.size());
  const std::size_t n = cfg.window_length;
  const std::size_t frames = cfg.frame_count(x.size());
  Spectrogram spec(cfg.bin_count(), frames, cfg, x.sample_rate_hz);
  std::vector<double> frame(n);
  for (std::size_t m = 0; m < frames; ++m) {
    const std::size_t offset = m * cfg.hop;
    for (std::size_t i = 0; i < n; ++i) frame[i] = x.samples[offset + i] * cfg.window[i];
    const auto y = dft(std::span<const double>(frame));
    for (std::size_t k = 0; k < spec.bins(); ++k) spec(k, m) = y[k];
  }
  return spec;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank MelFilterbank::build(std::size_t fft_bins, std::size_t filters, int sample_rate_hz,
                                   double f_min_hz, double f_max_hz) {
  if (filters == 0) throw ConfigError("mel_filterbank: need at least one filter");
  if (fft_bins < 2) throw ConfigError("mel_filterbank: need at least two FFT bins");
  if (filters > fft_bins) {
    throw ConfigError("mel_filterbank: " + std::to_string(filters) +
                      " filters exceed the " + std::to_string(fft_bins) + " available FFT bins");
  }
  if (sample_rate_hz <= 0) throw ConfigError("mel_filterbank: sample rate must be positive");
  if (!(f_min_hz >= 0.0 && f_min_hz < f_max_hz && f_max_hz <= sample_rate_hz / 2.0)) {
    throw ConfigError("mel_filterbank: require 0 <= f_min < f_max <= f_S/2");
  }

  MelFilterbank fb;
  fb.sample_rate_hz_ = sample_rate_hz;
  fb.weights_ = Grid(fft_bins, filters);
  const double mel_lo = hz_to_mel(f_min_hz);
  const double mel_hi = hz_to_mel(f_max_hz);
  const double step = (mel_hi - mel_lo) / static_cast<double>(filters + 1);
  std::vector<double> edges(filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + step * static_cast<double>(i));
  }
  edges.front() = f_min_hz;
  edges.back() = f_max_hz;

  for (std::size_t p = 0; p < filters; ++p) {
    const double lo = edges[p], c = edges[p + 1], hi = edges[p + 2];
    const double height = 2.0 / (hi - lo);
    fb.lower_hz_.push_back(lo);
    fb.center_hz_.push_back(c);
    fb.upper_hz_.push_back(hi);
    fb.peak_height_.push_back(height);
    for (std::size_t k = 0; k < fft_bins; ++k) {
      const double f = fb.bin_frequency_hz(k);
      const double rise = (f - lo) / (c - lo);
      const double fall = (hi - f) / (hi - c);
      const double w = std::max(0.0, std::min(rise, fall));
      fb.weights_(k, p) = w * height;
    }
  }
  return fb;
}

double MelFilterbank::bin_frequency_hz(std::size_t k) const {
  const double n_fft = 2.0 * static_cast<double>(weights_.rows() - 1);
  return static_cast<double>(k) * sample_rate_hz_ / n_fft;
}

MelSpectrogram mel_spectrogram(const Spectrogram& spec, const MelFilterbank& fb) {
  if (spec.bins() != fb.fft_bins()) {
    throw ShapeError("mel_spectrogram: spectrogram has " + std::to_string(spec.bins()) +
                     " bins but the filterbank expects " + std::to_string(fb.fft_bins()));
  }
  const Grid mag = spec.magnitude();
  const Grid& t = fb.weights();
  MelSpectrogram out;
  out.values = Grid(fb.filters(), spec.frames());
  out.scale = MelScale::mel;
  out.center_hz = fb.center_hz();
  for (std::size_t p = 0; p < fb.filters(); ++p) {
    for (std::size_t k = 0; k < fb.fft_bins(); ++k) {
      const double w = t(k, p);
      if (w == 0.0) continue;
      for (std::size_t m = 0; m < spec.frames(); ++m) out.values(p, m) += w * mag(k, m);
    }
  }
  return out;
}

MelSpectrogram logmel(const MelSpectrogram& mel, double floor) {
  if (!(floor > 0.0)) throw ConfigError("logmel: floor must be positive");
  if (mel.scale != MelScale::mel) throw ConfigError("logmel: input is already logarithmic");
  MelSpectrogram out = mel;
  out.scale = MelScale::logmel;
  for (double& v : out.values.values()) v = std::log(std::max(v, floor));
  return out;
}

MelFilterbank FrontendConfig::filterbank(int sample_rate_hz) const {
  return MelFilterbank::build(stdft.bin_count(), mel_bands, sample_rate_hz, f_min_hz, f_max_hz);
}

MelSpectrogram logmel_spectrogram(const Waveform& x, const FrontendConfig& cfg) {
  const auto spec = stdft(x, cfg.stdft);
  return logmel(mel_spectrogram(spec, cfg.filterbank(x.sample_rate_hz)), cfg.log_floor);
}

std::vector<double> mixdown(std::span<const std::vector<double>> channels) {
  if (channels.empty()) throw DataError("mixdown: no channels");
  const std::size_t n = channels.front().size();
  for (const auto& ch : channels) {
    if (ch.size() != n) throw ShapeError("mixdown: channels differ in length");
  }
  std::vector<double> out(n, 0.0);
  const double inv = 1.0 / static_cast<double>(channels.size());
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& ch : channels) s += ch[i];
    out[i] = s * inv;
  }
  return out;
}

Waveform resample_linear(const Waveform& x, int target_rate_hz) {
  if (target_rate_hz <= 0 || x.sample_rate_hz <= 0) {
    throw ConfigError("resample_linear: sample rates must be positive");
  }
  if (target_rate_hz == x.sample_rate_hz || x.samples.empty()) {
    Waveform same = x;
    same.sample_rate_hz = target_rate_hz;
    return same;
  }
  const double ratio = static_cast<double>(x.sample_rate_hz) / target_rate_hz;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * target_rate_hz / x.sample_rate_hz));
  Waveform y;
  y.sample_rate_hz = target_rate_hz;
  y.samples.resize(out_len);
  const std::size_t last = x.size() - 1;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double t = static_cast<double>(i) * ratio;
    const auto idx = static_cast<std::size_t>(t);
    if (idx >= last) {
      y.samples[i] = x.samples[last];
      continue;
    }
    const double frac = t - static_cast<double>(idx);
    y.samples[i] = x.samples[idx] + frac * (x.samples[idx + 1] - x.samples[idx]);
  }
  return y;
}

}  // namespace rlens
