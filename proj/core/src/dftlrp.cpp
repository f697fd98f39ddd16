#include "rlens/dftlrp.hpp"

#include <cmath>
#include <string>

namespace rlens {

void VirtualInspectionConfig::validate(std::size_t signal_length) const {
  stdft.validate(signal_length);
  if (stdft.hop < stdft.window_length) {
    throw ConfigError("dft_lrp: overlapping frames (hop < window length) are not supported");
  }
  for (double w : stdft.window) {
    if (w == 0.0) throw ConfigError("dft_lrp: window has zeros, w^-1 is undefined");
  }
  if (!(stabilizer > 0.0)) throw ConfigError("dft_lrp: stabilizer must be positive");
}

std::vector<double> virtual_identity_loop(const Waveform& x, const StdftConfig& cfg) {
  cfg.validate(x.size());
  std::vector<double> out = x.samples;
  const std::size_t n = cfg.window_length;
  std::vector<double> frame(n);
  for (std::size_t m = 0; m < cfg.frame_count(x.size()); ++m) {
    const std::size_t offset = m * cfg.hop;
    for (std::size_t i = 0; i < n; ++i) frame[i] = x.samples[offset + i] * cfg.window[i];
    auto spectrum = dft(std::span<const double>(frame));
    spectrum.resize(n / 2 + 1);
    const auto back = irdft(spectrum, n);
    for (std::size_t i = 0; i < n; ++i) out[offset + i] = back[i] / cfg.window[i];
  }
  return out;
}

RelevanceMap dft_lrp(const Waveform& x, const RelevanceMap& time_relevance, const VirtualInspectionConfig& cfg) {
  cfg.validate(x.size());
  return dft_lrp(x, stdft(x, cfg.stdft), time_relevance, cfg);
}

RelevanceMap dft_lrp(const Waveform& x, const Spectrogram& spec, const RelevanceMap& time_relevance,
                     const VirtualInspectionConfig& cfg) {
  cfg.validate(x.size());
  const auto& r = time_relevance.values;
  if (time_relevance.domain != RelevanceDomain::time || r.rows() != 1 || r.cols() != x.size()) {
    throw ShapeError("dft_lrp: time relevance must be 1 x " + std::to_string(x.size()));
  }
  const std::size_t n = cfg.stdft.window_length;
  const std::size_t bins = cfg.stdft.bin_count();
  const std::size_t frames = cfg.stdft.frame_count(x.size());
  if (spec.bins() != bins || spec.frames() != frames) {
    throw ShapeError("dft_lrp: phase source spectrogram does not match the frame layout");
  }
  const Grid magnitude = spec.magnitude();
  const Grid phase = spec.phase();

  RelevanceMap out;
  out.domain = RelevanceDomain::time_frequency;
  out.class_index = time_relevance.class_index;
  out.logit = time_relevance.logit;
  out.true_class = time_relevance.true_class;
  out.predicted_class = time_relevance.predicted_class;
  out.fold = time_relevance.fold;
  out.values = Grid(bins, frames);

  const double delta = cfg.stabilizer;
  std::vector<double> g(n);
  for (std::size_t m = 0; m < frames; ++m) {
    const std::size_t offset = m * cfg.stdft.hop;
    for (std::size_t i = 0; i < n; ++i) {
      const double xn = x.samples[offset + i];
      const double denom = xn + (xn >= 0.0 ? delta : -delta);
      g[i] = r(0, offset + i) / (cfg.stdft.window[i] * denom);
    }
    // sum_n cos(2 pi k n/N + phi) g_n = Re(e^{i phi} conj(G_k)) with G = DFT(g).
    const auto big_g = dft(std::span<const double>(g));
    for (std::size_t k = 0; k < bins; ++k) {
      const double c = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
      const Complex rotated = std::polar(magnitude(k, m), phase(k, m)) * std::conj(big_g[k]);
      out.values(k, m) = c / static_cast<double>(n) * rotated.real();
    }
  }
  return out;
}

std::vector<std::size_t> mel_bin_assignment(const MelFilterbank& fb) {
  const Grid& w = fb.weights();
  std::vector<std::size_t> owner(fb.fft_bins());
  for (std::size_t k = 0; k < fb.fft_bins(); ++k) {
    std::size_t best = 0;
    double best_w = 0.0;
    for (std::size_t p = 0; p < fb.filters(); ++p) {
      if (w(k, p) > best_w) {
        best_w = w(k, p);
        best = p;
      }
    }
    if (best_w == 0.0) {
      const double mel = hz_to_mel(fb.bin_frequency_hz(k));
      double best_d = INFINITY;
      for (std::size_t p = 0; p < fb.filters(); ++p) {
        const double d = std::abs(hz_to_mel(fb.center_hz()[p]) - mel);
        if (d < best_d) {
          best_d = d;
          best = p;
        }
      }
    }
    owner[k] = best;
  }
  return owner;
}

RelevanceMap relevance_to_mel(const RelevanceMap& tf_relevance, const MelFilterbank& fb) {
  const Grid& r = tf_relevance.values;
  if (r.rows() != fb.fft_bins()) {
    throw ShapeError("relevance_to_mel: map has " + std::to_string(r.rows()) + " rows, filterbank expects " +
                     std::to_string(fb.fft_bins()));
  }
  const auto owner = mel_bin_assignment(fb);
  RelevanceMap out = tf_relevance;
  out.domain = RelevanceDomain::mel_time_frequency;
  out.values = Grid(fb.filters(), r.cols());
  for (std::size_t k = 0; k < r.rows(); ++k) {
    for (std::size_t m = 0; m < r.cols(); ++m) out.values(owner[k], m) += r(k, m);
  }
  return out;
}

}  // namespace rlens
