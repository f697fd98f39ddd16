#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlens/random.hpp"
#include "rlens/signal.hpp"

namespace rlens {

Waveform apply_gain(const Waveform& x, double db);

/// Adds white Gaussian noise whose power is `noise_ratio` times the signal
/// power. The parameter is a noise-to-signal power ratio, not an SNR in dB.
/// The drawn noise is rescaled so the ratio holds exactly over the clip.
Waveform add_noise(const Waveform& x, double noise_ratio, std::uint64_t seed);

/// Shifts right by round(ms * fs / 1000) samples, zero-filling the head.
Waveform apply_delay(const Waveform& x, double ms);

enum class FilterKind { lowpass, highpass, bandpass };

/// Zero-phase FFT mask. Transitions are raised-cosine ramps spanning
/// [0.95 f_c, 1.05 f_c]; the highpass mask is one minus the lowpass mask.
/// Bandpass keeps (f_hp, f_lp), i.e. highpass(f_hp) times lowpass(f_lp).
Waveform apply_filter(const Waveform& x, FilterKind kind, double f_c_hz, double f_hp_hz = 0.0);
Waveform lowpass(const Waveform& x, double f_c_hz);
Waveform highpass(const Waveform& x, double f_c_hz);
Waveform bandpass(const Waveform& x, double f_lp_hz, double f_hp_hz);

/// Lowpass mask value at `f_hz` for cutoff f_c.
double lowpass_gain(double f_hz, double f_c_hz);

/// Scales every frequency by 2^(semitones/12) keeping the length: phase
/// vocoder time stretch (N = 1024, hop 256, Hann analysis and synthesis)
/// followed by linear resampling back to the input length.
Waveform pitch_shift(const Waveform& x, double semitones);

enum class AugmentKind { identity, gain, noise, delay, bandpass, lowpass, highpass, pitch_shift };

std::string_view to_string(AugmentKind kind);
AugmentKind augment_kind_from_string(std::string_view name);

struct AugmentSpec {
  AugmentKind kind = AugmentKind::identity;
  /// dB, noise ratio, ms, cutoff Hz or semitones depending on kind; for
  /// bandpass the lowpass cutoff.
  double value = 0.0;
  /// Bandpass highpass cutoff.
  double value2 = 0.0;
  std::uint64_t seed = 0;

  static AugmentSpec identity() { return {}; }
  static AugmentSpec gain(double db) { return {AugmentKind::gain, db}; }
  static AugmentSpec noise(double ratio, std::uint64_t seed) { return {AugmentKind::noise, ratio, 0.0, seed}; }
  static AugmentSpec delay(double ms) { return {AugmentKind::delay, ms}; }
  static AugmentSpec band(double f_lp, double f_hp) { return {AugmentKind::bandpass, f_lp, f_hp}; }
  static AugmentSpec low(double f_c) { return {AugmentKind::lowpass, f_c}; }
  static AugmentSpec high(double f_c) { return {AugmentKind::highpass, f_c}; }
  static AugmentSpec pitch(double semitones) { return {AugmentKind::pitch_shift, semitones}; }

  /// Short label such as "highpass_3000" or "pitch_shift_+7".
  std::string label() const;
  /// True when the parameters lie in the ranges used for training.
  bool in_training_range() const;

  friend bool operator==(const AugmentSpec&, const AugmentSpec&) = default;
};

/// Draws parameters uniformly from the training range of `kind`.
AugmentSpec draw_training_augment(AugmentKind kind, Rng& rng);

Waveform augment(const AugmentSpec& spec, const Waveform& x);
/// Applies the steps in order.
Waveform augment(std::span<const AugmentSpec> pipeline, const Waveform& x);

/// [{"kind": "highpass", "cutoff_hz": 3000}, ...]
std::string pipeline_to_json(std::span<const AugmentSpec> pipeline);
std::vector<AugmentSpec> pipeline_from_json(std::string_view text);

}  // namespace rlens
