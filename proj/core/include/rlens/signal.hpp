#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "rlens/grid.hpp"

namespace rlens {

using Complex = std::complex<double>;

inline constexpr int kDefaultSampleRate = 16000;

/// Mono amplitude series with its sample rate.
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kDefaultSampleRate;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

double rms(std::span<const double> samples);

/// Scales the waveform to unit root-mean-square. Throws DataError on a
/// zero-energy input, where the RMS is undefined.
Waveform rms_normalize(Waveform x);

// Discrete Fourier transform with exponent e^(-2*pi*i*k*n/N); idft carries
// the 1/N factor so that idft(dft(x)) == x.
std::vector<Complex> dft(std::span<const double> x);
std::vector<Complex> dft(std::span<const Complex> x);
std::vector<Complex> idft(std::span<const Complex> spectrum);

/// Real signal of length n from its nonnegative-frequency half spectrum
/// (n/2 + 1 bins). Inverse of the first n/2 + 1 entries of dft().
std::vector<double> irdft(std::span<const Complex> half_spectrum, std::size_t n);

enum class WindowKind { rectangular, hann };

struct StdftConfig {
  std::size_t window_length = 800;
  std::size_t hop = 800;
  WindowKind kind = WindowKind::rectangular;
  std::vector<double> window;

  static StdftConfig rectangular(std::size_t window_length, std::size_t hop);
  /// Periodic Hann window.
  static StdftConfig hann(std::size_t window_length, std::size_t hop);

  /// K + 1 with K = N/2.
  std::size_t bin_count() const { return window_length / 2 + 1; }
  /// floor((L - N)/H) + 1.
  std::size_t frame_count(std::size_t signal_length) const;
  /// Throws ConfigError on odd N, H == 0, or a window of the wrong length,
  /// and ShapeError when N > L.
  void validate(std::size_t signal_length) const;
};

/// Complex (K+1) x M time-frequency grid, rows = bins, cols = frames.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(std::size_t bins, std::size_t frames, StdftConfig cfg, int sample_rate_hz);

  std::size_t bins() const { return bins_; }
  std::size_t frames() const { return frames_; }
  const StdftConfig& config() const { return cfg_; }
  int sample_rate_hz() const { return sample_rate_hz_; }

  Complex& operator()(std::size_t k, std::size_t m) { return data_[k * frames_ + m]; }
  const Complex& operator()(std::size_t k, std::size_t m) const { return data_[k * frames_ + m]; }

  Grid magnitude() const;
  /// Phases in (-pi, pi].
  Grid phase() const;
  double bin_frequency_hz(std::size_t k) const;
  double frame_time_s(std::size_t m) const;

 private:
  std::size_t bins_ = 0;
  std::size_t frames_ = 0;
  StdftConfig cfg_;
  int sample_rate_hz_ = kDefaultSampleRate;
  std::vector<Complex> data_;
};

/// Frame m covers samples [m*H, m*H + N); only bins 0..N/2 are kept.
Spectrogram stdft(const Waveform& x, const StdftConfig& cfg);

/// HTK mel scale: 2595 * log10(1 + f/700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters with centers equally spaced on the mel scale between
/// f_min and f_max. Each triangle is area-normalized (peak 2/(upper-lower)),
/// so higher filters are lower and wider.
class MelFilterbank {
 public:
  static MelFilterbank build(std::size_t fft_bins, std::size_t filters, int sample_rate_hz,
                             double f_min_hz, double f_max_hz);

  std::size_t fft_bins() const { return weights_.rows(); }
  std::size_t filters() const { return weights_.cols(); }
  /// (K+1) x P weights.
  const Grid& weights() const { return weights_; }
  const std::vector<double>& center_hz() const { return center_hz_; }
  const std::vector<double>& lower_hz() const { return lower_hz_; }
  const std::vector<double>& upper_hz() const { return upper_hz_; }
  /// Height of the continuous triangle; sampled maxima never exceed it.
  const std::vector<double>& peak_height() const { return peak_height_; }
  int sample_rate_hz() const { return sample_rate_hz_; }
  double bin_frequency_hz(std::size_t k) const;

 private:
  Grid weights_;
  std::vector<double> center_hz_, lower_hz_, upper_hz_, peak_height_;
  int sample_rate_hz_ = kDefaultSampleRate;
};

enum class MelScale { mel, logmel };

struct MelSpectrogram {
  Grid values;  // P x M
  MelScale scale = MelScale::mel;
  std::vector<double> center_hz;
};

inline constexpr double kLogmelFloor = 1e-10;

/// Y_mel = T^T |Y| per frame.
MelSpectrogram mel_spectrogram(const Spectrogram& spec, const MelFilterbank& fb);
/// ln(max(Y_mel, floor)).
MelSpectrogram logmel(const MelSpectrogram& mel, double floor = kLogmelFloor);

/// Front end used by logmel models: N=800 rectangular, H=800, 64 filters
/// over [0, f_S/2]. Produces 64 x 20 for a one second clip.
struct FrontendConfig {
  StdftConfig stdft = StdftConfig::rectangular(800, 800);
  std::size_t mel_bands = 64;
  double f_min_hz = 0.0;
  double f_max_hz = 8000.0;
  double log_floor = kLogmelFloor;

  MelFilterbank filterbank(int sample_rate_hz) const;
};

MelSpectrogram logmel_spectrogram(const Waveform& x, const FrontendConfig& cfg);

/// Arithmetic mean over channels. All channels must have equal length.
std::vector<double> mixdown(std::span<const std::vector<double>> channels);

/// Linear-interpolation resampler; output length round(L * target / source).
Waveform resample_linear(const Waveform& x, int target_rate_hz);

}  // namespace rlens
