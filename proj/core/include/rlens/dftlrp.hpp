#pragma once

#include <cstddef>
#include <vector>

#include "rlens/relevance_map.hpp"
#include "rlens/signal.hpp"

namespace rlens {

inline constexpr double kDefaultStabilizer = 1e-9;

/// Settings of the virtual DFT/IDFT inspection layer placed in front of a
/// waveform model.
struct VirtualInspectionConfig {
  StdftConfig stdft = StdftConfig::rectangular(800, 800);
  /// delta in R_n / (x_n + delta*sign(x_n)), sign(0) = +1.
  double stabilizer = kDefaultStabilizer;

  /// Rejects overlapping frames (hop < N), window zeros (w^-1 undefined)
  /// and a non-positive stabilizer.
  void validate(std::size_t signal_length) const;
};

/// Runs the waveform through frame-wise DFT and inverse DFT, i.e. the
/// forward path of the virtual inspection layer. Samples not covered by any
/// frame pass through unchanged.
std::vector<double> virtual_identity_loop(const Waveform& x, const StdftConfig& cfg);

/// Relocates time-domain relevance onto the STDFT grid:
///
///   R_{k,m} = (c_k/N) |Y_{k,m}| sum_n cos(2 pi k n / N + phi_{k,m}) w_n^-1
///             R_{n+mH} / (x_{n+mH} + delta sign(x_{n+mH}))
///
/// with c_0 = c_{N/2} = 1 and c_k = 2 otherwise. This is epsilon-LRP through
/// the real synthesis layer Y -> x, so sum_{k,m} R_{k,m} equals the
/// relevance of the covered samples up to the stabilizer.
RelevanceMap dft_lrp(const Waveform& x, const RelevanceMap& time_relevance, const VirtualInspectionConfig& cfg);
/// Same, with the phase source supplied by the caller.
RelevanceMap dft_lrp(const Waveform& x, const Spectrogram& spec, const RelevanceMap& time_relevance,
                     const VirtualInspectionConfig& cfg);

/// Mel filter owning each FFT row: the filter with maximal weight at that
/// row; rows outside every filter go to the filter whose center is nearest
/// on the mel scale.
std::vector<std::size_t> mel_bin_assignment(const MelFilterbank& fb);

/// Sums time-frequency relevance rows into their assigned mel filters, so
/// per-frame totals are preserved exactly.
RelevanceMap relevance_to_mel(const RelevanceMap& tf_relevance, const MelFilterbank& fb);

}  // namespace rlens
