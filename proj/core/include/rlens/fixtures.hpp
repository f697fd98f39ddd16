#pragma once

#include <cstdint>
#include <vector>

#include "rlens/dataset.hpp"
#include "rlens/model.hpp"

namespace rlens {

// Small deterministic models and synthetic clips for end-to-end runs
// without trained weights.

/// "tiny-1d": three conv1d stages and a dense head over a 16000-sample
/// waveform, ten outputs, bias-free, seeded He-uniform weights.
ModelGraph tiny_1d_model(std::uint64_t seed = 7);

/// Windowed-sinc band-pass FIR (Hamming window, odd `taps`) with unit gain
/// at the band center.
std::vector<double> bandpass_kernel(double f_lo_hz, double f_hi_hz, std::size_t taps, int sample_rate_hz = 16000);

/// Two-class band detector. Four band-pass channels (tone band 600-800 Hz,
/// 1000-2500 Hz, 4-5 kHz, 5-6 kHz), relu, global average, and a fixed
/// dense head: class 0 ("tone") = ch0 + ch2, class 1 ("noise") = ch1 + ch3.
ModelGraph band_detector_model(std::size_t taps = 401);

/// `count` clips cycling over `classes` labels. Each is a class-dependent
/// pair of tones with random phases plus white noise, RMS-normalized.
std::vector<LabeledClip> synthetic_clips(std::size_t count, std::uint64_t seed, std::size_t classes = 10);

/// Class 0: one tone on a 20 Hz multiple in 680-740 Hz over weak noise.
/// Class 1: white noise. RMS-normalized, alternating labels.
std::vector<LabeledClip> tone_noise_clips(std::size_t count, std::uint64_t seed);

}  // namespace rlens
