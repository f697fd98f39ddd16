#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rlens/signal.hpp"

namespace rlens {

enum class WavSampleFormat { pcm16, float32 };

/// Decoded RIFF/WAVE content, one vector per channel, samples in [-1, 1].
struct WavData {
  int sample_rate_hz = 0;
  std::vector<std::vector<double>> channels;

  std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
};

/// Parses little-endian PCM 16-bit or IEEE float 32-bit, 1 or 2 channels.
/// Throws DataError on anything else.
WavData parse_wav(std::span<const std::uint8_t> bytes);
WavData read_wav(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_wav(const WavData& wav, WavSampleFormat format);
void write_wav(const std::filesystem::path& path, const WavData& wav, WavSampleFormat format);

}  // namespace rlens
