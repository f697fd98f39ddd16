#include "rlens/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include "byte_io.hpp"

namespace rlens {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

WavData parse_wav(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "wav");
  if (in.tag() != "RIFF") throw DataError("wav: missing RIFF header");
  in.u32();
  if (in.tag() != "WAVE") throw DataError("wav: not a WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (in.remaining() >= 8) {
    const std::string id = in.tag();
    const std::uint32_t size = in.u32();
    if (size > in.remaining()) throw DataError("wav: chunk '" + id + "' overruns file");
    if (id == "fmt ") {
      if (size < 16) throw DataError("wav: fmt chunk too short");
      ByteReader fmt(in.take(size), "wav fmt");
      format = fmt.u16();
      channels = fmt.u16();
      rate = fmt.u32();
      fmt.u32();  // byte rate
      fmt.u16();  // block align
      bits = fmt.u16();
      if (format == kFormatExtensible && size >= 40) {
        fmt.u16();  // cbSize
        fmt.u16();  // valid bits
        fmt.u32();  // channel mask
        format = fmt.u16();  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DataError("wav: data chunk before fmt chunk");
      if (channels < 1 || channels > 2) {
        throw DataError("wav: unsupported channel count " + std::to_string(channels));
      }
      if (rate == 0) throw DataError("wav: zero sample rate");
      const bool pcm16 = format == kFormatPcm && bits == 16;
      const bool f32 = format == kFormatFloat && bits == 32;
      if (!pcm16 && !f32) {
        throw DataError("wav: unsupported sample format " + std::to_string(format) + "/" +
                        std::to_string(bits) + " bit");
      }
      const std::size_t width = bits / 8;
      const std::size_t frames = size / (width * channels);
      ByteReader data(in.take(size), "wav data");
      WavData wav;
      wav.sample_rate_hz = static_cast<int>(rate);
      wav.channels.assign(channels, std::vector<double>(frames));
      for (std::size_t i = 0; i < frames; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
          wav.channels[c][i] = pcm16 ? static_cast<std::int16_t>(data.u16()) / 32768.0
                                     : static_cast<double>(data.f32());
        }
      }
      return wav;
    } else {
      in.take(size);
    }
    if (size % 2 == 1 && in.remaining() > 0) in.take(1);
  }
  throw DataError("wav: no data chunk");
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const WavData& wav, WavSampleFormat format) {
  const auto channels = static_cast<std::uint16_t>(wav.channels.size());
  if (channels < 1 || channels > 2) throw ConfigError("wav: only 1 or 2 channels can be written");
  const std::uint16_t bits = format == WavSampleFormat::pcm16 ? 16 : 32;
  const std::size_t frames = wav.frames();
  const auto data_bytes = static_cast<std::uint32_t>(frames * channels * (bits / 8));

  ByteWriter out;
  out.tag("RIFF");
  out.u32(36 + data_bytes);
  out.tag("WAVE");
  out.tag("fmt ");
  out.u32(16);
  out.u16(format == WavSampleFormat::pcm16 ? kFormatPcm : kFormatFloat);
  out.u16(channels);
  out.u32(static_cast<std::uint32_t>(wav.sample_rate_hz));
  out.u32(static_cast<std::uint32_t>(wav.sample_rate_hz) * channels * (bits / 8));
  out.u16(static_cast<std::uint16_t>(channels * (bits / 8)));
  out.u16(bits);
  out.tag("data");
  out.u32(data_bytes);
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& ch : wav.channels) {
      if (format == WavSampleFormat::pcm16) {
        const double v = std::clamp(ch[i], -1.0, 32767.0 / 32768.0);
        out.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(v * 32768.0))));
      } else {
        out.f32(static_cast<float>(ch[i]));
      }
    }
  }
  return std::move(out).bytes();
}

void write_wav(const std::filesystem::path& path, const WavData& wav, WavSampleFormat format) {
  write_file(path, encode_wav(wav, format));
}

}  // namespace rlens
