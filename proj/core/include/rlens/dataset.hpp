#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlens/signal.hpp"
#include "rlens/wav.hpp"

namespace rlens {

/// UrbanSound8K label list, indexed by classID.
inline constexpr std::array<std::string_view, 10> kUrbanSoundClasses = {
    "air_conditioner", "car_horn", "children_playing", "dog_bark", "drilling",
    "engine_idling",   "gun_shot", "jackhammer",       "siren",    "street_music"};

/// Index into kUrbanSoundClasses, matching case-insensitively and treating
/// spaces as underscores ("Gun Shot" == "gun_shot"). -1 when unknown.
int urban_sound_class_id(std::string_view name);

/// One preprocessed one-second patch with its labels.
struct LabeledClip {
  Waveform waveform;
  int class_id = 0;
  std::string class_name;
  int fold = 0;
  std::string source_file;
  int patch_index = 0;
};

struct PatchConfig {
  int sample_rate_hz = 16000;
  std::size_t length = 16000;
  std::size_t hop = 8000;
};

/// Splits into fixed-length patches at the given hop. The last patch is the
/// first one reaching the end of the signal and is zero-padded if short;
/// a signal shorter than one patch yields a single padded patch.
std::vector<std::vector<double>> split_patches(std::span<const double> samples,
                                               const PatchConfig& cfg);

struct MetadataRow {
  std::string file;
  int fold = 0;
  int class_id = 0;
  std::string class_name;
};

/// UrbanSound8K-style metadata CSV. Requires the columns slice_file_name,
/// fold, classID and class (any order, extra columns ignored).
std::vector<MetadataRow> read_metadata_csv(const std::filesystem::path& path);

struct PreprocessReport {
  std::vector<LabeledClip> clips;
  std::vector<std::string> skipped;  // "file: reason"
  std::size_t dropped_silent = 0;
};

/// Mono mixdown, linear resampling to cfg.sample_rate_hz, patching, per-patch
/// RMS normalization. Zero-energy patches are dropped and counted.
std::vector<LabeledClip> preprocess_wav(const WavData& wav, const MetadataRow& meta,
                                        const PatchConfig& cfg, std::size_t* dropped_silent = nullptr);

/// Reads each listed file from audio_dir/fold<N>/<file> (or audio_dir/<file>)
/// and preprocesses it. Unreadable files are skipped and reported. Clips are
/// returned in metadata order regardless of worker count.
PreprocessReport preprocess_dataset(const std::filesystem::path& audio_dir,
                                    std::span<const MetadataRow> metadata,
                                    const PatchConfig& cfg = {});

// Clip cache: one binary record per clip, "RLNS" | version u16 | class_id u16 |
// fold u16 | L u32 | L x f32, all little-endian. The record file is
// accompanied by an index CSV carrying the string metadata.
inline constexpr std::uint16_t kClipCacheVersion = 1;
inline constexpr const char* kClipRecordsFile = "clips.rlns";
inline constexpr const char* kClipIndexFile = "clips.csv";

std::vector<std::uint8_t> encode_clip_record(const LabeledClip& clip);
/// Decodes one record starting at `offset`, advancing it past the record.
LabeledClip decode_clip_record(std::span<const std::uint8_t> bytes, std::size_t& offset);

void write_clip_cache(const std::filesystem::path& dir, std::span<const LabeledClip> clips);
std::vector<LabeledClip> read_clip_cache(const std::filesystem::path& dir);

}  // namespace rlens
