#include "rlens/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>

#include "byte_io.hpp"
#include "csv.hpp"
#include "rlens/parallel.hpp"

namespace rlens {
namespace {

std::string normalize_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == ' ' || c == '-') {
      out += '_';
    } else {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

int parse_int(const std::string& s, const char* column) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError(std::string("metadata: column ") + column + " has non-integer value '" + s + "'");
  }
}

}  // namespace

int urban_sound_class_id(std::string_view name) {
  const std::string n = normalize_name(name);
  for (std::size_t i = 0; i < kUrbanSoundClasses.size(); ++i) {
    if (kUrbanSoundClasses[i] == n) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::vector<double>> split_patches(std::span<const double> samples,
                                               const PatchConfig& cfg) {
  if (cfg.length == 0 || cfg.hop == 0) throw ConfigError("split_patches: length and hop must be positive");
  std::vector<std::vector<double>> patches;
  if (samples.empty()) return patches;
  for (std::size_t start = 0; start < samples.size(); start += cfg.hop) {
    std::vector<double> patch(cfg.length, 0.0);
    const std::size_t n = std::min(cfg.length, samples.size() - start);
    std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(start), n, patch.begin());
    patches.push_back(std::move(patch));
    if (start + cfg.length >= samples.size()) break;
  }
  return patches;
}

std::vector<MetadataRow> read_metadata_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw DataError("metadata: " + path.string() + " is empty");
  const auto& header = rows.front();
  auto column = [&](std::string_view name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError("metadata: missing column '" + std::string(name) + "' in " + path.string());
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_file = column("slice_file_name");
  const std::size_t c_fold = column("fold");
  const std::size_t c_id = column("classID");
  const std::size_t c_name = column("class");
  const std::size_t width = std::max({c_file, c_fold, c_id, c_name}) + 1;

  std::vector<MetadataRow> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < width) {
      throw DataError("metadata: row " + std::to_string(r + 1) + " has too few fields");
    }
    out.push_back({row[c_file], parse_int(row[c_fold], "fold"), parse_int(row[c_id], "classID"),
                   row[c_name]});
  }
  return out;
}

std::vector<LabeledClip> preprocess_wav(const WavData& wav, const MetadataRow& meta,
                                        const PatchConfig& cfg, std::size_t* dropped_silent) {
  Waveform mono{mixdown(wav.channels), wav.sample_rate_hz};
  const Waveform resampled = resample_linear(mono, cfg.sample_rate_hz);
  std::vector<LabeledClip> clips;
  int index = 0;
  for (auto& patch : split_patches(resampled.samples, cfg)) {
    const int patch_index = index++;
    if (!(rms(patch) > 0.0)) {
      if (dropped_silent) ++*dropped_silent;
      continue;
    }
    LabeledClip clip;
    clip.waveform = rms_normalize(Waveform{std::move(patch), cfg.sample_rate_hz});
    clip.class_id = meta.class_id;
    clip.class_name = meta.class_name;
    clip.fold = meta.fold;
    clip.source_file = meta.file;
    clip.patch_index = patch_index;
    clips.push_back(std::move(clip));
  }
  return clips;
}

PreprocessReport preprocess_dataset(const std::filesystem::path& audio_dir,
                                    std::span<const MetadataRow> metadata, const PatchConfig& cfg) {
  struct FileResult {
    std::vector<LabeledClip> clips;
    std::optional<std::string> error;
    std::size_t dropped = 0;
  };
  std::vector<FileResult> results(metadata.size());
  parallel_for(metadata.size(), [&](std::size_t i) {
    const auto& meta = metadata[i];
    auto path = audio_dir / ("fold" + std::to_string(meta.fold)) / meta.file;
    if (!std::filesystem::exists(path)) path = audio_dir / meta.file;
    try {
      const WavData wav = read_wav(path);
      results[i].clips = preprocess_wav(wav, meta, cfg, &results[i].dropped);
    } catch (const Error& e) {
      results[i].error = meta.file + ": " + e.what();
    }
  });

  PreprocessReport report;
  for (auto& r : results) {
    if (r.error) report.skipped.push_back(*r.error);
    report.dropped_silent += r.dropped;
    for (auto& c : r.clips) report.clips.push_back(std::move(c));
  }
  return report;
}

std::vector<std::uint8_t> encode_clip_record(const LabeledClip& clip) {
  auto checked_u16 = [](int v, const char* what) {
    if (v < 0 || v > 0xFFFF) throw DataError(std::string("clip cache: ") + what + " out of u16 range");
    return static_cast<std::uint16_t>(v);
  };
  ByteWriter out;
  out.tag("RLNS");
  out.u16(kClipCacheVersion);
  out.u16(checked_u16(clip.class_id, "class_id"));
  out.u16(checked_u16(clip.fold, "fold"));
  out.u32(static_cast<std::uint32_t>(clip.waveform.size()));
  for (double v : clip.waveform.samples) out.f32(static_cast<float>(v));
  return std::move(out).bytes();
}

LabeledClip decode_clip_record(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  if (offset > bytes.size()) throw DataError("clip cache: offset past end");
  ByteReader in(bytes.subspan(offset), "clip cache");
  if (in.tag() != "RLNS") throw DataError("clip cache: bad magic");
  const std::uint16_t version = in.u16();
  if (version != kClipCacheVersion) {
    throw DataError("clip cache: unsupported version " + std::to_string(version));
  }
  LabeledClip clip;
  clip.class_id = in.u16();
  clip.fold = in.u16();
  const std::uint32_t length = in.u32();
  if (static_cast<std::size_t>(length) * 4 > in.remaining()) {
    throw DataError("clip cache: record shorter than its declared length");
  }
  clip.waveform.samples.resize(length);
  for (auto& v : clip.waveform.samples) v = in.f32();
  offset += in.position();
  return clip;
}

void write_clip_cache(const std::filesystem::path& dir, std::span<const LabeledClip> clips) {
  std::filesystem::create_directories(dir);
  std::vector<std::uint8_t> records;
  std::ofstream index(dir / kClipIndexFile, std::ios::trunc);
  if (!index) throw DataError("cannot write " + (dir / kClipIndexFile).string());
  index << "record,source_file,patch_index,class_id,class,fold,sample_rate_hz\n";
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const auto& c = clips[i];
    const auto rec = encode_clip_record(c);
    records.insert(records.end(), rec.begin(), rec.end());
    index << i << ',' << csv_escape(c.source_file) << ',' << c.patch_index << ',' << c.class_id << ','
          << csv_escape(c.class_name) << ',' << c.fold << ',' << c.waveform.sample_rate_hz << '\n';
  }
  write_file(dir / kClipRecordsFile, records);
}

std::vector<LabeledClip> read_clip_cache(const std::filesystem::path& dir) {
  const auto bytes = read_file(dir / kClipRecordsFile);
  const auto rows = read_csv(dir / kClipIndexFile);
  std::vector<LabeledClip> clips;
  std::size_t offset = 0;
  while (offset < bytes.size()) clips.push_back(decode_clip_record(bytes, offset));
  if (rows.size() != clips.size() + 1) {
    throw DataError("clip cache: index lists " + std::to_string(rows.empty() ? 0 : rows.size() - 1) +
                    " clips but the record file holds " + std::to_string(clips.size()));
  }
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const auto& row = rows[i + 1];
    if (row.size() < 7) throw DataError("clip cache: malformed index row " + std::to_string(i + 2));
    clips[i].source_file = row[1];
    clips[i].patch_index = std::stoi(row[2]);
    clips[i].class_name = row[4];
    clips[i].waveform.sample_rate_hz = std::stoi(row[6]);
  }
  return clips;
}

}  // namespace rlens
