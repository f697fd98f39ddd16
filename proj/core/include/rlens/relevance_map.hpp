#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlens/grid.hpp"

namespace rlens {

enum class RelevanceDomain : std::uint8_t {
  time = 0,                // 1 x L, aligned to the waveform
  time_frequency = 1,      // (K+1) x M, aligned to the STDFT grid
  mel_time_frequency = 2,  // P x M, aligned to the mel grid
};

std::string_view to_string(RelevanceDomain d);

/// Relevance scores on one input representation. Values may be negative
/// (evidence against the explained class).
struct RelevanceMap {
  RelevanceDomain domain = RelevanceDomain::time;
  Grid values;
  std::size_t class_index = 0;
  double logit = 0.0;
  // Bookkeeping filled in by the harness; -1 when unknown.
  int true_class = -1;
  int predicted_class = -1;
  int fold = 0;

  double total() const { return pairwise_sum(values.values()); }
};

// Binary record, little-endian:
//   "RLNM" | version u16 | domain u8 | reserved u8 | class_index u16 |
//   true_class u16 | predicted_class u16 | fold u16 | rows u32 | cols u32 |
//   logit f32 | rows*cols x f32
// Unknown class fields are stored as 0xFFFF.
inline constexpr std::uint16_t kRelevanceRecordVersion = 1;

std::vector<std::uint8_t> encode_relevance_map(const RelevanceMap& map);
RelevanceMap decode_relevance_map(std::span<const std::uint8_t> bytes);
void write_relevance_map(const std::filesystem::path& path, const RelevanceMap& map);
RelevanceMap read_relevance_map(const std::filesystem::path& path);

/// One CSV line per grid row, values printed with 9 significant digits.
std::string grid_to_csv(const Grid& grid);
Grid grid_from_csv(std::string_view text);

}  // namespace rlens
