#include <cmath>
#include <cstdio>
#include <sstream>

#include "byte_io.hpp"
#include "csv.hpp"
#include "rlens/relevance_map.hpp"

namespace rlens {
namespace {

constexpr std::uint16_t kUnknown = 0xFFFF;

std::uint16_t class_field(int v) { return v < 0 ? kUnknown : static_cast<std::uint16_t>(v); }
int class_value(std::uint16_t v) { return v == kUnknown ? -1 : static_cast<int>(v); }

}  // namespace

std::string_view to_string(RelevanceDomain d) {
  switch (d) {
    case RelevanceDomain::time: return "time";
    case RelevanceDomain::time_frequency: return "time_frequency";
    case RelevanceDomain::mel_time_frequency: return "mel_time_frequency";
  }
  return "unknown";
}

std::vector<std::uint8_t> encode_relevance_map(const RelevanceMap& map) {
  ByteWriter out;
  out.tag("RLNM");
  out.u16(kRelevanceRecordVersion);
  out.u8(static_cast<std::uint8_t>(map.domain));
  out.u8(0);
  out.u16(static_cast<std::uint16_t>(map.class_index));
  out.u16(class_field(map.true_class));
  out.u16(class_field(map.predicted_class));
  out.u16(static_cast<std::uint16_t>(map.fold));
  out.u32(static_cast<std::uint32_t>(map.values.rows()));
  out.u32(static_cast<std::uint32_t>(map.values.cols()));
  out.f32(static_cast<float>(map.logit));
  for (double v : map.values.values()) out.f32(static_cast<float>(v));
  return std::move(out).bytes();
}

RelevanceMap decode_relevance_map(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "relevance map");
  if (in.tag() != "RLNM") throw DataError("relevance map: bad magic");
  const auto version = in.u16();
  if (version != kRelevanceRecordVersion) {
    throw DataError("relevance map: unsupported version " + std::to_string(version));
  }
  RelevanceMap map;
  const auto domain = in.u8();
  if (domain > 2) throw DataError("relevance map: unknown domain tag " + std::to_string(domain));
  map.domain = static_cast<RelevanceDomain>(domain);
  in.u8();
  map.class_index = in.u16();
  map.true_class = class_value(in.u16());
  map.predicted_class = class_value(in.u16());
  map.fold = in.u16();
  const std::size_t rows = in.u32();
  const std::size_t cols = in.u32();
  map.logit = in.f32();
  if (rows * cols * 4 != in.remaining()) {
    throw DataError("relevance map: payload does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<double> values(rows * cols);
  for (double& v : values) {
    v = in.f32();
    if (!std::isfinite(v)) throw DataError("relevance map: non-finite value");
  }
  map.values = Grid(rows, cols, std::move(values));
  return map;
}

void write_relevance_map(const std::filesystem::path& path, const RelevanceMap& map) {
  write_file(path, encode_relevance_map(map));
}

RelevanceMap read_relevance_map(const std::filesystem::path& path) {
  try {
    return decode_relevance_map(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string grid_to_csv(const Grid& grid) {
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.9g", grid(r, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Grid grid_from_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw DataError("grid csv: empty");
  const std::size_t cols = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& row : rows) {
    if (row.size() != cols) throw DataError("grid csv: ragged rows");
    for (const auto& field : row) {
      try {
        std::size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size() || !std::isfinite(v)) throw std::invalid_argument(field);
        values.push_back(v);
      } catch (const std::exception&) {
        throw DataError("grid csv: bad number '" + field + "'");
      }
    }
  }
  return Grid(rows.size(), cols, std::move(values));
}

}  // namespace rlens
