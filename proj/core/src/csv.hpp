#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rlens {

using CsvRow = std::vector<std::string>;

/// RFC-4180-ish reader: quoted fields, doubled quotes, CRLF or LF.
std::vector<CsvRow> parse_csv(std::string_view text);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

std::string csv_escape(std::string_view field);

}  // namespace rlens
