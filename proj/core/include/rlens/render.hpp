#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rlens/grid.hpp"

namespace rlens {

struct RenderOptions {
  std::size_t cell_pixels = 8;
  /// Row 0 (lowest frequency) at the bottom of the image.
  bool low_rows_at_bottom = true;
};

/// Binary PPM (P6) with a blue-white-red colormap symmetric around zero,
/// scaled by max |value|. An all-zero grid renders uniformly white.
std::vector<std::uint8_t> render_ppm(const Grid& grid, const RenderOptions& options = {});

/// {"min": ..., "max": ..., "abs_max": ..., "rows": ..., "cols": ...}
std::string render_sidecar(const Grid& grid);

/// Writes <stem>.ppm, <stem>.csv and <stem>.json.
void write_rendering(const std::filesystem::path& stem, const Grid& grid, const RenderOptions& options = {});

}  // namespace rlens
