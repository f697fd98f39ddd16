#include "rlens/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "byte_io.hpp"
#include "json.hpp"
#include "rlens/relevance_map.hpp"

namespace rlens {
namespace {

std::array<std::uint8_t, 3> diverging(double t) {
  t = std::clamp(t, -1.0, 1.0);
  const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::abs(t))));
  if (t >= 0.0) return {255, fade, fade};
  return {fade, fade, 255};
}

}  // namespace

std::vector<std::uint8_t> render_ppm(const Grid& grid, const RenderOptions& options) {
  if (grid.empty()) throw DataError("render: empty grid");
  const std::size_t cell = std::max<std::size_t>(1, options.cell_pixels);
  const std::size_t width = grid.cols() * cell;
  const std::size_t height = grid.rows() * cell;
  double abs_max = 0.0;
  for (double v : grid.values()) abs_max = std::max(abs_max, std::abs(v));

  const std::string header = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + width * height * 3);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t image_row = y / cell;
    const std::size_t r = options.low_rows_at_bottom ? grid.rows() - 1 - image_row : image_row;
    for (std::size_t x = 0; x < width; ++x) {
      const double v = grid(r, x / cell);
      const auto rgb = diverging(abs_max > 0.0 ? v / abs_max : 0.0);
      out.insert(out.end(), rgb.begin(), rgb.end());
    }
  }
  return out;
}

std::string render_sidecar(const Grid& grid) {
  if (grid.empty()) throw DataError("render: empty grid");
  const auto [lo, hi] = std::minmax_element(grid.values().begin(), grid.values().end());
  nlohmann::ordered_json j;
  j["rows"] = grid.rows();
  j["cols"] = grid.cols();
  j["min"] = *lo;
  j["max"] = *hi;
  j["abs_max"] = std::max(std::abs(*lo), std::abs(*hi));
  j["colormap"] = "blue-white-red, symmetric about zero";
  return j.dump(2) + "\n";
}

void write_rendering(const std::filesystem::path& stem, const Grid& grid, const RenderOptions& options) {
  auto as_bytes = [](const std::string& s) {
    return std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
  };
  auto with_ext = [&](const char* ext) {
    auto p = stem;
    p += ext;
    return p;
  };
  write_file(with_ext(".ppm"), render_ppm(grid, options));
  write_file(with_ext(".csv"), as_bytes(grid_to_csv(grid)));
  write_file(with_ext(".json"), as_bytes(render_sidecar(grid)));
}

}  // namespace rlens
