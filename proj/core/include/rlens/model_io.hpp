#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlens/model.hpp"

namespace rlens {

// A model is stored as a JSON manifest plus a blob of little-endian float32
// tensors. The manifest lists layers in order with their attributes, each
// tensor's shape and byte offset, the blob size and its CRC-32.
//
// Manifests may contain "batchnorm" entries (tensors gamma, beta, mean,
// var; attribute epsilon). They are folded into the preceding dense or
// convolution layer on load and never written back.

inline constexpr int kManifestVersion = 1;

struct SerializedModel {
  std::string manifest;
  std::vector<std::uint8_t> blob;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

SerializedModel save_model(const ModelGraph& model, const std::string& blob_name);
/// Throws DataError on checksum or size mismatch, unknown layer kinds, or a
/// graph whose shapes do not compose.
ModelGraph load_model(std::string_view manifest, std::span<const std::uint8_t> blob);

/// Writes <manifest> and a sibling <stem>.bin.
void write_model(const std::filesystem::path& manifest_path, const ModelGraph& model);
ModelGraph read_model(const std::filesystem::path& manifest_path);

}  // namespace rlens
