#include "rlens/model_io.hpp"

#include <zlib.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "byte_io.hpp"
#include "json.hpp"

namespace rlens {
namespace {

using nlohmann::json;

constexpr const char* kFormatName = "relevance-lens-model";

json shape_json(const Shape& s) { return json(s); }

Shape shape_from(const json& j) {
  Shape s;
  for (const auto& v : j) s.push_back(v.get<std::size_t>());
  return s;
}

std::string_view padding_name(Padding p) { return p == Padding::same ? "same" : "valid"; }

Padding padding_from(const std::string& s) {
  if (s == "same") return Padding::same;
  if (s == "valid") return Padding::valid;
  throw DataError("manifest: unknown padding '" + s + "'");
}

bool one_dimensional(const LayerSpec& l) {
  return l.kind == LayerKind::conv1d;
}

Tensor read_tensor(const json& desc, std::span<const std::uint8_t> blob) {
  const Shape shape = shape_from(desc.at("shape"));
  const auto offset = desc.at("offset").get<std::size_t>();
  const std::size_t n = element_count(shape);
  if (offset % 4 != 0) throw DataError("manifest: tensor offset not 4-byte aligned");
  if (offset + 4 * n > blob.size()) throw DataError("blob shorter than manifest requires");
  ByteReader in(blob.subspan(offset, 4 * n), "model blob");
  Tensor t(shape);
  for (auto& v : t.data) v = in.f32();
  return t;
}

void fold_batchnorm(LayerSpec& target, const json& entry, std::span<const std::uint8_t> blob, std::size_t index) {
  if (!target.has_weights()) {
    throw DataError("manifest: batchnorm at entry " + std::to_string(index) + " does not follow a dense or conv layer");
  }
  const auto& tensors = entry.at("tensors");
  const Tensor gamma = read_tensor(tensors.at("gamma"), blob);
  const Tensor beta = read_tensor(tensors.at("beta"), blob);
  const Tensor mean = read_tensor(tensors.at("mean"), blob);
  const Tensor var = read_tensor(tensors.at("var"), blob);
  const double eps = entry.value("epsilon", 1e-3);
  const std::size_t channels = target.weight.shape.front();
  for (const Tensor* t : {&gamma, &beta, &mean, &var}) {
    if (t->size() != channels) throw DataError("manifest: batchnorm channel count mismatch");
  }
  if (target.bias.empty()) target.bias = Tensor({channels});
  const std::size_t per = target.weight.size() / channels;
  for (std::size_t c = 0; c < channels; ++c) {
    const double scale = gamma.data[c] / std::sqrt(var.data[c] + eps);
    for (std::size_t i = 0; i < per; ++i) target.weight.data[c * per + i] *= scale;
    target.bias.data[c] = (target.bias.data[c] - mean.data[c]) * scale + beta.data[c];
  }
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = ::crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

SerializedModel save_model(const ModelGraph& model, const std::string& blob_name) {
  model.validate();
  ByteWriter blob;
  auto put = [&](const Tensor& t) {
    json d;
    d["shape"] = shape_json(t.shape);
    d["offset"] = blob.view().size();
    for (double v : t.data) blob.f32(static_cast<float>(v));
    return d;
  };

  json layers = json::array();
  for (const auto& l : model.layers) {
    json e;
    e["kind"] = std::string(to_string(l.kind));
    switch (l.kind) {
      case LayerKind::dense:
        e["in_features"] = l.in_channels;
        e["out_features"] = l.out_channels;
        break;
      case LayerKind::conv1d:
      case LayerKind::conv2d:
      case LayerKind::depthwise_conv2d:
        e["in_channels"] = l.in_channels;
        e["out_channels"] = l.out_channels;
        e["padding"] = std::string(padding_name(l.padding));
        [[fallthrough]];
      case LayerKind::maxpool:
      case LayerKind::avgpool:
        if (one_dimensional(l)) {
          e["kernel"] = json::array({l.kernel[0]});
          e["stride"] = json::array({l.stride[0]});
        } else {
          e["kernel"] = json(l.kernel);
          e["stride"] = json(l.stride);
        }
        break;
      default:
        break;
    }
    if (l.has_weights()) {
      json tensors;
      tensors["weight"] = put(l.weight);
      if (!l.bias.empty()) tensors["bias"] = put(l.bias);
      e["tensors"] = tensors;
    }
    layers.push_back(std::move(e));
  }

  SerializedModel out;
  out.blob = std::move(blob).bytes();
  json m;
  m["format"] = kFormatName;
  m["version"] = kManifestVersion;
  m["name"] = model.name;
  m["representation"] = std::string(to_string(model.representation));
  m["input_shape"] = shape_json(model.input_shape);
  m["class_count"] = model.class_count;
  m["class_names"] = model.class_names;
  m["blob"] = blob_name;
  m["blob_bytes"] = out.blob.size();
  m["crc32"] = crc32(out.blob);
  m["layers"] = std::move(layers);
  out.manifest = m.dump(2) + "\n";
  return out;
}

ModelGraph load_model(std::string_view manifest, std::span<const std::uint8_t> blob) {
  json m;
  try {
    m = json::parse(manifest);
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: invalid JSON: ") + e.what());
  }
  try {
    if (m.value("format", std::string()) != kFormatName) throw DataError("manifest: not a relevance-lens model");
    const int version = m.at("version").get<int>();
    if (version != kManifestVersion) {
      throw DataError("manifest: unsupported schema version " + std::to_string(version));
    }
    const auto blob_bytes = m.at("blob_bytes").get<std::size_t>();
    if (blob.size() < blob_bytes) throw DataError("blob shorter than manifest requires");
    if (blob.size() > blob_bytes) throw DataError("blob longer than manifest declares");
    if (crc32(blob) != m.at("crc32").get<std::uint32_t>()) throw DataError("blob checksum mismatch");

    ModelGraph model;
    model.name = m.at("name").get<std::string>();
    model.representation = representation_from_string(m.at("representation").get<std::string>());
    model.input_shape = shape_from(m.at("input_shape"));
    model.class_count = m.at("class_count").get<std::size_t>();
    model.class_names = m.value("class_names", std::vector<std::string>{});

    const auto& entries = m.at("layers");
    for (std::size_t idx = 0; idx < entries.size(); ++idx) {
      const auto& e = entries[idx];
      const auto kind_name = e.at("kind").get<std::string>();
      if (kind_name == "batchnorm") {
        if (model.layers.empty()) throw DataError("manifest: batchnorm cannot be the first layer");
        fold_batchnorm(model.layers.back(), e, blob, idx);
        continue;
      }
      LayerSpec l;
      try {
        l.kind = layer_kind_from_string(kind_name);
      } catch (const ConfigError& err) {
        throw DataError(std::string("manifest: ") + err.what());
      }
      if (l.kind == LayerKind::dense) {
        l.in_channels = e.at("in_features").get<std::size_t>();
        l.out_channels = e.at("out_features").get<std::size_t>();
      } else if (is_convolution(l.kind)) {
        l.in_channels = e.at("in_channels").get<std::size_t>();
        l.out_channels = e.at("out_channels").get<std::size_t>();
        l.padding = padding_from(e.value("padding", std::string("valid")));
      }
      if (e.contains("kernel")) {
        const auto k = e.at("kernel");
        const auto s = e.at("stride");
        l.kernel = {k.at(0).get<std::size_t>(), k.size() > 1 ? k.at(1).get<std::size_t>() : 1};
        l.stride = {s.at(0).get<std::size_t>(), s.size() > 1 ? s.at(1).get<std::size_t>() : 1};
      }
      if (l.has_weights()) {
        const auto& tensors = e.at("tensors");
        l.weight = read_tensor(tensors.at("weight"), blob);
        if (tensors.contains("bias")) l.bias = read_tensor(tensors.at("bias"), blob);
      }
      model.layers.push_back(std::move(l));
    }
    try {
      model.validate();
    } catch (const ShapeError& e) {
      throw DataError(std::string("manifest: ") + e.what());
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
}

void write_model(const std::filesystem::path& manifest_path, const ModelGraph& model) {
  const std::string blob_name = manifest_path.stem().string() + ".bin";
  const auto files = save_model(model, blob_name);
  write_file(manifest_path.parent_path() / blob_name, files.blob);
  write_file(manifest_path, std::span(reinterpret_cast<const std::uint8_t*>(files.manifest.data()),
                                      files.manifest.size()));
}

ModelGraph read_model(const std::filesystem::path& manifest_path) {
  const auto text = read_file(manifest_path);
  const std::string manifest(text.begin(), text.end());
  std::string blob_name;
  try {
    blob_name = json::parse(manifest).at("blob").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  const auto blob = read_file(manifest_path.parent_path() / blob_name);
  return load_model(manifest, blob);
}

}  // namespace rlens
