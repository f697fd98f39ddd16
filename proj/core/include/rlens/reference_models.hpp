#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rlens/model.hpp"

namespace rlens {

/// Raw-waveform chain: four conv1d stages followed by a dense head.
struct WaveformCnnConfig {
  std::size_t input_length = 16000;
  std::size_t classes = 10;
  std::vector<std::size_t> channels{16, 32, 64, 128};
  std::vector<std::size_t> kernels{64, 32, 16, 8};
  std::vector<std::size_t> strides{2, 2, 2, 2};
  /// Max-pool width after each conv stage (1 = none).
  std::vector<std::size_t> pools{8, 8, 1, 1};
  std::vector<std::size_t> hidden{128, 64};
  std::uint64_t seed = 1;
};

/// Logmel chain: a standard conv followed by depthwise/pointwise pairs,
/// global average pooling and a dense head.
struct LogmelCnnConfig {
  std::size_t mel_bands = 64;
  std::size_t frames = 20;
  std::size_t classes = 10;
  std::size_t stem_channels = 32;
  /// (pointwise output channels, depthwise stride) per separable block.
  std::vector<std::pair<std::size_t, std::size_t>> blocks{{64, 1}, {128, 2}, {128, 1},
                                                          {256, 2}, {256, 1}, {512, 2}};
  std::uint64_t seed = 2;
};

ModelGraph build_waveform_cnn(const WaveformCnnConfig& cfg = {});
ModelGraph build_logmel_cnn(const LogmelCnnConfig& cfg = {});

struct ReferenceArchitectures {
  ModelGraph waveform;
  ModelGraph logmel;
};

/// Both reference chains with default hyperparameters and seeded weights.
ReferenceArchitectures build_reference_architectures();

std::size_t count_layers(const ModelGraph& model, LayerKind kind);

/// He-uniform weights rounded to float32, zero biases. Deterministic per seed.
void initialize_weights(ModelGraph& model, std::uint64_t seed, bool with_bias = false);

}  // namespace rlens
