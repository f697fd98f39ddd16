#include "rlens/reference_models.hpp"

#include <cmath>

#include "rlens/random.hpp"

namespace rlens {

ModelGraph build_waveform_cnn(const WaveformCnnConfig& cfg) {
  const std::size_t stages = cfg.channels.size();
  if (cfg.kernels.size() != stages || cfg.strides.size() != stages || cfg.pools.size() != stages) {
    throw ConfigError("waveform cnn: per-stage lists must have equal length");
  }
  ModelGraph m;
  m.name = "waveform-cnn";
  m.representation = Representation::waveform;
  m.input_shape = {1, cfg.input_length};
  m.class_count = cfg.classes;
  std::size_t in = 1;
  for (std::size_t s = 0; s < stages; ++s) {
    m.layers.push_back(LayerSpec::conv1d(in, cfg.channels[s], cfg.kernels[s], cfg.strides[s]));
    m.layers.push_back(LayerSpec::relu());
    if (cfg.pools[s] > 1) m.layers.push_back(LayerSpec::maxpool(cfg.pools[s], cfg.pools[s]));
    in = cfg.channels[s];
  }
  m.layers.push_back(LayerSpec::flatten());
  std::size_t features = element_count(m.layer_shapes().back());
  for (std::size_t h : cfg.hidden) {
    m.layers.push_back(LayerSpec::dense(features, h));
    m.layers.push_back(LayerSpec::relu());
    features = h;
  }
  m.layers.push_back(LayerSpec::dense(features, cfg.classes));
  initialize_weights(m, cfg.seed);
  m.validate();
  return m;
}

ModelGraph build_logmel_cnn(const LogmelCnnConfig& cfg) {
  ModelGraph m;
  m.name = "logmel-cnn";
  m.representation = Representation::logmel;
  m.input_shape = {1, cfg.mel_bands, cfg.frames};
  m.class_count = cfg.classes;
  m.layers.push_back(LayerSpec::conv2d(1, cfg.stem_channels, 3, 3, 2, 2, Padding::same));
  m.layers.push_back(LayerSpec::relu());
  std::size_t ch = cfg.stem_channels;
  for (const auto& [out, stride] : cfg.blocks) {
    m.layers.push_back(LayerSpec::depthwise_conv2d(ch, 3, 3, stride, stride, Padding::same));
    m.layers.push_back(LayerSpec::relu());
    m.layers.push_back(LayerSpec::conv2d(ch, out, 1, 1, 1, 1, Padding::same));
    m.layers.push_back(LayerSpec::relu());
    ch = out;
  }
  m.layers.push_back(LayerSpec::global_avgpool());
  m.layers.push_back(LayerSpec::dense(ch, cfg.classes));
  initialize_weights(m, cfg.seed);
  m.validate();
  return m;
}

ReferenceArchitectures build_reference_architectures() {
  return {build_waveform_cnn(), build_logmel_cnn()};
}

std::size_t count_layers(const ModelGraph& model, LayerKind kind) {
  std::size_t n = 0;
  for (const auto& l : model.layers) n += l.kind == kind ? 1 : 0;
  return n;
}

void initialize_weights(ModelGraph& model, std::uint64_t seed, bool with_bias) {
  Rng rng(seed);
  for (auto& l : model.layers) {
    if (!l.has_weights()) continue;
    l.weight = Tensor(l.weight_shape());
    const std::size_t fan_in = l.weight.size() / l.weight.shape.front();
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& w : l.weight.data) w = static_cast<float>(rng.uniform(-bound, bound));
    l.bias = Tensor({l.weight.shape.front()});
    if (with_bias) {
      for (double& b : l.bias.data) b = static_cast<float>(rng.uniform(-0.1, 0.1));
    }
  }
}

}  // namespace rlens
