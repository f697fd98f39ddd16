#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <span>
#include <string_view>
#include <vector>

#include "rlens/tensor.hpp"

namespace rlens {

enum class LayerKind {
  dense,
  conv1d,
  conv2d,
  depthwise_conv2d,
  relu,
  maxpool,
  avgpool,
  flatten,
  global_avgpool,
};

std::string_view to_string(LayerKind kind);
/// Throws ConfigError for unknown names.
LayerKind layer_kind_from_string(std::string_view name);

/// Layers with weights or fixed averaging weights; LRP treats them with
/// the epsilon / z+ rules.
bool is_linear(LayerKind kind);
bool is_convolution(LayerKind kind);

enum class Padding { valid, same };

/// One layer of a chain model.
///
/// Feature-map layout is channels-first: {C, L} for 1-D and {C, H, W} for
/// 2-D layers. Weight layouts: dense {out, in}; conv1d {out, in, k};
/// conv2d {out, in, kh, kw}; depthwise_conv2d {C, 1, kh, kw}. An empty bias
/// tensor means no bias. 1-D layers use kernel[0] / stride[0]; pooling on a
/// {C, H, W} input uses both entries.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in_channels = 0;  // input features for dense
  std::size_t out_channels = 0;  // output features for dense
  std::array<std::size_t, 2> kernel{1, 1};
  std::array<std::size_t, 2> stride{1, 1};
  Padding padding = Padding::valid;
  Tensor weight;
  Tensor bias;

  static LayerSpec dense(std::size_t in, std::size_t out);
  static LayerSpec conv1d(std::size_t in, std::size_t out, std::size_t k, std::size_t stride = 1,
                          Padding pad = Padding::valid);
  static LayerSpec conv2d(std::size_t in, std::size_t out, std::size_t kh, std::size_t kw,
                          std::size_t sh = 1, std::size_t sw = 1, Padding pad = Padding::same);
  static LayerSpec depthwise_conv2d(std::size_t channels, std::size_t kh, std::size_t kw,
                                    std::size_t sh = 1, std::size_t sw = 1, Padding pad = Padding::same);
  static LayerSpec relu();
  static LayerSpec maxpool(std::size_t k, std::size_t stride);
  static LayerSpec maxpool2d(std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw);
  static LayerSpec avgpool(std::size_t k, std::size_t stride);
  static LayerSpec avgpool2d(std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw);
  static LayerSpec flatten();
  static LayerSpec global_avgpool();

  bool has_weights() const;
  Shape weight_shape() const;
  std::size_t parameter_count() const { return weight.size() + bias.size(); }
};

/// Output shape of `layer` for input `in`; throws ShapeError.
Shape output_shape(const LayerSpec& layer, const Shape& in);

enum class Representation { waveform, logmel, features };

std::string_view to_string(Representation r);
Representation representation_from_string(std::string_view name);

/// Simple chain of layers. Inputs are {1, L} for waveform models and
/// {1, P, M} for logmel models.
struct ModelGraph {
  std::string name;
  Representation representation = Representation::features;
  Shape input_shape;
  std::size_t class_count = 0;
  std::vector<LayerSpec> layers;
  std::vector<std::string> class_names;

  /// Shapes before every layer plus the output shape (layers.size() + 1).
  /// Throws ShapeError naming the first offending layer index.
  std::vector<Shape> layer_shapes() const;
  /// Shape composition, weight shapes, and class_count logits at the end.
  void validate() const;
  std::size_t parameter_count() const;
};

/// activations[i] is the input of layer i; activations.back() the logits.
struct ForwardTrace {
  std::vector<Tensor> activations;

  const Tensor& input() const { return activations.front(); }
  const Tensor& logits() const { return activations.back(); }
};

Tensor apply_layer(const LayerSpec& layer, const Tensor& input);
ForwardTrace forward(const ModelGraph& model, Tensor input);

/// Vector-Jacobian product of one layer at `input`.
Tensor input_gradient(const LayerSpec& layer, const Tensor& input, const Tensor& grad_output);

namespace detail {

// Linear part of a weighted or averaging layer without its bias, with an
// explicit weight array so LRP can substitute W+ / W-.
Tensor linear_forward(const LayerSpec& layer, std::span<const double> weight, const Tensor& input);
// Transposed application: W^T g mapped back to `input_shape`.
Tensor linear_transpose(const LayerSpec& layer, std::span<const double> weight,
                        const Shape& input_shape, const Tensor& grad_output);
// Flat input index of the window maximum for every maxpool output element.
std::vector<std::size_t> maxpool_argmax(const LayerSpec& layer, const Tensor& input);

}  // namespace detail

}  // namespace rlens
