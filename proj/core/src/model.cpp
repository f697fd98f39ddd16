#include "rlens/model.hpp"

#include "rlens/grid.hpp"

#include <algorithm>
#include <limits>

namespace rlens {
namespace {

struct Axis {
  std::size_t out = 0;
  std::size_t pad_before = 0;
};

Axis window_axis(std::size_t in, std::size_t k, std::size_t s, Padding padding) {
  if (k == 0 || s == 0) throw ShapeError("kernel and stride must be positive");
  if (padding == Padding::same) {
    const std::size_t out = (in + s - 1) / s;
    const std::size_t needed = (out - 1) * s + k;
    const std::size_t total = needed > in ? needed - in : 0;
    return {out, total / 2};
  }
  if (in < k) {
    throw ShapeError("kernel " + std::to_string(k) + " larger than input extent " + std::to_string(in));
  }
  return {(in - k) / s + 1, 0};
}

// Every convolution and pooling layer is evaluated as a 2-D sliding window;
// 1-D inputs {C, L} become {C, 1, L}.
struct Geometry {
  std::size_t in_c = 0, in_h = 0, in_w = 0;
  std::size_t out_c = 0, out_h = 0, out_w = 0;
  std::size_t kh = 1, kw = 1, sh = 1, sw = 1, ph = 0, pw = 0;
  bool per_channel = false;  // output channel o reads input channel o only
  bool one_dimensional = false;

  std::size_t in_index(std::size_t c, std::size_t y, std::size_t x) const {
    return (c * in_h + y) * in_w + x;
  }
  std::size_t out_index(std::size_t o, std::size_t y, std::size_t x) const {
    return (o * out_h + y) * out_w + x;
  }
  Shape output_shape() const {
    return one_dimensional ? Shape{out_c, out_w} : Shape{out_c, out_h, out_w};
  }
};

bool is_pool(LayerKind k) {
  return k == LayerKind::maxpool || k == LayerKind::avgpool;
}

Geometry geometry(const LayerSpec& layer, const Shape& in) {
  Geometry g;
  switch (layer.kind) {
    case LayerKind::conv1d:
      if (in.size() == 1) {
        g.in_c = 1;
        g.in_w = in[0];
      } else if (in.size() == 2) {
        g.in_c = in[0];
        g.in_w = in[1];
      } else {
        throw ShapeError("conv1d expects a {C, L} input, got " + to_string(in));
      }
      g.in_h = 1;
      g.one_dimensional = true;
      break;
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d:
      if (in.size() != 3) {
        throw ShapeError(std::string(to_string(layer.kind)) + " expects a {C, H, W} input, got " + to_string(in));
      }
      g.in_c = in[0];
      g.in_h = in[1];
      g.in_w = in[2];
      break;
    case LayerKind::maxpool:
    case LayerKind::avgpool:
      if (in.size() == 2) {
        g.in_c = in[0];
        g.in_h = 1;
        g.in_w = in[1];
        g.one_dimensional = true;
      } else if (in.size() == 3) {
        g.in_c = in[0];
        g.in_h = in[1];
        g.in_w = in[2];
      } else {
        throw ShapeError("pooling expects a {C, L} or {C, H, W} input, got " + to_string(in));
      }
      break;
    default:
      throw ShapeError("layer kind has no sliding-window geometry");
  }

  if (layer.kind != LayerKind::maxpool && layer.kind != LayerKind::avgpool &&
      g.in_c != layer.in_channels) {
    throw ShapeError(std::string(to_string(layer.kind)) + " expects " + std::to_string(layer.in_channels) +
                     " input channels, got " + std::to_string(g.in_c));
  }

  const Padding pad = is_pool(layer.kind) ? Padding::valid : layer.padding;
  if (g.one_dimensional) {
    g.kh = 1;
    g.sh = 1;
    g.kw = layer.kernel[0];
    g.sw = layer.stride[0];
  } else {
    g.kh = layer.kernel[0];
    g.kw = layer.kernel[1];
    g.sh = layer.stride[0];
    g.sw = layer.stride[1];
  }
  const Axis ay = window_axis(g.in_h, g.kh, g.sh, pad);
  const Axis ax = window_axis(g.in_w, g.kw, g.sw, pad);
  g.out_h = ay.out;
  g.out_w = ax.out;
  g.ph = ay.pad_before;
  g.pw = ax.pad_before;
  g.per_channel = layer.kind != LayerKind::conv1d && layer.kind != LayerKind::conv2d;
  g.out_c = g.per_channel ? g.in_c : layer.out_channels;
  return g;
}

// Calls visit(out_index, in_index, weight_index) for every tap that lands
// inside the (implicitly zero-padded) input.
template <typename Visit>
void for_each_tap(const Geometry& g, Visit&& visit) {
  const std::size_t group_in = g.per_channel ? 1 : g.in_c;
  for (std::size_t o = 0; o < g.out_c; ++o) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        const std::size_t out = g.out_index(o, oy, ox);
        for (std::size_t ci = 0; ci < group_in; ++ci) {
          const std::size_t c = g.per_channel ? o : ci;
          for (std::size_t i = 0; i < g.kh; ++i) {
            const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.sh + i) - static_cast<std::ptrdiff_t>(g.ph);
            if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
            for (std::size_t j = 0; j < g.kw; ++j) {
              const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * g.sw + j) - static_cast<std::ptrdiff_t>(g.pw);
              if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
              const std::size_t w = ((o * group_in + ci) * g.kh + i) * g.kw + j;
              visit(out, g.in_index(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x)), w);
            }
          }
        }
      }
    }
  }
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::depthwise_conv2d: return "depthwise_conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::global_avgpool: return "global_avgpool";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto k : {LayerKind::dense, LayerKind::conv1d, LayerKind::conv2d, LayerKind::depthwise_conv2d,
                 LayerKind::relu, LayerKind::maxpool, LayerKind::avgpool, LayerKind::flatten,
                 LayerKind::global_avgpool}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

bool is_linear(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense:
    case LayerKind::conv1d:
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d:
    case LayerKind::avgpool:
    case LayerKind::global_avgpool:
      return true;
    default:
      return false;
  }
}

bool is_convolution(LayerKind kind) {
  return kind == LayerKind::conv1d || kind == LayerKind::conv2d || kind == LayerKind::depthwise_conv2d;
}

std::string_view to_string(Representation r) {
  switch (r) {
    case Representation::waveform: return "waveform";
    case Representation::logmel: return "logmel";
    case Representation::features: return "features";
  }
  return "unknown";
}

Representation representation_from_string(std::string_view name) {
  for (auto r : {Representation::waveform, Representation::logmel, Representation::features}) {
    if (to_string(r) == name) return r;
  }
  throw ConfigError("unknown representation '" + std::string(name) + "'");
}

LayerSpec LayerSpec::dense(std::size_t in, std::size_t out) {
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.in_channels = in;
  l.out_channels = out;
  l.weight = Tensor({out, in});
  l.bias = Tensor({out});
  return l;
}

LayerSpec LayerSpec::conv1d(std::size_t in, std::size_t out, std::size_t k, std::size_t stride, Padding pad) {
  LayerSpec l;
  l.kind = LayerKind::conv1d;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = {k, 1};
  l.stride = {stride, 1};
  l.padding = pad;
  l.weight = Tensor({out, in, k});
  l.bias = Tensor({out});
  return l;
}

LayerSpec LayerSpec::conv2d(std::size_t in, std::size_t out, std::size_t kh, std::size_t kw, std::size_t sh,
                            std::size_t sw, Padding pad) {
  LayerSpec l;
  l.kind = LayerKind::conv2d;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = {kh, kw};
  l.stride = {sh, sw};
  l.padding = pad;
  l.weight = Tensor({out, in, kh, kw});
  l.bias = Tensor({out});
  return l;
}

LayerSpec LayerSpec::depthwise_conv2d(std::size_t channels, std::size_t kh, std::size_t kw, std::size_t sh,
                                      std::size_t sw, Padding pad) {
  LayerSpec l;
  l.kind = LayerKind::depthwise_conv2d;
  l.in_channels = channels;
  l.out_channels = channels;
  l.kernel = {kh, kw};
  l.stride = {sh, sw};
  l.padding = pad;
  l.weight = Tensor({channels, 1, kh, kw});
  l.bias = Tensor({channels});
  return l;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::maxpool(std::size_t k, std::size_t stride) {
  LayerSpec l;
  l.kind = LayerKind::maxpool;
  l.kernel = {k, 1};
  l.stride = {stride, 1};
  return l;
}

LayerSpec LayerSpec::maxpool2d(std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw) {
  LayerSpec l;
  l.kind = LayerKind::maxpool;
  l.kernel = {kh, kw};
  l.stride = {sh, sw};
  return l;
}

LayerSpec LayerSpec::avgpool(std::size_t k, std::size_t stride) {
  LayerSpec l = maxpool(k, stride);
  l.kind = LayerKind::avgpool;
  return l;
}

LayerSpec LayerSpec::avgpool2d(std::size_t kh, std::size_t kw, std::size_t sh, std::size_t sw) {
  LayerSpec l = maxpool2d(kh, kw, sh, sw);
  l.kind = LayerKind::avgpool;
  return l;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = LayerKind::flatten;
  return l;
}

LayerSpec LayerSpec::global_avgpool() {
  LayerSpec l;
  l.kind = LayerKind::global_avgpool;
  return l;
}

bool LayerSpec::has_weights() const {
  return kind == LayerKind::dense || is_convolution(kind);
}

Shape LayerSpec::weight_shape() const {
  switch (kind) {
    case LayerKind::dense: return {out_channels, in_channels};
    case LayerKind::conv1d: return {out_channels, in_channels, kernel[0]};
    case LayerKind::conv2d: return {out_channels, in_channels, kernel[0], kernel[1]};
    case LayerKind::depthwise_conv2d: return {in_channels, 1, kernel[0], kernel[1]};
    default: return {};
  }
}

Shape output_shape(const LayerSpec& layer, const Shape& in) {
  if (element_count(in) == 0) throw ShapeError("empty input shape");
  switch (layer.kind) {
    case LayerKind::dense:
      if (element_count(in) != layer.in_channels) {
        throw ShapeError("dense expects " + std::to_string(layer.in_channels) + " inputs, got " + to_string(in));
      }
      return {layer.out_channels};
    case LayerKind::conv1d:
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d:
    case LayerKind::maxpool:
    case LayerKind::avgpool:
      return geometry(layer, in).output_shape();
    case LayerKind::relu:
      return in;
    case LayerKind::flatten:
      return {element_count(in)};
    case LayerKind::global_avgpool:
      if (in.size() < 2) throw ShapeError("global_avgpool expects a {C, ...} input, got " + to_string(in));
      return {in[0]};
  }
  throw ShapeError("unknown layer kind");
}

std::vector<Shape> ModelGraph::layer_shapes() const {
  std::vector<Shape> shapes{input_shape};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    try {
      shapes.push_back(output_shape(layers[i], shapes.back()));
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + " (" + std::string(to_string(layers[i].kind)) +
                       "): " + e.what());
    }
  }
  return shapes;
}

void ModelGraph::validate() const {
  if (layers.empty()) throw ShapeError("model '" + name + "' has no layers");
  const auto shapes = layer_shapes();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (!l.has_weights()) continue;
    const auto prefix = "layer " + std::to_string(i) + " (" + std::string(to_string(l.kind)) + "): ";
    if (l.weight.shape != l.weight_shape()) {
      throw ShapeError(prefix + "weight shape " + to_string(l.weight.shape) + ", expected " +
                       to_string(l.weight_shape()));
    }
    const std::size_t outs = l.kind == LayerKind::depthwise_conv2d ? l.in_channels : l.out_channels;
    if (!l.bias.empty() && l.bias.shape != Shape{outs}) {
      throw ShapeError(prefix + "bias shape " + to_string(l.bias.shape));
    }
  }
  if (shapes.back() != Shape{class_count}) {
    throw ShapeError("model '" + name + "' emits " + to_string(shapes.back()) + " but declares " +
                     std::to_string(class_count) + " classes");
  }
  if (representation == Representation::waveform && (input_shape.size() != 2 || input_shape[0] != 1)) {
    throw ShapeError("waveform models take a {1, L} input, got " + to_string(input_shape));
  }
  if (representation == Representation::logmel && (input_shape.size() != 3 || input_shape[0] != 1)) {
    throw ShapeError("logmel models take a {1, P, M} input, got " + to_string(input_shape));
  }
}

std::size_t ModelGraph::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

namespace detail {

Tensor linear_forward(const LayerSpec& layer, std::span<const double> w, const Tensor& input) {
  const Shape out_shape = output_shape(layer, input.shape);
  Tensor out(out_shape);
  switch (layer.kind) {
    case LayerKind::dense: {
      const std::size_t n_in = layer.in_channels;
      for (std::size_t o = 0; o < layer.out_channels; ++o) {
        double acc = 0.0;
        const double* row = w.data() + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * input.data[i];
        out.data[o] = acc;
      }
      break;
    }
    case LayerKind::conv1d:
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d: {
      const Geometry g = geometry(layer, input.shape);
      for_each_tap(g, [&](std::size_t o, std::size_t i, std::size_t k) { out.data[o] += w[k] * input.data[i]; });
      break;
    }
    case LayerKind::avgpool: {
      const Geometry g = geometry(layer, input.shape);
      const double scale = 1.0 / static_cast<double>(g.kh * g.kw);
      for_each_tap(g, [&](std::size_t o, std::size_t i, std::size_t) { out.data[o] += scale * input.data[i]; });
      break;
    }
    case LayerKind::global_avgpool: {
      const std::size_t c = input.shape[0];
      const std::size_t spatial = input.size() / c;
      for (std::size_t ch = 0; ch < c; ++ch) {
        out.data[ch] = pairwise_sum(input.values().subspan(ch * spatial, spatial)) / static_cast<double>(spatial);
      }
      break;
    }
    default:
      throw ShapeError("linear_forward: layer is not linear");
  }
  return out;
}

Tensor linear_transpose(const LayerSpec& layer, std::span<const double> w, const Shape& input_shape,
                        const Tensor& grad_output) {
  Tensor grad(input_shape);
  switch (layer.kind) {
    case LayerKind::dense: {
      const std::size_t n_in = layer.in_channels;
      for (std::size_t o = 0; o < layer.out_channels; ++o) {
        const double g = grad_output.data[o];
        if (g == 0.0) continue;
        const double* row = w.data() + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) grad.data[i] += row[i] * g;
      }
      break;
    }
    case LayerKind::conv1d:
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d: {
      const Geometry g = geometry(layer, input_shape);
      for_each_tap(g, [&](std::size_t o, std::size_t i, std::size_t k) {
        grad.data[i] += w[k] * grad_output.data[o];
      });
      break;
    }
    case LayerKind::avgpool: {
      const Geometry g = geometry(layer, input_shape);
      const double scale = 1.0 / static_cast<double>(g.kh * g.kw);
      for_each_tap(g, [&](std::size_t o, std::size_t i, std::size_t) { grad.data[i] += scale * grad_output.data[o]; });
      break;
    }
    case LayerKind::global_avgpool: {
      const std::size_t c = input_shape[0];
      const std::size_t spatial = element_count(input_shape) / c;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double g = grad_output.data[ch] / static_cast<double>(spatial);
        for (std::size_t s = 0; s < spatial; ++s) grad.data[ch * spatial + s] = g;
      }
      break;
    }
    default:
      throw ShapeError("linear_transpose: layer is not linear");
  }
  return grad;
}

std::vector<std::size_t> maxpool_argmax(const LayerSpec& layer, const Tensor& input) {
  const Geometry g = geometry(layer, input.shape);
  std::vector<std::size_t> winner(g.out_c * g.out_h * g.out_w, 0);
  std::vector<double> best(winner.size(), -std::numeric_limits<double>::infinity());
  for_each_tap(g, [&](std::size_t o, std::size_t i, std::size_t) {
    if (input.data[i] > best[o]) {
      best[o] = input.data[i];
      winner[o] = i;
    }
  });
  return winner;
}

}  // namespace detail

Tensor apply_layer(const LayerSpec& layer, const Tensor& input) {
  switch (layer.kind) {
    case LayerKind::dense:
    case LayerKind::conv1d:
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d: {
      Tensor out = detail::linear_forward(layer, layer.weight.values(), input);
      if (!layer.bias.empty()) {
        const std::size_t channels = layer.bias.size();
        const std::size_t per = out.size() / channels;
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t s = 0; s < per; ++s) out.data[c * per + s] += layer.bias.data[c];
        }
      }
      return out;
    }
    case LayerKind::avgpool:
    case LayerKind::global_avgpool:
      return detail::linear_forward(layer, {}, input);
    case LayerKind::relu: {
      Tensor out = input;
      for (double& v : out.data) v = std::max(v, 0.0);
      return out;
    }
    case LayerKind::maxpool: {
      Tensor out(output_shape(layer, input.shape));
      const auto winner = detail::maxpool_argmax(layer, input);
      for (std::size_t o = 0; o < winner.size(); ++o) out.data[o] = input.data[winner[o]];
      return out;
    }
    case LayerKind::flatten:
      return Tensor({input.size()}, input.data);
  }
  throw ShapeError("unknown layer kind");
}

ForwardTrace forward(const ModelGraph& model, Tensor input) {
  if (input.shape != model.input_shape) {
    if (input.size() != element_count(model.input_shape)) {
      throw ShapeError("model '" + model.name + "' expects input " + to_string(model.input_shape) + ", got " +
                       to_string(input.shape));
    }
    input.shape = model.input_shape;
  }
  ForwardTrace trace;
  trace.activations.reserve(model.layers.size() + 1);
  trace.activations.push_back(std::move(input));
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    try {
      trace.activations.push_back(apply_layer(model.layers[i], trace.activations.back()));
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + " (" + std::string(to_string(model.layers[i].kind)) +
                       "): " + e.what());
    }
  }
  return trace;
}

Tensor input_gradient(const LayerSpec& layer, const Tensor& input, const Tensor& grad_output) {
  switch (layer.kind) {
    case LayerKind::dense:
    case LayerKind::conv1d:
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d:
      return detail::linear_transpose(layer, layer.weight.values(), input.shape, grad_output);
    case LayerKind::avgpool:
    case LayerKind::global_avgpool:
      return detail::linear_transpose(layer, {}, input.shape, grad_output);
    case LayerKind::relu: {
      Tensor g(input.shape);
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = input.data[i] > 0.0 ? grad_output.data[i] : 0.0;
      return g;
    }
    case LayerKind::maxpool: {
      Tensor g(input.shape);
      const auto winner = detail::maxpool_argmax(layer, input);
      for (std::size_t o = 0; o < winner.size(); ++o) g.data[winner[o]] += grad_output.data[o];
      return g;
    }
    case LayerKind::flatten:
      return Tensor(input.shape, grad_output.data);
  }
  throw ShapeError("unknown layer kind");
}

}  // namespace rlens
