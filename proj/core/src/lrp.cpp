#include "rlens/lrp.hpp"

#include <string>

namespace rlens {
namespace {

double stabilize(double z, double eps) { return z + (z >= 0.0 ? eps : -eps); }

// Adds the bias (or its positive part) per output channel.
void add_bias(Tensor& z, const Tensor& bias, bool positive_only) {
  if (bias.empty()) return;
  const std::size_t channels = bias.size();
  const std::size_t per = z.size() / channels;
  for (std::size_t c = 0; c < channels; ++c) {
    const double b = positive_only ? std::max(bias.data[c], 0.0) : bias.data[c];
    for (std::size_t s = 0; s < per; ++s) z.data[c * per + s] += b;
  }
}

std::span<const double> weights_of(const LayerSpec& layer) {
  return layer.has_weights() ? layer.weight.values() : std::span<const double>{};
}

Tensor epsilon_rule(const LayerSpec& layer, double eps, const Tensor& a, const Tensor& r_out) {
  const auto w = weights_of(layer);
  Tensor z = detail::linear_forward(layer, w, a);
  add_bias(z, layer.bias, false);
  Tensor s(z.shape);
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double denom = stabilize(z.data[j], eps);
    s.data[j] = denom == 0.0 ? 0.0 : r_out.data[j] / denom;
  }
  Tensor c = detail::linear_transpose(layer, w, a.shape, s);
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] *= a.data[i];
  return c;
}

Tensor zplus_rule(const LayerSpec& layer, const Tensor& a, const Tensor& r_out) {
  // (a_i w_ij)^+ = a_i^+ w_ij^+ + a_i^- w_ij^-
  std::vector<double> w_pos, w_neg;
  if (layer.has_weights()) {
    w_pos.resize(layer.weight.size());
    w_neg.resize(layer.weight.size());
    for (std::size_t k = 0; k < w_pos.size(); ++k) {
      w_pos[k] = std::max(layer.weight.data[k], 0.0);
      w_neg[k] = std::min(layer.weight.data[k], 0.0);
    }
  }
  Tensor a_pos(a.shape), a_neg(a.shape);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a_pos.data[i] = std::max(a.data[i], 0.0);
    a_neg.data[i] = std::min(a.data[i], 0.0);
  }
  const bool weighted = layer.has_weights();
  Tensor z = detail::linear_forward(layer, w_pos, a_pos);
  if (weighted) {
    const Tensor zn = detail::linear_forward(layer, w_neg, a_neg);
    for (std::size_t j = 0; j < z.size(); ++j) z.data[j] += zn.data[j];
  }
  add_bias(z, layer.bias, true);
  Tensor s(z.shape);
  for (std::size_t j = 0; j < z.size(); ++j) s.data[j] = z.data[j] > 0.0 ? r_out.data[j] / z.data[j] : 0.0;

  Tensor c_pos = detail::linear_transpose(layer, w_pos, a.shape, s);
  Tensor r(a.shape);
  if (weighted) {
    const Tensor c_neg = detail::linear_transpose(layer, w_neg, a.shape, s);
    for (std::size_t i = 0; i < r.size(); ++i) {
      r.data[i] = a_pos.data[i] * c_pos.data[i] + a_neg.data[i] * c_neg.data[i];
    }
  } else {
    for (std::size_t i = 0; i < r.size(); ++i) r.data[i] = a_pos.data[i] * c_pos.data[i];
  }
  return r;
}

}  // namespace

RuleVariant RuleVariant::eps(double e) {
  if (!(e > 0.0)) throw ConfigError("LRP epsilon must be positive");
  return {RuleKind::epsilon, e};
}

const RuleVariant& LrpRule::for_layer(std::size_t index, LayerKind kind) const {
  if (auto it = by_layer.find(index); it != by_layer.end()) return it->second;
  if (auto it = by_kind.find(kind); it != by_kind.end()) return it->second;
  throw ConfigError("no LRP rule for layer " + std::to_string(index) + " (" + std::string(to_string(kind)) + ")");
}

namespace {

LrpRule uniform_rule(RuleVariant weighted, RuleVariant pooling) {
  LrpRule r;
  for (auto k : {LayerKind::dense, LayerKind::conv1d, LayerKind::conv2d, LayerKind::depthwise_conv2d}) {
    r.by_kind[k] = weighted;
  }
  for (auto k : {LayerKind::relu, LayerKind::maxpool, LayerKind::flatten}) r.by_kind[k] = RuleVariant::passthrough();
  for (auto k : {LayerKind::avgpool, LayerKind::global_avgpool}) r.by_kind[k] = pooling;
  return r;
}

}  // namespace

LrpRule LrpRule::epsilon(double eps) { return uniform_rule(RuleVariant::eps(eps), RuleVariant::passthrough()); }
// Average pools are linear with positive weights; under z+ only positive
// inputs receive relevance, which keeps every input relevance >= 0.
LrpRule LrpRule::zplus() { return uniform_rule(RuleVariant::zplus(), RuleVariant::zplus()); }

LrpRule composite_epsilon_plus(const ModelGraph& model, double eps) {
  LrpRule r;
  for (const auto& l : model.layers) {
    if (is_convolution(l.kind)) {
      r.by_kind[l.kind] = RuleVariant::zplus();
    } else if (l.kind == LayerKind::dense) {
      r.by_kind[l.kind] = RuleVariant::eps(eps);
    } else {
      r.by_kind[l.kind] = RuleVariant::passthrough();
    }
  }
  return r;
}

Tensor propagate_layer(const LayerSpec& layer, const RuleVariant& rule, const Tensor& input,
                       const Tensor& relevance_out) {
  switch (layer.kind) {
    case LayerKind::relu:
      return Tensor(input.shape, relevance_out.data);
    case LayerKind::flatten:
      return Tensor(input.shape, relevance_out.data);
    case LayerKind::maxpool: {
      Tensor r(input.shape);
      const auto winner = detail::maxpool_argmax(layer, input);
      for (std::size_t o = 0; o < winner.size(); ++o) r.data[winner[o]] += relevance_out.data[o];
      return r;
    }
    case LayerKind::avgpool:
    case LayerKind::global_avgpool:
      if (rule.kind == RuleKind::zplus) return zplus_rule(layer, input, relevance_out);
      return epsilon_rule(layer, rule.kind == RuleKind::epsilon ? rule.epsilon : 0.0, input, relevance_out);
    case LayerKind::dense:
    case LayerKind::conv1d:
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv2d:
      if (rule.kind == RuleKind::epsilon) return epsilon_rule(layer, rule.epsilon, input, relevance_out);
      if (rule.kind == RuleKind::zplus) return zplus_rule(layer, input, relevance_out);
      throw ConfigError("passthrough is not a valid LRP rule for " + std::string(to_string(layer.kind)) +
                        " layers");
  }
  throw ConfigError("unknown layer kind");
}

Explanation lrp_backward(const ModelGraph& model, const ForwardTrace& trace, std::size_t class_index,
                         const LrpRule& rule) {
  const std::size_t n = model.layers.size();
  if (trace.activations.size() != n + 1) {
    throw ShapeError("trace has " + std::to_string(trace.activations.size()) + " activations, model '" +
                     model.name + "' needs " + std::to_string(n + 1));
  }
  if (class_index >= trace.logits().size()) {
    throw ConfigError("class index " + std::to_string(class_index) + " out of range for " +
                      std::to_string(trace.logits().size()) + " logits");
  }
  // Resolve every rule up front so a missing assignment fails before any work.
  std::vector<const RuleVariant*> rules(n);
  for (std::size_t i = 0; i < n; ++i) rules[i] = &rule.for_layer(i, model.layers[i].kind);

  Explanation ex;
  const double logit = trace.logits().data[class_index];
  Tensor r(trace.logits().shape);
  r.data[class_index] = logit;
  ex.layer_totals.assign(n + 1, 0.0);
  ex.layer_totals[n] = logit;
  for (std::size_t i = n; i-- > 0;) {
    const Tensor& a = trace.activations[i];
    if (r.size() != trace.activations[i + 1].size()) {
      throw ShapeError("trace does not match model at layer " + std::to_string(i));
    }
    try {
      r = propagate_layer(model.layers[i], *rules[i], a, r);
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + ": " + e.what());
    }
    ex.layer_totals[i] = pairwise_sum(r.values());
  }

  ex.absorbed = logit - ex.layer_totals[0];
  ex.map.class_index = class_index;
  ex.map.logit = logit;
  const Shape& in = r.shape;
  if (model.representation == Representation::logmel && in.size() == 3) {
    ex.map.domain = RelevanceDomain::mel_time_frequency;
    ex.map.values = Grid(in[1], in[2], r.data);
  } else {
    ex.map.domain = RelevanceDomain::time;
    ex.map.values = Grid(1, r.size(), r.data);
  }
  ex.input_relevance = std::move(r);
  return ex;
}

}  // namespace rlens
