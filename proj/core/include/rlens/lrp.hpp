#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "rlens/model.hpp"
#include "rlens/relevance_map.hpp"

namespace rlens {

enum class RuleKind { epsilon, zplus, passthrough };

struct RuleVariant {
  RuleKind kind = RuleKind::passthrough;
  double epsilon = 0.0;

  static RuleVariant eps(double e = 1e-6);
  static RuleVariant zplus() { return {RuleKind::zplus, 0.0}; }
  static RuleVariant passthrough() { return {RuleKind::passthrough, 0.0}; }
};

inline constexpr double kDefaultEpsilon = 1e-6;

/// Per layer-kind rule assignment with optional per-layer overrides.
///
/// epsilon: z_ij = a_i w_ij, denominator z_j + eps*sign(z_j) (sign(0) = +1).
/// zplus:   z_ij = (a_i w_ij)^+.
/// passthrough: relu and flatten copy relevance, maxpool sends it to the
/// window winner, average pools redistribute proportionally. Not valid for
/// dense or convolution layers.
///
/// Biases enter the denominators and absorb their share of relevance.
struct LrpRule {
  std::map<LayerKind, RuleVariant> by_kind;
  std::map<std::size_t, RuleVariant> by_layer;

  /// Throws ConfigError when no rule covers the layer.
  const RuleVariant& for_layer(std::size_t index, LayerKind kind) const;

  /// epsilon on every weighted layer, passthrough elsewhere.
  static LrpRule epsilon(double eps = kDefaultEpsilon);
  /// z+ on every weighted layer and average pool, passthrough elsewhere.
  static LrpRule zplus();
};

/// The epsilon-plus composite: z+ for convolution layers, epsilon for dense
/// layers, passthrough for activations, pooling and reshapes.
LrpRule composite_epsilon_plus(const ModelGraph& model, double eps = kDefaultEpsilon);

struct Explanation {
  /// Input-domain map: time (1 x L) for waveform models, mel_time_frequency
  /// (P x M) for logmel models, 1 x n otherwise.
  RelevanceMap map;
  Tensor input_relevance;
  /// Sum of relevance entering each layer's input; the last entry is the
  /// explained logit.
  std::vector<double> layer_totals;
  /// Relevance absorbed by biases and stabilizers (logit - sum of inputs).
  double absorbed = 0.0;
};

/// Starts from the raw logit of `class_index` and redistributes it layer by
/// layer down to the model input.
Explanation lrp_backward(const ModelGraph& model, const ForwardTrace& trace, std::size_t class_index,
                         const LrpRule& rule);

/// Relevance at the input of one layer given relevance at its output.
Tensor propagate_layer(const LayerSpec& layer, const RuleVariant& rule, const Tensor& input,
                       const Tensor& relevance_out);

}  // namespace rlens
