#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlens/grid.hpp"

namespace rlens {

/// Per-class frequency focus of P x M relevance maps.
struct FrequencyFocus {
  double hz = 0.0;               // center frequency of the rounded mean index
  double mean_index = 0.0;       // average of the per-map argmax rows
  std::size_t index = 0;         // mean_index rounded half-to-even
  std::vector<std::size_t> argmax_rows;
};

/// For each map, the row with the largest time-summed relevance; the class
/// average of those rows is rounded and mapped through center_hz.
FrequencyFocus most_relevant_frequency(std::span<const Grid> maps, std::span<const double> center_hz);

/// Frequency-weighted mean of the positive relevance in every frame (Hz).
/// Negative entries are clipped to zero; frames without positive relevance
/// are nullopt.
std::vector<std::optional<double>> relevance_centroid(const Grid& map, std::span<const double> center_hz);

/// out(p, (m + shift) mod M) = in(p, m).
Grid circular_time_shift(const Grid& map, std::size_t shift);

struct AlignedSimilarity {
  double similarity = 0.0;
  /// Circular delay of b relative to a that maximizes their correlation.
  std::size_t shift = 0;
  bool zero_norm = false;
};

/// Cosine similarity of the flattened maps after circularly shifting b
/// along time to the offset of maximal cross-correlation. Ties go to the
/// smallest circular distance. Zero-norm inputs give 0 with zero_norm set.
AlignedSimilarity aligned_cosine_similarity(const Grid& a, const Grid& b);

struct ClassSimilarity {
  int class_id = 0;
  std::size_t maps = 0;
  std::size_t within_pairs = 0;
  double within_mean = 0.0;
  double within_std = 0.0;
  /// Mean over pairs between this class and any other class.
  double between_mean = 0.0;
};

struct SimilarityReport {
  std::vector<ClassSimilarity> per_class;
  double within_mean = 0.0;
  double within_std_pairs = 0.0;
  double within_std_classes = 0.0;
  std::size_t within_pairs = 0;
  double between_mean = 0.0;
  double between_std_pairs = 0.0;
  double between_std_classes = 0.0;
  std::size_t between_pairs = 0;
  std::size_t between_pairs_total = 0;
  bool between_subsampled = false;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMaxBetweenPairs = 200000;

/// Within-class mean over all unordered same-class pairs, between-class
/// mean over all unordered cross-class pairs. When the cross-class set is
/// larger than max_between_pairs it is subsampled uniformly with `seed`.
/// Requires at least two classes with at least two maps each.
SimilarityReport similarity_report(const std::map<int, std::vector<Grid>>& groups, std::uint64_t seed = 0,
                                   std::size_t max_between_pairs = kMaxBetweenPairs);

std::string to_json(const SimilarityReport& report);

/// Elementwise per-class mean; positive_only clips negatives first.
std::map<int, Grid> class_average_heatmaps(const std::map<int, std::vector<Grid>>& groups,
                                           bool positive_only = false);

}  // namespace rlens
