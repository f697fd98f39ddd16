#include "rlens/analysis.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>

#include "json.hpp"
#include "rlens/random.hpp"

namespace rlens {
namespace {

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

double stddev_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mu) * (v[i] - mu);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(v.size()));
}

double norm_of(const Grid& g) {
  std::vector<double> sq(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) sq[i] = g.values()[i] * g.values()[i];
  return std::sqrt(pairwise_sum(sq));
}

double correlation(const Grid& a, const Grid& b, std::size_t shift) {
  const std::size_t cols = a.cols();
  double s = 0.0;
  for (std::size_t p = 0; p < a.rows(); ++p) {
    for (std::size_t m = 0; m < cols; ++m) s += a(p, m) * b(p, (m + shift) % cols);
  }
  return s;
}

}  // namespace

FrequencyFocus most_relevant_frequency(std::span<const Grid> maps, std::span<const double> center_hz) {
  if (maps.empty()) throw ConfigError("most_relevant_frequency: empty class");
  FrequencyFocus f;
  const std::size_t rows = maps.front().rows();
  if (center_hz.size() != rows) {
    throw ShapeError("most_relevant_frequency: " + std::to_string(center_hz.size()) + " center frequencies for " +
                     std::to_string(rows) + " rows");
  }
  std::vector<double> indices;
  for (const auto& map : maps) {
    if (!map.same_shape(maps.front())) throw ShapeError("most_relevant_frequency: maps differ in shape");
    std::size_t best = 0;
    double best_sum = -INFINITY;
    for (std::size_t p = 0; p < rows; ++p) {
      double s = 0.0;
      for (std::size_t m = 0; m < map.cols(); ++m) s += map(p, m);
      if (s > best_sum) {
        best_sum = s;
        best = p;
      }
    }
    f.argmax_rows.push_back(best);
    indices.push_back(static_cast<double>(best));
  }
  f.mean_index = mean_of(indices);
  const int old_mode = std::fegetround();
  std::fesetround(FE_TONEAREST);
  f.index = static_cast<std::size_t>(std::nearbyint(f.mean_index));
  std::fesetround(old_mode);
  f.hz = center_hz[f.index];
  return f;
}

std::vector<std::optional<double>> relevance_centroid(const Grid& map, std::span<const double> center_hz) {
  if (center_hz.size() != map.rows()) {
    throw ShapeError("relevance_centroid: " + std::to_string(center_hz.size()) + " center frequencies for " +
                     std::to_string(map.rows()) + " rows");
  }
  std::vector<std::optional<double>> out(map.cols());
  for (std::size_t m = 0; m < map.cols(); ++m) {
    double weighted = 0.0, mass = 0.0;
    for (std::size_t p = 0; p < map.rows(); ++p) {
      const double r = std::max(map(p, m), 0.0);
      weighted += center_hz[p] * r;
      mass += r;
    }
    if (mass > 0.0) out[m] = weighted / mass;
  }
  return out;
}

Grid circular_time_shift(const Grid& map, std::size_t shift) {
  Grid out(map.rows(), map.cols());
  const std::size_t cols = map.cols();
  for (std::size_t p = 0; p < map.rows(); ++p) {
    for (std::size_t m = 0; m < cols; ++m) out(p, (m + shift) % cols) = map(p, m);
  }
  return out;
}

AlignedSimilarity aligned_cosine_similarity(const Grid& a, const Grid& b) {
  if (!a.same_shape(b)) throw ShapeError("aligned_cosine_similarity: maps differ in shape");
  AlignedSimilarity out;
  const double na = norm_of(a), nb = norm_of(b);
  if (na == 0.0 || nb == 0.0) {
    out.zero_norm = true;
    return out;
  }
  const std::size_t cols = a.cols();
  double best = correlation(a, b, 0);
  // Candidate order 0, 1, M-1, 2, M-2, ... keeps ties at the smallest distance.
  for (std::size_t d = 1; d <= cols / 2; ++d) {
    for (std::size_t shift : {d, cols - d}) {
      if (shift == cols) continue;
      const double c = correlation(a, b, shift);
      if (c > best) {
        best = c;
        out.shift = shift;
      }
    }
  }
  out.similarity = std::clamp(best / (na * nb), -1.0, 1.0);
  return out;
}

SimilarityReport similarity_report(const std::map<int, std::vector<Grid>>& groups, std::uint64_t seed,
                                   std::size_t max_between_pairs) {
  std::size_t usable = 0;
  for (const auto& [id, maps] : groups) usable += maps.size() >= 2 ? 1 : 0;
  if (groups.size() < 2 || usable < 2) {
    throw ConfigError("similarity_report: need at least two classes with at least two maps each");
  }
  struct Item {
    int cls;
    const Grid* map;
  };
  std::vector<Item> items;
  for (const auto& [id, maps] : groups) {
    for (const auto& m : maps) items.push_back({id, &m});
  }

  SimilarityReport rep;
  rep.seed = seed;
  std::vector<double> within_all;
  std::map<int, std::vector<double>> within_by_class, between_by_class;
  for (const auto& [id, maps] : groups) {
    auto& v = within_by_class[id];
    for (std::size_t i = 0; i < maps.size(); ++i) {
      for (std::size_t j = i + 1; j < maps.size(); ++j) {
        v.push_back(aligned_cosine_similarity(maps[i], maps[j]).similarity);
      }
    }
    within_all.insert(within_all.end(), v.begin(), v.end());
  }

  std::size_t total_between = 0;
  for (auto it = groups.begin(); it != groups.end(); ++it) {
    for (auto jt = std::next(it); jt != groups.end(); ++jt) total_between += it->second.size() * jt->second.size();
  }
  rep.between_pairs_total = total_between;
  std::vector<double> between_all;
  auto record_between = [&](const Item& x, const Item& y) {
    const double s = aligned_cosine_similarity(*x.map, *y.map).similarity;
    between_all.push_back(s);
    between_by_class[x.cls].push_back(s);
    between_by_class[y.cls].push_back(s);
  };
  if (total_between <= max_between_pairs) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (std::size_t j = i + 1; j < items.size(); ++j) {
        if (items[i].cls != items[j].cls) record_between(items[i], items[j]);
      }
    }
  } else {
    rep.between_subsampled = true;
    Rng rng(seed);
    while (between_all.size() < max_between_pairs) {
      const auto i = rng.below(items.size());
      const auto j = rng.below(items.size());
      if (items[i].cls == items[j].cls) continue;
      record_between(items[std::min(i, j)], items[std::max(i, j)]);
    }
  }

  std::vector<double> class_within_means, class_between_means;
  for (const auto& [id, maps] : groups) {
    ClassSimilarity c;
    c.class_id = id;
    c.maps = maps.size();
    const auto& w = within_by_class[id];
    c.within_pairs = w.size();
    c.within_mean = mean_of(w);
    c.within_std = stddev_of(w);
    c.between_mean = mean_of(between_by_class[id]);
    if (!w.empty()) class_within_means.push_back(c.within_mean);
    if (!between_by_class[id].empty()) class_between_means.push_back(c.between_mean);
    rep.per_class.push_back(c);
  }
  rep.within_pairs = within_all.size();
  rep.within_mean = mean_of(within_all);
  rep.within_std_pairs = stddev_of(within_all);
  rep.within_std_classes = stddev_of(class_within_means);
  rep.between_pairs = between_all.size();
  rep.between_mean = mean_of(between_all);
  rep.between_std_pairs = stddev_of(between_all);
  rep.between_std_classes = stddev_of(class_between_means);
  return rep;
}

std::string to_json(const SimilarityReport& r) {
  nlohmann::ordered_json j;
  j["within"] = {{"mean", r.within_mean},
                 {"std_over_pairs", r.within_std_pairs},
                 {"std_over_classes", r.within_std_classes},
                 {"pairs", r.within_pairs}};
  j["between"] = {{"mean", r.between_mean},
                  {"std_over_pairs", r.between_std_pairs},
                  {"std_over_classes", r.between_std_classes},
                  {"pairs", r.between_pairs},
                  {"pairs_total", r.between_pairs_total},
                  {"subsampled", r.between_subsampled},
                  {"seed", r.seed}};
  auto classes = nlohmann::ordered_json::array();
  for (const auto& c : r.per_class) {
    classes.push_back({{"class_id", c.class_id},
                       {"maps", c.maps},
                       {"within_pairs", c.within_pairs},
                       {"within_mean", c.within_mean},
                       {"within_std", c.within_std},
                       {"between_mean", c.between_mean}});
  }
  j["classes"] = std::move(classes);
  return j.dump(2) + "\n";
}

std::map<int, Grid> class_average_heatmaps(const std::map<int, std::vector<Grid>>& groups, bool positive_only) {
  std::map<int, Grid> out;
  for (const auto& [id, maps] : groups) {
    if (maps.empty()) throw ConfigError("class_average_heatmaps: class " + std::to_string(id) + " has no maps");
    const Grid& first = maps.front();
    Grid avg(first.rows(), first.cols());
    std::vector<double> column(maps.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
      for (std::size_t n = 0; n < maps.size(); ++n) {
        if (!maps[n].same_shape(first)) throw ShapeError("class_average_heatmaps: maps differ in shape");
        const double v = maps[n].values()[i];
        column[n] = positive_only ? std::max(v, 0.0) : v;
      }
      avg.values()[i] = pairwise_sum(column) / static_cast<double>(maps.size());
    }
    out.emplace(id, std::move(avg));
  }
  return out;
}

}  // namespace rlens
