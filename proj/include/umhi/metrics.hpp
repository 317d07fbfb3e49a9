#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "umhi/graph.hpp"

namespace umhi {

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double auc = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  double threshold = 0.5;
};

struct ScoredLabel {
  double score = 0.0;
  int label = 0;  // 1 = unfollow
};

// AUC as the rank-sum statistic with tied scores counted 0.5. Equivalent to
// exhaustive counting over all positive-negative pairs.
inline double auc_rank_sum(const std::vector<ScoredLabel>& scored) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : scored) (s.label == 1 ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw ArgumentError("auc: needs at least one positive and one negative");

  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].score < scored[b].score;
  });

  double rank_sum_pos = 0.0;
  std::size_t k = 0;
  while (k < order.size()) {
    std::size_t j = k;
    while (j < order.size() &&
           scored[order[j]].score == scored[order[k]].score)
      ++j;
    // Average rank over the tie group (1-based ranks).
    const double avg_rank = (static_cast<double>(k + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = k; t < j; ++t) {
      if (scored[order[t]].label == 1) rank_sum_pos += avg_rank;
    }
    k = j;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Precision = TP/(TP+FP) with 0 when nothing is predicted positive;
// recall = TP/(TP+FN); predicted label is score >= threshold.
inline MetricsReport compute_metrics(const std::vector<ScoredLabel>& scored,
                                     double threshold = 0.5) {
  MetricsReport r;
  r.threshold = threshold;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& s : scored) {
    (s.label == 1 ? r.n_pos : r.n_neg)++;
    const bool predicted = s.score >= threshold;
    if (predicted && s.label == 1) ++tp;
    else if (predicted && s.label == 0) ++fp;
    else if (!predicted && s.label == 1) ++fn;
  }
  r.precision = (tp + fp) == 0 ? 0.0
                               : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = (tp + fn) == 0 ? 0.0
                            : static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.auc = auc_rank_sum(scored);
  return r;
}

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
  return {{"precision", r.precision}, {"recall", r.recall},   {"auc", r.auc},
          {"n_pos", r.n_pos},         {"n_neg", r.n_neg},     {"threshold", r.threshold}};
}

}  // namespace umhi
