#pragma once

#include <cstddef>
#include <vector>

#include "umhi/graph.hpp"
#include "umhi/rng.hpp"

namespace umhi {

// Walker alias table: O(n) setup, O(1) draws, distribution equal to the
// normalized input weights.
class AliasTable {
 public:
  AliasTable() = default;

  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw ArgumentError("alias: negative weight");
      sum += w;
    }
    if (n == 0 || sum <= 0.0) throw ArgumentError("alias: no positive weight");

    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t k = 0; k < n; ++k) scaled[k] = weights[k] * n / sum;

    std::vector<std::size_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t k = n; k-- > 0;) {
      (scaled[k] < 1.0 ? small : large).push_back(k);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      large.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] += scaled[s] - 1.0;
      (scaled[l] < 1.0 ? small : large).push_back(l);
    }
    // Float residue: whatever is left fills its own bin entirely.
    while (!large.empty()) {
      prob_[large.back()] = 1.0;
      large.pop_back();
    }
    while (!small.empty()) {
      prob_[small.back()] = 1.0;
      small.pop_back();
    }
  }

  std::size_t size() const { return prob_.size(); }

  std::size_t sample(Rng& rng) const {
    const std::size_t k = rng.uniform_index(prob_.size());
    return rng.uniform() < prob_[k] ? k : alias_[k];
  }

  // Exact outcome probabilities implied by the table (bin mass accounting).
  // Used by tests for exhaustive verification at small n.
  std::vector<double> outcome_probabilities() const {
    const std::size_t n = prob_.size();
    std::vector<double> p(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      p[k] += prob_[k] / n;
      p[alias_[k]] += (1.0 - prob_[k]) / n;
    }
    return p;
  }

  const std::vector<double>& prob() const { return prob_; }
  const std::vector<std::size_t>& alias() const { return alias_; }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

}  // namespace umhi
