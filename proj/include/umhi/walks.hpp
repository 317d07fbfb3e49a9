#pragma once

#include <algorithm>
#include <numeric>
#include <thread>
#include <vector>

#include "umhi/alias.hpp"
#include "umhi/embedding.hpp"
#include "umhi/graph.hpp"
#include "umhi/line.hpp"
#include "umhi/rng.hpp"

namespace umhi {

struct WalkConfig {
  std::size_t dim = 100;
  std::size_t walks_per_node = 10;
  std::size_t walk_len = 40;
  std::size_t window = 5;
  double p = 1.0;  // return parameter; p = q = 1 is uniform Deepwalk
  double q = 1.0;  // in-out parameter
  std::size_t negatives = 5;
  double lr0 = 0.025;
  std::uint64_t seed = 1;
  int workers = 1;
};

namespace detail {

inline std::vector<std::vector<UserId>> undirected_neighbors(const TemporalGraph& g) {
  std::vector<std::vector<UserId>> nbrs(g.num_users);
  for (UserId i = 0; i < g.num_users; ++i) {
    std::merge(g.out_adjacency[i].begin(), g.out_adjacency[i].end(),
               g.in_adjacency[i].begin(), g.in_adjacency[i].end(),
               std::back_inserter(nbrs[i]));
    nbrs[i].erase(std::unique(nbrs[i].begin(), nbrs[i].end()), nbrs[i].end());
  }
  return nbrs;
}

// Second-order biased step: weight 1/p to return, 1 toward common neighbors
// of the previous node, 1/q otherwise.
inline UserId biased_step(const std::vector<std::vector<UserId>>& nbrs,
                          std::int64_t prev, UserId cur, double p, double q,
                          Rng& rng, std::vector<double>& scratch) {
  const auto& cand = nbrs[cur];
  if (prev < 0 || (p == 1.0 && q == 1.0)) {
    return cand[rng.uniform_index(cand.size())];
  }
  const auto& prev_nbrs = nbrs[static_cast<UserId>(prev)];
  scratch.resize(cand.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < cand.size(); ++k) {
    double w;
    if (cand[k] == static_cast<UserId>(prev)) w = 1.0 / p;
    else if (std::binary_search(prev_nbrs.begin(), prev_nbrs.end(), cand[k])) w = 1.0;
    else w = 1.0 / q;
    scratch[k] = w;
    sum += w;
  }
  double r = rng.uniform() * sum;
  for (std::size_t k = 0; k < cand.size(); ++k) {
    r -= scratch[k];
    if (r <= 0.0) return cand[k];
  }
  return cand.back();
}

}  // namespace detail

// Generates node2vec-style second-order walks over the symmetrized graph and
// runs the walk corpus through the generic skip-gram trainer below.
inline std::vector<std::vector<UserId>> generate_walks(const TemporalGraph& g,
                                                       const WalkConfig& cfg) {
  const auto nbrs = detail::undirected_neighbors(g);
  Rng rng(substream_seed(cfg.seed, "walk-gen"));
  std::vector<std::vector<UserId>> walks;
  walks.reserve(cfg.walks_per_node * g.num_users);
  std::vector<UserId> order(g.num_users);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> scratch;

  for (std::size_t pass = 0; pass < cfg.walks_per_node; ++pass) {
    rng.shuffle(order);
    for (UserId start : order) {
      std::vector<UserId> walk{start};
      std::int64_t prev = -1;
      while (walk.size() < cfg.walk_len) {
        const UserId cur = walk.back();
        if (nbrs[cur].empty()) break;  // dead end, truncated walk
        const UserId next =
            detail::biased_step(nbrs, prev, cur, cfg.p, cfg.q, rng, scratch);
        prev = cur;
        walk.push_back(next);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

// Skip-gram with negative sampling over integer token sequences. Returns the
// input (center) embeddings; context vectors are internal. Shared by the walk
// embedder and the word-vector trainer.
inline EmbeddingTable train_skipgram(const std::vector<std::vector<std::uint32_t>>& sequences,
                                     std::size_t vocab, std::size_t dim,
                                     std::size_t window, std::size_t negatives,
                                     std::size_t epochs, double lr0,
                                     const std::vector<double>& noise_weights,
                                     std::uint64_t seed, int workers = 1) {
  EmbeddingTable input(vocab, dim);
  EmbeddingTable output(vocab, dim);
  {
    Rng init_rng(substream_seed(seed, "skipgram-init"));
    for (double& x : input.raw())
      x = (init_rng.uniform() - 0.5) / static_cast<double>(dim);
  }
  bool any_positive = false;
  for (double w : noise_weights) any_positive |= (w > 0.0);
  if (!any_positive || vocab == 0) return input;
  const AliasTable noise(noise_weights);

  std::size_t total_pairs = 0;
  for (const auto& s : sequences) {
    for (std::size_t c = 0; c < s.size(); ++c) {
      const std::size_t lo = c >= window ? c - window : 0;
      const std::size_t hi = std::min(s.size(), c + window + 1);
      total_pairs += hi - lo - 1;
    }
  }
  total_pairs *= epochs;
  if (total_pairs == 0) return input;

  auto train_range = [&](int tid, std::size_t begin_seq, std::size_t end_seq) {
    Rng rng(substream_seed(seed, "skipgram-worker", static_cast<std::uint64_t>(tid)));
    std::vector<double> u_delta(dim);
    std::size_t done = 0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      for (std::size_t si = begin_seq; si < end_seq; ++si) {
        const auto& s = sequences[si];
        for (std::size_t c = 0; c < s.size(); ++c) {
          const std::size_t lo = c >= window ? c - window : 0;
          const std::size_t hi = std::min(s.size(), c + window + 1);
          double* u = input.row(s[c]);
          for (std::size_t t = lo; t < hi; ++t) {
            if (t == c) continue;
            const double progress =
                static_cast<double>(done) * workers / static_cast<double>(total_pairs);
            const double lr = lr0 * (1.0 - 0.9 * std::min(progress, 1.0));
            ++done;
            std::fill(u_delta.begin(), u_delta.end(), 0.0);
            for (std::size_t k = 0; k <= negatives; ++k) {
              const std::uint32_t target_id =
                  k == 0 ? s[t] : static_cast<std::uint32_t>(noise.sample(rng));
              if (k > 0 && target_id == s[t]) continue;  // skip noise == target
              const double label = k == 0 ? 1.0 : 0.0;
              double* v = output.row(target_id);
              double x = 0.0;
              for (std::size_t d = 0; d < dim; ++d) x += u[d] * v[d];
              const double grad = (label - sigmoid(x)) * lr;
              for (std::size_t d = 0; d < dim; ++d) {
                u_delta[d] += grad * v[d];
                v[d] += grad * u[d];
              }
            }
            for (std::size_t d = 0; d < dim; ++d) u[d] += u_delta[d];
          }
        }
      }
    }
  };

  if (workers <= 1) {
    train_range(0, 0, sequences.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t per = (sequences.size() + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const std::size_t b = std::min(sequences.size(), per * static_cast<std::size_t>(t));
      const std::size_t e = std::min(sequences.size(), b + per);
      if (b < e) pool.emplace_back(train_range, t, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return input;
}

// Deepwalk / node2vec node embeddings: biased walks + skip-gram with negative
// sampling over walk windows. Isolated nodes are never visited as context and
// keep their seeded initialization.
inline EmbeddingTable train_walk_embedding(const TemporalGraph& g, const WalkConfig& cfg) {
  if (g.num_users == 0) throw ArgumentError("train_walk_embedding: empty graph");
  const auto walks = generate_walks(g, cfg);
  std::vector<std::vector<std::uint32_t>> sequences;
  sequences.reserve(walks.size());
  for (const auto& w : walks) sequences.emplace_back(w.begin(), w.end());
  return train_skipgram(sequences, g.num_users, cfg.dim, cfg.window,
                        cfg.negatives, /*epochs=*/1, cfg.lr0,
                        detail::noise_weights(g, 0.75),
                        substream_seed(cfg.seed, "walk-sg"), cfg.workers);
}

}  // namespace umhi
