#pragma once

#include <cmath>
#include <cstddef>
#include <thread>
#include <vector>

#include "umhi/alias.hpp"
#include "umhi/embedding.hpp"
#include "umhi/graph.hpp"
#include "umhi/rng.hpp"

namespace umhi {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class LineOrder { kFirst = 1, kSecond = 2 };

struct LineConfig {
  LineOrder order = LineOrder::kSecond;
  std::size_t dim = 100;
  std::size_t epochs = 100;  // one epoch = |E| edge samples
  std::size_t negatives = 5;
  double lr0 = 0.025;
  std::uint64_t seed = 1;
  int workers = 1;  // >1 uses lock-free shared updates; deterministic only at 1
};

namespace lineops {

// Log-likelihood of one sampled pair with an explicit noise draw:
//   log sigmoid(u.v) + sum_n log sigmoid(-u.n)
// The trainer ascends this; tests difference it numerically.
inline double pair_loss(const double* u, const double* v,
                        const std::vector<const double*>& noise,
                        std::size_t dim) {
  auto dot = [dim](const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += a[d] * b[d];
    return s;
  };
  double ll = std::log(sigmoid(dot(u, v)));
  for (const double* n : noise) ll += std::log(sigmoid(-dot(u, n)));
  return ll;
}

// Analytic gradients of pair_loss at the given point. grad_u has length dim;
// grad_v likewise; grad_noise is per noise vector.
inline void pair_grads(const double* u, const double* v,
                       const std::vector<const double*>& noise, std::size_t dim,
                       std::vector<double>& grad_u, std::vector<double>& grad_v,
                       std::vector<std::vector<double>>& grad_noise) {
  auto dot = [dim](const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += a[d] * b[d];
    return s;
  };
  grad_u.assign(dim, 0.0);
  grad_v.assign(dim, 0.0);
  grad_noise.assign(noise.size(), std::vector<double>(dim, 0.0));

  const double g_pos = 1.0 - sigmoid(dot(u, v));
  for (std::size_t d = 0; d < dim; ++d) {
    grad_u[d] += g_pos * v[d];
    grad_v[d] += g_pos * u[d];
  }
  for (std::size_t k = 0; k < noise.size(); ++k) {
    const double g_neg = -sigmoid(dot(u, noise[k]));
    for (std::size_t d = 0; d < dim; ++d) {
      grad_u[d] += g_neg * noise[k][d];
      grad_noise[k][d] += g_neg * u[d];
    }
  }
}

}  // namespace lineops

namespace detail {

struct EdgeList {
  std::vector<UserId> src;
  std::vector<UserId> dst;
};

inline EdgeList directed_edges(const TemporalGraph& g) {
  EdgeList e;
  for (UserId i = 0; i < g.num_users; ++i) {
    for (UserId j : g.out_adjacency[i]) {
      e.src.push_back(i);
      e.dst.push_back(j);
    }
  }
  return e;
}

inline std::vector<double> noise_weights(const TemporalGraph& g, double power) {
  std::vector<double> w(g.num_users, 0.0);
  for (UserId u = 0; u < g.num_users; ++u) {
    const double deg = static_cast<double>(g.out_adjacency[u].size() +
                                           g.in_adjacency[u].size());
    w[u] = std::pow(deg, power);
  }
  return w;
}

}  // namespace detail

// LINE with first- or second-order proximity. First order treats follow
// edges as undirected and learns a single vector per node; second order keeps
// direction and learns separate vertex and context vectors (vertex returned).
// Noise nodes follow degree^0.75; edges are drawn through an alias table; the
// learning rate decays linearly to lr0/10 over the sample budget.
inline EmbeddingTable train_line(const TemporalGraph& g, const LineConfig& cfg) {
  if (g.num_edges() == 0) throw ArgumentError("train_line: graph has no edge");
  const std::size_t dim = cfg.dim;

  auto edges = detail::directed_edges(g);
  const std::size_t num_directed = edges.src.size();
  if (cfg.order == LineOrder::kFirst) {
    // Undirected treatment: sample each stored edge in both orientations.
    for (std::size_t k = 0; k < num_directed; ++k) {
      edges.src.push_back(edges.dst[k]);
      edges.dst.push_back(edges.src[k]);
    }
  }
  const AliasTable edge_sampler(std::vector<double>(edges.src.size(), 1.0));
  const AliasTable noise_sampler(detail::noise_weights(g, 0.75));

  EmbeddingTable vertex(g.num_users, dim);
  EmbeddingTable context;
  {
    Rng init_rng(substream_seed(cfg.seed, "line-init"));
    for (double& x : vertex.raw())
      x = (init_rng.uniform() - 0.5) / static_cast<double>(dim);
  }
  if (cfg.order == LineOrder::kSecond) context = EmbeddingTable(g.num_users, dim);

  const std::size_t total_samples = cfg.epochs * num_directed;
  if (total_samples == 0) return vertex;

  auto worker = [&](int tid, std::size_t samples) {
    Rng rng(substream_seed(cfg.seed, "line-worker", static_cast<std::uint64_t>(tid)));
    std::vector<double> u_delta(dim);
    const std::size_t stride = static_cast<std::size_t>(cfg.workers);
    for (std::size_t t = 0; t < samples; ++t) {
      const double progress =
          static_cast<double>(t) * static_cast<double>(stride) /
          static_cast<double>(total_samples);
      const double lr = cfg.lr0 * (1.0 - 0.9 * progress);

      const std::size_t e = edge_sampler.sample(rng);
      const UserId src = edges.src[e];
      const UserId dst = edges.dst[e];
      double* u = vertex.row(src);
      std::fill(u_delta.begin(), u_delta.end(), 0.0);

      for (std::size_t k = 0; k <= cfg.negatives; ++k) {
        double* target;
        double label;
        if (k == 0) {
          target = cfg.order == LineOrder::kFirst ? vertex.row(dst)
                                                  : context.row(dst);
          label = 1.0;
        } else {
          const UserId n = static_cast<UserId>(noise_sampler.sample(rng));
          if (n == dst) continue;  // noise must not hit the positive target
          target = cfg.order == LineOrder::kFirst ? vertex.row(n)
                                                  : context.row(n);
          label = 0.0;
        }
        double x = 0.0;
        for (std::size_t d = 0; d < dim; ++d) x += u[d] * target[d];
        const double grad = (label - sigmoid(x)) * lr;
        for (std::size_t d = 0; d < dim; ++d) {
          u_delta[d] += grad * target[d];
          target[d] += grad * u[d];
        }
      }
      for (std::size_t d = 0; d < dim; ++d) u[d] += u_delta[d];
    }
  };

  if (cfg.workers <= 1) {
    worker(0, total_samples);
  } else {
    std::vector<std::thread> pool;
    const std::size_t per = total_samples / static_cast<std::size_t>(cfg.workers);
    for (int t = 0; t < cfg.workers; ++t) {
      const std::size_t samples =
          t == 0 ? total_samples - per * static_cast<std::size_t>(cfg.workers - 1)
                 : per;
      pool.emplace_back(worker, t, samples);
    }
    for (auto& th : pool) th.join();
  }
  return vertex;
}

}  // namespace umhi
