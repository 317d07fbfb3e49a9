#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "umhi/embedding.hpp"
#include "umhi/graph.hpp"
#include "umhi/rng.hpp"

namespace umhi {

// Follower factors P and followee factors Q for the masked unfollow history
// matrix; scores are plain dot products used as features downstream.
struct FactorModel {
  EmbeddingTable p;  // |V| x k follower latent vectors
  EmbeddingTable q;  // |V| x k followee latent vectors
  std::size_t k = 64;
  double lambda = 0.01;
  bool full_enumeration = true;
  std::vector<double> epoch_objective;  // filled when tracking is on
};

struct MfConfig {
  std::size_t k = 64;
  double lambda = 0.01;
  double lr = 0.01;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  // Above this user count the literal all-pairs sum is replaced by positives
  // plus a uniform zero sample at zeros_per_positive.
  std::size_t full_sum_max_users = 5000;
  std::size_t zeros_per_positive = 10;
  bool track_objective = false;
};

// One stochastic step on entry (i, j) of the regularized squared error
//   (r - p.q)^2 + lambda (|p|^2 + |q|^2).
inline void mf_sgd_step(double* p, double* q, double r, double lr,
                        double lambda, std::size_t k) {
  double pred = 0.0;
  for (std::size_t d = 0; d < k; ++d) pred += p[d] * q[d];
  const double err = r - pred;
  for (std::size_t d = 0; d < k; ++d) {
    const double pd = p[d];
    p[d] += lr * (err * q[d] - lambda * pd);
    q[d] += lr * (err * pd - lambda * q[d]);
  }
}

// Exact objective over the full entry set (only sensible at desk scale).
inline double mf_objective(const FactorModel& model, const UnfollowMatrix& r) {
  const std::size_t n = r.num_users;
  double total = 0.0;
  for (UserId i = 0; i < n; ++i) {
    const double* p = model.p.row(i);
    double p_norm2 = 0.0;
    for (std::size_t d = 0; d < model.k; ++d) p_norm2 += p[d] * p[d];
    for (UserId j = 0; j < n; ++j) {
      const double* q = model.q.row(j);
      double pred = 0.0, q_norm2 = 0.0;
      for (std::size_t d = 0; d < model.k; ++d) {
        pred += p[d] * q[d];
        q_norm2 += q[d] * q[d];
      }
      const double rij = r.contains(i, j) ? 1.0 : 0.0;
      const double err = rij - pred;
      total += err * err + model.lambda * (p_norm2 + q_norm2);
    }
  }
  return total;
}

// SGD factorization of R_train. At desk scale (|V| <= full_sum_max_users)
// every one of the |V|^2 entries is visited each epoch, the literal
// objective; beyond that the zero side is subsampled and the deviation is
// logged once.
inline FactorModel factorize_history(const UnfollowMatrix& r_train, const MfConfig& cfg) {
  const std::size_t n = r_train.num_users;
  FactorModel model;
  model.k = cfg.k;
  model.lambda = cfg.lambda;
  model.p = EmbeddingTable(n, cfg.k);
  model.q = EmbeddingTable(n, cfg.k);
  model.full_enumeration = n <= cfg.full_sum_max_users;

  Rng init_rng(substream_seed(cfg.seed, "mf-init"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.k));
  for (double& x : model.p.raw()) x = init_rng.uniform() * scale;
  for (double& x : model.q.raw()) x = init_rng.uniform() * scale;
  if (n == 0) return model;

  if (!model.full_enumeration) {
    std::fprintf(stderr,
                 "[umhi] mf: %zu users exceeds full-sum limit %zu; "
                 "sampling %zu zeros per positive instead of the literal "
                 "all-pairs sum\n",
                 n, cfg.full_sum_max_users, cfg.zeros_per_positive);
  }

  Rng rng(substream_seed(cfg.seed, "mf-train"));
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (model.full_enumeration) {
      for (UserId i = 0; i < n; ++i) {
        double* p = model.p.row(i);
        auto lo = std::lower_bound(r_train.entries.begin(), r_train.entries.end(),
                                   std::make_pair(i, UserId{0}));
        for (UserId j = 0; j < n; ++j) {
          double rij = 0.0;
          if (lo != r_train.entries.end() && lo->first == i && lo->second == j) {
            rij = 1.0;
            ++lo;
          }
          mf_sgd_step(p, model.q.row(j), rij, cfg.lr, cfg.lambda, cfg.k);
        }
      }
    } else {
      for (const auto& [i, j] : r_train.entries) {
        mf_sgd_step(model.p.row(i), model.q.row(j), 1.0, cfg.lr, cfg.lambda, cfg.k);
        for (std::size_t z = 0; z < cfg.zeros_per_positive; ++z) {
          UserId zi, zj;
          do {
            zi = static_cast<UserId>(rng.uniform_index(n));
            zj = static_cast<UserId>(rng.uniform_index(n));
          } while (r_train.contains(zi, zj));
          mf_sgd_step(model.p.row(zi), model.q.row(zj), 0.0, cfg.lr, cfg.lambda, cfg.k);
        }
      }
    }
    if (cfg.track_objective) model.epoch_objective.push_back(mf_objective(model, r_train));
  }
  return model;
}

inline double mf_score(const FactorModel& model, UserId i, UserId j) {
  if (i >= model.p.count() || j >= model.q.count())
    throw ArgumentError("mf_score: user id out of range");
  const double* p = model.p.row(i);
  const double* q = model.q.row(j);
  double s = 0.0;
  for (std::size_t d = 0; d < model.k; ++d) s += p[d] * q[d];
  return s;
}

inline void save_factor_model(const FactorModel& model, const std::string& p_path,
                              const std::string& q_path, const std::string& manifest_path,
                              std::size_t epochs, std::uint64_t seed) {
  model.p.save(p_path);
  model.q.save(q_path);
  nlohmann::json manifest{{"format_version", 1},
                          {"k", model.k},
                          {"lambda", model.lambda},
                          {"epochs", epochs},
                          {"seed", seed},
                          {"full_enumeration", model.full_enumeration}};
  std::ofstream out(manifest_path);
  if (!out) throw DataError("cannot write mf manifest: " + manifest_path);
  out << manifest.dump(2) << '\n';
}

inline FactorModel load_factor_model(const std::string& p_path, const std::string& q_path,
                                     const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("missing mf manifest: " + manifest_path);
  nlohmann::json manifest = nlohmann::json::parse(in, nullptr, false);
  if (manifest.is_discarded() || manifest.value("format_version", 0) != 1)
    throw DataError("mf manifest format version mismatch: " + manifest_path);
  FactorModel model;
  model.p = EmbeddingTable::load(p_path);
  model.q = EmbeddingTable::load(q_path);
  model.k = manifest.at("k").get<std::size_t>();
  model.lambda = manifest.at("lambda").get<double>();
  model.full_enumeration = manifest.value("full_enumeration", true);
  if (model.p.dim() != model.k || model.q.dim() != model.k)
    throw DataError("mf factor dimension mismatch with manifest");
  return model;
}

}  // namespace umhi
