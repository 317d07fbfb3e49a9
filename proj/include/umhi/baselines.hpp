#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "umhi/graph.hpp"
#include "umhi/netstats.hpp"
#include "umhi/rng.hpp"

namespace umhi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class BaselineKind { kStructuralAction, kContentAction };

// Rank-r tf-idf document factorization by subspace iteration on the Gram
// matrix. Stands in for Doc2vec in the content baseline; fitted on training
// users only, then projects any document through V.
class TruncatedSvd {
 public:
  using SparseDoc = std::vector<std::pair<std::uint32_t, double>>;

  void fit(const std::vector<const SparseDoc*>& docs, std::size_t vocab_size,
           std::size_t rank, std::uint64_t seed, int max_iters = 300,
           double tol = 1e-12) {
    const std::size_t n = docs.size();
    rank_ = std::min({rank, n, vocab_size});
    if (rank_ == 0) throw ArgumentError("svd: empty fit problem");
    const std::size_t m = std::min(n, rank_ + 8);  // oversampled subspace

    MatrixXd gram(n, n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a; b < n; ++b) {
        const double dot = sparse_dot(*docs[a], *docs[b]);
        gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = dot;
        gram(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = dot;
      }
    }

    Rng rng(seed);
    MatrixXd q(n, m);
    for (Eigen::Index c = 0; c < q.cols(); ++c)
      for (Eigen::Index r = 0; r < q.rows(); ++r) q(r, c) = rng.gaussian();
    orthonormalize(q);

    VectorXd prev = VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (int it = 0; it < max_iters; ++it) {
      MatrixXd z = gram * q;
      orthonormalize(z);
      q = z;
      const MatrixXd small = q.transpose() * gram * q;
      const VectorXd diag = small.diagonal();
      if ((diag - prev).cwiseAbs().maxCoeff() <=
          tol * std::max(1.0, diag.cwiseAbs().maxCoeff()))
        break;
      prev = diag;
    }

    const MatrixXd small = q.transpose() * gram * q;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(small);
    // Ascending eigenvalues; take the top rank_ in descending order.
    u_.resize(n, static_cast<Eigen::Index>(rank_));
    sigma_.resize(static_cast<Eigen::Index>(rank_));
    for (std::size_t k = 0; k < rank_; ++k) {
      const Eigen::Index src = static_cast<Eigen::Index>(m - 1 - k);
      u_.col(static_cast<Eigen::Index>(k)) = q * eig.eigenvectors().col(src);
      sigma_(static_cast<Eigen::Index>(k)) =
          std::sqrt(std::max(0.0, eig.eigenvalues()(src)));
    }

    // V = A^T U Sigma^-1, assembled from the sparse rows.
    v_ = MatrixXd::Zero(static_cast<Eigen::Index>(vocab_size),
                        static_cast<Eigen::Index>(rank_));
    for (std::size_t d = 0; d < n; ++d) {
      for (const auto& [word, value] : *docs[d]) {
        for (std::size_t k = 0; k < rank_; ++k) {
          if (sigma_(static_cast<Eigen::Index>(k)) <= 0.0) continue;
          v_(word, static_cast<Eigen::Index>(k)) +=
              value * u_(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k)) /
              sigma_(static_cast<Eigen::Index>(k));
        }
      }
    }
  }

  std::size_t rank() const { return rank_; }
  const MatrixXd& u() const { return u_; }
  const VectorXd& sigma() const { return sigma_; }
  const MatrixXd& v() const { return v_; }

  VectorXd embed(const SparseDoc& doc) const {
    VectorXd z = VectorXd::Zero(static_cast<Eigen::Index>(rank_));
    for (const auto& [word, value] : doc) {
      if (static_cast<Eigen::Index>(word) >= v_.rows()) continue;
      z += value * v_.row(static_cast<Eigen::Index>(word)).transpose();
    }
    return z;
  }

 private:
  static double sparse_dot(const SparseDoc& a, const SparseDoc& b) {
    double dot = 0.0;
    std::size_t x = 0, y = 0;
    while (x < a.size() && y < b.size()) {
      if (a[x].first < b[y].first) ++x;
      else if (a[x].first > b[y].first) ++y;
      else dot += a[x++].second * b[y++].second;
    }
    return dot;
  }

  static void orthonormalize(MatrixXd& q) {
    Eigen::HouseholderQR<MatrixXd> qr(q);
    q = qr.householderQ() * MatrixXd::Identity(q.rows(), q.cols());
  }

  std::size_t rank_ = 0;
  MatrixXd u_;      // docs x r
  VectorXd sigma_;  // r
  MatrixXd v_;      // vocab x r
};

// Shared action features: post counts, exposure, tf-idf similarity, followee
// upvote statistics.
inline std::vector<double> action_features(const TemporalGraph& g,
                                           const TfidfCorpus& tfidf, UserId i,
                                           UserId j) {
  double mean_up = 0.0, max_up = 0.0;
  for (const auto& p : g.posts[j]) {
    mean_up += p.upvotes;
    max_up = std::max(max_up, static_cast<double>(p.upvotes));
  }
  if (!g.posts[j].empty()) mean_up /= static_cast<double>(g.posts[j].size());
  return {static_cast<double>(g.posts[i].size()),
          static_cast<double>(g.posts[j].size()),
          static_cast<double>(exposure(g.posts[j], g.window)),
          tfidf.similarity(i, j),
          mean_up,
          max_up};
}

inline std::vector<double> structural_features(const TemporalGraph& g, UserId i,
                                               UserId j) {
  auto sym = [&](UserId u) {
    std::vector<UserId> nbrs;
    std::merge(g.out_adjacency[u].begin(), g.out_adjacency[u].end(),
               g.in_adjacency[u].begin(), g.in_adjacency[u].end(),
               std::back_inserter(nbrs));
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    return nbrs;
  };
  const auto ni = sym(i);
  const auto nj = sym(j);
  std::vector<UserId> common;
  std::set_intersection(ni.begin(), ni.end(), nj.begin(), nj.end(),
                        std::back_inserter(common));
  const std::size_t uni = ni.size() + nj.size() - common.size();
  const double jaccard =
      uni == 0 ? 0.0 : static_cast<double>(common.size()) / static_cast<double>(uni);
  const bool reciprocal = g.has_edge(j, i);
  return {static_cast<double>(g.in_adjacency[i].size()),
          static_cast<double>(g.out_adjacency[i].size()),
          static_cast<double>(g.in_adjacency[j].size()),
          static_cast<double>(g.out_adjacency[j].size()),
          static_cast<double>(common.size()),
          reciprocal ? 1.0 : 0.0,
          jaccard};
}

// SA = structural + action; DA = SVD-reduced tf-idf document vectors of both
// endpoints + action.
inline std::vector<double> extract_baseline_features(const TemporalGraph& g,
                                                     const TfidfCorpus& tfidf,
                                                     const TruncatedSvd* svd,
                                                     BaselineKind kind, UserId i,
                                                     UserId j) {
  std::vector<double> f;
  if (kind == BaselineKind::kStructuralAction) {
    f = structural_features(g, i, j);
  } else {
    if (svd == nullptr)
      throw ArgumentError("content baseline requires a fitted SVD model");
    const VectorXd di = svd->embed(tfidf.doc(i));
    const VectorXd dj = svd->embed(tfidf.doc(j));
    f.assign(di.data(), di.data() + di.size());
    f.insert(f.end(), dj.data(), dj.data() + dj.size());
  }
  const auto act = action_features(g, tfidf, i, j);
  f.insert(f.end(), act.begin(), act.end());
  return f;
}

struct LogisticModel {
  VectorXd w;
  double b = 0.0;
  VectorXd mean, stdev;  // training standardization
  double final_grad_norm = 0.0;
  int iterations = 0;

  double predict(const std::vector<double>& features) const {
    double z = b;
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      const double x = (features[static_cast<std::size_t>(k)] - mean(k)) / stdev(k);
      z += w(k) * x;
    }
    return 1.0 / (1.0 + std::exp(-z));
  }
};

// L2-regularized logistic regression by gradient descent with backtracking
// line search, run to gradient norm < 1e-6 or 500 iterations. Features are
// standardized by the training mean/variance.
inline LogisticModel train_logistic(const std::vector<std::vector<double>>& features,
                                    const std::vector<int>& labels, double l2 = 1.0,
                                    double grad_tol = 1e-6, int max_iters = 500) {
  const std::size_t n = features.size();
  if (n == 0) throw ArgumentError("train_logistic: empty input");
  const std::size_t dim = features[0].size();
  bool has_pos = false, has_neg = false;
  for (int y : labels) (y == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw ArgumentError("train_logistic: both classes required");

  LogisticModel model;
  model.mean = VectorXd::Zero(static_cast<Eigen::Index>(dim));
  model.stdev = VectorXd::Ones(static_cast<Eigen::Index>(dim));
  MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < dim; ++c)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = features[r][c];
  model.mean = x.colwise().mean();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var =
        (x.col(c).array() - model.mean(c)).square().mean();
    if (var > 0.0) model.stdev(c) = std::sqrt(var);
    x.col(c) = (x.col(c).array() - model.mean(c)) / model.stdev(c);
  }
  VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) y(static_cast<Eigen::Index>(r)) = labels[r];

  // Objective: sum_i bce_i + (l2/2) |w|^2, bias unpenalized.
  VectorXd w = VectorXd::Zero(static_cast<Eigen::Index>(dim));
  double b = 0.0;
  auto objective = [&](const VectorXd& wv, double bv) {
    const VectorXd z = x * wv + VectorXd::Constant(x.rows(), bv);
    double total = 0.0;
    for (Eigen::Index r = 0; r < z.size(); ++r) {
      // log(1 + exp(-|z|)) formulation for stability
      const double zr = z(r);
      const double t = y(r) > 0.5 ? -zr : zr;
      total += t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    }
    return total + 0.5 * l2 * wv.squaredNorm();
  };

  double step = 1.0 / static_cast<double>(n);
  for (int it = 0; it < max_iters; ++it) {
    const VectorXd z = x * w + VectorXd::Constant(x.rows(), b);
    VectorXd residual(z.size());
    for (Eigen::Index r = 0; r < z.size(); ++r)
      residual(r) = 1.0 / (1.0 + std::exp(-z(r))) - y(r);
    VectorXd grad_w = x.transpose() * residual + l2 * w;
    const double grad_b = residual.sum();
    const double gnorm = std::sqrt(grad_w.squaredNorm() + grad_b * grad_b);
    model.final_grad_norm = gnorm;
    model.iterations = it;
    if (gnorm < grad_tol) break;

    const double f0 = objective(w, b);
    const double g2 = grad_w.squaredNorm() + grad_b * grad_b;
    double s = step * 4.0;  // warm start, then backtrack
    while (s > 1e-18 && objective(w - s * grad_w, b - s * grad_b) > f0 - 0.25 * s * g2)
      s *= 0.5;
    w -= s * grad_w;
    b -= s * grad_b;
    step = s;
  }
  model.w = w;
  model.b = b;
  return model;
}

}  // namespace umhi
