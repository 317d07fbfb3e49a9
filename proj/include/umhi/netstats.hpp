#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "umhi/graph.hpp"
#include "umhi/tokenize.hpp"

namespace umhi {

struct PageRankResult {
  std::vector<double> scores;
  bool converged = true;
  int iterations = 0;
};

// Power iteration with uniform teleport and uniform redistribution of
// dangling-node mass. Converged when the L1 change drops below tol.
inline PageRankResult pagerank(const TemporalGraph& g, double damping = 0.85,
                               double tol = 1e-10, int max_iter = 200) {
  const std::size_t n = g.num_users;
  if (n == 0) throw ArgumentError("pagerank: empty graph");

  PageRankResult result;
  std::vector<double> p(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n, 0.0);
  for (int iter = 0; iter < max_iter; ++iter) {
    double dangling = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (g.out_adjacency[i].empty()) dangling += p[i];
    }
    const double base = (1.0 - damping) / static_cast<double>(n) +
                        damping * dangling / static_cast<double>(n);
    std::fill(next.begin(), next.end(), base);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& nbrs = g.out_adjacency[i];
      if (nbrs.empty()) continue;
      const double share = damping * p[i] / static_cast<double>(nbrs.size());
      for (UserId j : nbrs) next[j] += share;
    }
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) delta += std::abs(next[i] - p[i]);
    p.swap(next);
    result.iterations = iter + 1;
    if (delta < tol) {
      result.scores = std::move(p);
      return result;
    }
  }
  result.converged = false;
  result.scores = std::move(p);
  return result;
}

// Burt's constraint on the symmetrized graph (a_ij = 1 if i->j or j->i):
//   C_i = sum_{j in N(i)} (p_ij + sum_{q in N(i), q != j} p_iq * p_qj)^2
// with p_ij = a_ij / sum_k a_ik. Isolated users get +inf so role assignment
// can exclude them from the structure-hole pool.
inline std::vector<double> burt_constraint(const TemporalGraph& g) {
  const std::size_t n = g.num_users;
  std::vector<std::vector<UserId>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    nbrs[i].reserve(g.out_adjacency[i].size() + g.in_adjacency[i].size());
    std::merge(g.out_adjacency[i].begin(), g.out_adjacency[i].end(),
               g.in_adjacency[i].begin(), g.in_adjacency[i].end(),
               std::back_inserter(nbrs[i]));
    nbrs[i].erase(std::unique(nbrs[i].begin(), nbrs[i].end()), nbrs[i].end());
  }

  auto tie = [&](UserId a, UserId b) {
    return std::binary_search(nbrs[a].begin(), nbrs[a].end(), b) ? 1.0 : 0.0;
  };

  std::vector<double> c(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const double deg_i = static_cast<double>(nbrs[i].size());
    if (deg_i == 0.0) continue;
    double total = 0.0;
    for (UserId j : nbrs[i]) {
      double indirect = 0.0;
      for (UserId q : nbrs[i]) {
        if (q == j) continue;
        const double deg_q = static_cast<double>(nbrs[q].size());
        indirect += (1.0 / deg_i) * (tie(q, j) / deg_q);
      }
      const double term = 1.0 / deg_i + indirect;
      total += term * term;
    }
    c[i] = total;
  }
  return c;
}

enum class SocialRole : std::uint8_t { kOrdUsr = 0, kOpnLdr = 1, kStrHole = 2 };

inline const char* role_name(SocialRole r) {
  switch (r) {
    case SocialRole::kOpnLdr: return "OpnLdr";
    case SocialRole::kStrHole: return "StrHole";
    default: return "OrdUsr";
  }
}

struct RoleAssignment {
  std::vector<SocialRole> role;

  std::size_t count(SocialRole r) const {
    std::size_t n = 0;
    for (auto x : role) n += (x == r);
    return n;
  }
};

// Top 5% PageRank -> opinion leaders; of the remaining users, the 5% with the
// lowest finite constraint -> structure holes; everyone else ordinary. Ties
// break toward the lower user id. Leadership takes precedence when a user
// qualifies for both.
inline RoleAssignment assign_roles(const std::vector<double>& pagerank_scores,
                                   const std::vector<double>& constraint_scores,
                                   double fraction = 0.05) {
  const std::size_t n = pagerank_scores.size();
  if (constraint_scores.size() != n)
    throw ArgumentError("assign_roles: score vectors differ in length");

  RoleAssignment out;
  out.role.assign(n, SocialRole::kOrdUsr);
  if (n == 0) return out;
  const std::size_t quota =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));

  std::vector<UserId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](UserId a, UserId b) {
    if (pagerank_scores[a] != pagerank_scores[b])
      return pagerank_scores[a] > pagerank_scores[b];
    return a < b;
  });
  for (std::size_t k = 0; k < quota && k < n; ++k)
    out.role[order[k]] = SocialRole::kOpnLdr;

  std::vector<UserId> rest;
  rest.reserve(n);
  for (UserId u = 0; u < n; ++u) {
    if (out.role[u] == SocialRole::kOpnLdr) continue;
    if (!std::isfinite(constraint_scores[u])) continue;  // isolated users
    rest.push_back(u);
  }
  std::sort(rest.begin(), rest.end(), [&](UserId a, UserId b) {
    if (constraint_scores[a] != constraint_scores[b])
      return constraint_scores[a] < constraint_scores[b];
    return a < b;
  });
  for (std::size_t k = 0; k < quota && k < rest.size(); ++k)
    out.role[rest[k]] = SocialRole::kStrHole;
  return out;
}

// Per-user tf-idf document model over each user's concatenated window posts.
// idf = ln((1+N)/(1+df)) + 1 with N the number of non-empty documents; term
// vectors are L2-normalized so similarity is a plain sparse dot product.
class TfidfCorpus {
 public:
  explicit TfidfCorpus(const std::vector<std::vector<Post>>& posts) {
    const std::size_t n = posts.size();
    std::vector<std::map<std::uint32_t, double>> tf(n);
    std::size_t non_empty = 0;
    for (std::size_t u = 0; u < n; ++u) {
      for (const auto& post : posts[u]) {
        for (const auto& tok : tokenize(post.text)) {
          tf[u][vocab_.intern(tok)] += 1.0;
        }
      }
      if (!tf[u].empty()) ++non_empty;
    }
    std::vector<std::size_t> df(vocab_.size(), 0);
    for (std::size_t u = 0; u < n; ++u) {
      for (const auto& [word, count] : tf[u]) ++df[word];
    }
    idf_.resize(vocab_.size());
    for (std::size_t w = 0; w < vocab_.size(); ++w) {
      idf_[w] = std::log((1.0 + static_cast<double>(non_empty)) /
                         (1.0 + static_cast<double>(df[w]))) +
                1.0;
    }
    docs_.resize(n);
    for (std::size_t u = 0; u < n; ++u) {
      double norm2 = 0.0;
      docs_[u].reserve(tf[u].size());
      for (const auto& [word, count] : tf[u]) {
        const double v = count * idf_[word];
        docs_[u].emplace_back(word, v);
        norm2 += v * v;
      }
      if (norm2 > 0.0) {
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& [word, v] : docs_[u]) v *= inv;
      }
    }
  }

  // Cosine of the L2-normalized tf-idf vectors; 0 if either document is
  // empty.
  double similarity(UserId i, UserId j) const {
    const auto& a = docs_.at(i);
    const auto& b = docs_.at(j);
    if (a.empty() || b.empty()) return 0.0;
    double dot = 0.0;
    std::size_t x = 0, y = 0;
    while (x < a.size() && y < b.size()) {
      if (a[x].first < b[y].first) ++x;
      else if (a[x].first > b[y].first) ++y;
      else dot += a[x++].second * b[y++].second;
    }
    return dot;
  }

  const std::vector<std::pair<std::uint32_t, double>>& doc(UserId u) const {
    return docs_.at(u);
  }
  double idf(std::uint32_t word) const { return idf_.at(word); }
  const Vocabulary& vocab() const { return vocab_; }

 private:
  Vocabulary vocab_;
  std::vector<double> idf_;
  // Per-user sparse normalized tf-idf vectors, sorted by word id.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> docs_;
};

// Followee activity: number of posts inside the (closed) window.
inline std::size_t exposure(const std::vector<Post>& followee_posts,
                            const TimeWindow& window) {
  std::size_t n = 0;
  for (const auto& p : followee_posts) n += window.contains(p.time);
  return n;
}

// rou = N_un / (N_ho + N_un) over a labeled subset.
inline double rou(std::size_t n_unfollow, std::size_t n_hold) {
  if (n_unfollow + n_hold == 0) throw ArgumentError("rou: empty subset");
  return static_cast<double>(n_unfollow) /
         static_cast<double>(n_unfollow + n_hold);
}

inline double rou(const std::vector<EdgeLabel>& labels) {
  std::size_t un = 0;
  for (auto l : labels) un += (l == EdgeLabel::kUnfollow);
  return rou(un, labels.size() - un);
}

enum class RouCondition { kSimilarity, kExposure };

struct RouRow {
  double condition_lo = 0.0;
  double condition_hi = 0.0;
  SocialRole role = SocialRole::kOrdUsr;
  std::size_t n_unfollow = 0;
  std::size_t n_hold = 0;
  double rou_value = 0.0;
};

struct RouTable {
  std::vector<RouRow> rows;

  std::size_t total_pairs() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.n_unfollow + r.n_hold;
    return n;
  }
};

namespace detail {

// Quantile edges over a value set; duplicates collapse so heavily tied
// distributions (exposure) do not produce empty degenerate bins.
inline std::vector<double> quantile_edges(std::vector<double> values, int bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> edges;
  for (int k = 1; k < bins; ++k) {
    const std::size_t idx = static_cast<std::size_t>(
        static_cast<double>(values.size()) * k / bins);
    edges.push_back(values[std::min(idx, values.size() - 1)]);
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

inline std::size_t bin_of(double v, const std::vector<double>& edges) {
  // Bin k covers (edges[k-1], edges[k]]; the first bin is unbounded below.
  return static_cast<std::size_t>(
      std::lower_bound(edges.begin(), edges.end(), v) - edges.begin());
}

}  // namespace detail

// Distribution of rou across quantile bins of the condition variable, one
// row per (bin, followee-role) group. Rows thinner than min_bin_pairs are
// merged into their left neighbor (or the first following row when at the
// start), per role, so every reported ratio has support.
inline RouTable rou_curve(const EvalSet& e, RouCondition condition,
                          const RoleAssignment& roles, const TfidfCorpus& tfidf,
                          const TemporalGraph& g, int bins = 10,
                          std::size_t min_bin_pairs = 20) {
  if (bins < 1) throw ArgumentError("rou_curve: bins must be >= 1");
  const std::size_t n_items = e.items.size();
  std::vector<double> value(n_items);
  for (std::size_t k = 0; k < n_items; ++k) {
    const auto& item = e.items[k];
    value[k] = condition == RouCondition::kSimilarity
                   ? tfidf.similarity(item.follower, item.followee)
                   : static_cast<double>(
                         exposure(g.posts[item.followee], g.window));
  }
  const auto edges = detail::quantile_edges(value, bins);
  const std::size_t n_bins = edges.size() + 1;

  struct Cell {
    std::size_t un = 0, ho = 0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
  };
  std::vector<std::vector<Cell>> cells(3, std::vector<Cell>(n_bins));
  for (std::size_t k = 0; k < n_items; ++k) {
    const auto& item = e.items[k];
    const std::size_t b = detail::bin_of(value[k], edges);
    Cell& cell = cells[static_cast<int>(roles.role[item.followee])][b];
    if (item.label == EdgeLabel::kUnfollow) ++cell.un;
    else ++cell.ho;
    cell.lo = std::min(cell.lo, value[k]);
    cell.hi = std::max(cell.hi, value[k]);
  }

  RouTable table;
  for (int r = 0; r < 3; ++r) {
    std::vector<RouRow> merged;
    Cell acc;
    for (std::size_t b = 0; b < n_bins; ++b) {
      const Cell& cell = cells[r][b];
      acc.un += cell.un;
      acc.ho += cell.ho;
      acc.lo = std::min(acc.lo, cell.lo);
      acc.hi = std::max(acc.hi, cell.hi);
      if (acc.un + acc.ho >= min_bin_pairs) {
        merged.push_back({acc.lo, acc.hi, static_cast<SocialRole>(r), acc.un,
                          acc.ho, rou(acc.un, acc.ho)});
        acc = Cell{};
      }
    }
    if (acc.un + acc.ho > 0) {
      if (!merged.empty()) {
        RouRow& last = merged.back();
        last.n_unfollow += acc.un;
        last.n_hold += acc.ho;
        last.condition_lo = std::min(last.condition_lo, acc.lo);
        last.condition_hi = std::max(last.condition_hi, acc.hi);
        last.rou_value = rou(last.n_unfollow, last.n_hold);
      } else {
        merged.push_back({acc.lo, acc.hi, static_cast<SocialRole>(r), acc.un,
                          acc.ho, rou(acc.un, acc.ho)});
      }
    }
    table.rows.insert(table.rows.end(), merged.begin(), merged.end());
  }
  return table;
}

// Tab-separated rows: condition_lo, condition_hi, role, n_unfollow, n_hold,
// rou. Consumed by external plotting.
inline void save_rou_table(const RouTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write rou table: " + path);
  out << "# umhi-rou v1\tcondition_lo\tcondition_hi\trole\tn_unfollow\tn_hold\trou\n";
  out.precision(10);
  for (const auto& r : table.rows) {
    out << r.condition_lo << '\t' << r.condition_hi << '\t' << role_name(r.role)
        << '\t' << r.n_unfollow << '\t' << r.n_hold << '\t' << r.rou_value
        << '\n';
  }
}

}  // namespace umhi
