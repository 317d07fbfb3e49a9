#pragma once

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "umhi/graph.hpp"
#include "umhi/rng.hpp"

namespace umhi {

// (i,j) is an entry iff some record i->j carries the unfollow label. All
// other observed edges are implicit zeros.
inline UnfollowMatrix build_unfollow_matrix(const std::vector<RelationRecord>& records,
                                            std::size_t num_users) {
  UnfollowMatrix r;
  r.num_users = num_users;
  for (const auto& rec : records) {
    if (rec.label == EdgeLabel::kUnfollow) r.entries.emplace_back(rec.follower, rec.followee);
  }
  r.finalize();
  return r;
}

// R_train = R \ E_test: every evaluation pair is forced to zero regardless of
// its label, so no training stage can read a test outcome out of the matrix.
inline UnfollowMatrix mask_test_edges(const UnfollowMatrix& r, const EvalSet& e_test) {
  UnfollowMatrix masked;
  masked.num_users = r.num_users;
  std::vector<std::pair<UserId, UserId>> drop;
  drop.reserve(e_test.items.size());
  for (const auto& item : e_test.items) drop.emplace_back(item.follower, item.followee);
  std::sort(drop.begin(), drop.end());
  for (const auto& entry : r.entries) {
    if (!std::binary_search(drop.begin(), drop.end(), entry)) masked.entries.push_back(entry);
  }
  return masked;
}

struct BalanceResult {
  EvalSet eval;
  bool hold_pool_exhausted = false;  // fewer holds available than targeted
};

// Balanced evaluation set: every unfollow edge whose endpoints both posted in
// the window, plus a seeded uniform sample (without replacement) of hold
// edges passing the same filter. The hold:unfollow target ratio defaults to
// the observed 5802:6790 rather than exactly 1:1.
inline BalanceResult build_balanced_eval_set(const std::vector<RelationRecord>& records,
                                             const std::vector<std::vector<Post>>& posts,
                                             std::uint64_t seed,
                                             double hold_ratio = 5802.0 / 6790.0) {
  if (hold_ratio < 0.0) throw ArgumentError("hold_ratio must be non-negative");
  auto has_posts = [&](UserId u) { return u < posts.size() && !posts[u].empty(); };

  std::vector<EvalItem> unfollows;
  std::vector<EvalItem> hold_pool;
  for (const auto& rec : records) {
    if (!has_posts(rec.follower) || !has_posts(rec.followee)) continue;
    EvalItem item{rec.follower, rec.followee, rec.label};
    (rec.label == EdgeLabel::kUnfollow ? unfollows : hold_pool).push_back(item);
  }

  const std::size_t target_holds =
      static_cast<std::size_t>(std::llround(hold_ratio * static_cast<double>(unfollows.size())));

  BalanceResult result;
  result.eval.items = unfollows;
  Rng rng(seed);
  if (target_holds >= hold_pool.size()) {
    result.hold_pool_exhausted = target_holds > hold_pool.size();
    result.eval.items.insert(result.eval.items.end(), hold_pool.begin(), hold_pool.end());
  } else {
    // Partial Fisher-Yates: the first target_holds slots are a uniform
    // without-replacement sample.
    for (std::size_t k = 0; k < target_holds; ++k) {
      const std::size_t j = k + rng.uniform_index(hold_pool.size() - k);
      std::swap(hold_pool[k], hold_pool[j]);
      result.eval.items.push_back(hold_pool[k]);
    }
  }
  result.eval.fold.assign(result.eval.items.size(), -1);
  return result;
}

// Seeded permutation partitioned into k folds whose sizes differ by at most
// one (the first |E| mod k folds take the extra item).
inline void kfold_split(EvalSet& e, int k, std::uint64_t seed) {
  if (k <= 1) throw ArgumentError("kfold_split: k must be > 1");
  const std::size_t n = e.items.size();
  if (n < static_cast<std::size_t>(k)) throw ArgumentError("kfold_split: |E| < k");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  e.fold.assign(n, -1);
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t t = 0; t < size; ++t) e.fold[order[pos++]] = f;
  }
}

inline void save_eval_set(const EvalSet& e, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write eval set: " + path);
  out << "# umhi-evalset v1\n";
  for (std::size_t k = 0; k < e.items.size(); ++k) {
    out << e.items[k].follower << '\t' << e.items[k].followee << '\t'
        << static_cast<int>(e.items[k].label) << '\t'
        << (k < e.fold.size() ? e.fold[k] : -1) << '\n';
  }
}

inline EvalSet load_eval_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing eval set: " + path);
  std::string header;
  std::getline(in, header);
  if (header.rfind("# umhi-evalset v1", 0) != 0)
    throw DataError("eval set format version mismatch in " + path);
  EvalSet e;
  UserId i, j;
  int label, fold;
  while (in >> i >> j >> label >> fold) {
    e.items.push_back({i, j, label == 1 ? EdgeLabel::kUnfollow : EdgeLabel::kHold});
    e.fold.push_back(fold);
  }
  return e;
}

}  // namespace umhi
