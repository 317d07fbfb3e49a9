#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace umhi {

using UserId = std::uint32_t;

// External string ids are remapped to dense 0-based ids at ingest; all
// downstream modules index arrays by the dense id.
class IdMap {
 public:
  UserId intern(const std::string& external) {
    auto it = index_.find(external);
    if (it != index_.end()) return it->second;
    const UserId id = static_cast<UserId>(names_.size());
    index_.emplace(external, id);
    names_.push_back(external);
    return id;
  }

  std::optional<UserId> lookup(const std::string& external) const {
    auto it = index_.find(external);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(UserId id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::unordered_map<std::string, UserId> index_;
  std::vector<std::string> names_;
};

struct TimeWindow {
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  // Closed interval: posts at t_end are inside the window.
  bool contains(std::int64_t t) const { return t >= t_start && t <= t_end; }
};

enum class EdgeLabel : std::uint8_t { kHold = 0, kUnfollow = 1 };

struct RelationRecord {
  UserId follower = 0;
  UserId followee = 0;
  EdgeLabel label = EdgeLabel::kHold;
  std::int64_t first_seen = 0;
  std::optional<std::int64_t> dissolved_at;
};

struct Post {
  UserId user = 0;
  std::int64_t time = 0;
  std::string text;
  std::uint32_t upvotes = 0;
};

// Directed follow-graph snapshot at t_start plus the per-user post index over
// the observation window. Immutable after construction; safe for concurrent
// reads.
struct TemporalGraph {
  std::size_t num_users = 0;
  std::vector<std::vector<UserId>> out_adjacency;  // sorted, no duplicates
  std::vector<std::vector<UserId>> in_adjacency;   // sorted, no duplicates
  std::vector<std::vector<Post>> posts;            // chronological per user
  TimeWindow window;

  bool has_edge(UserId i, UserId j) const {
    const auto& nbrs = out_adjacency[i];
    return std::binary_search(nbrs.begin(), nbrs.end(), j);
  }

  std::size_t num_edges() const {
    std::size_t m = 0;
    for (const auto& nbrs : out_adjacency) m += nbrs.size();
    return m;
  }
};

// Sparse binary |V|x|V| matrix of dissolution events. Entries are the
// unfollow edges; every other observed pair is an implicit zero.
struct UnfollowMatrix {
  std::size_t num_users = 0;
  std::vector<std::pair<UserId, UserId>> entries;  // sorted, unique

  void finalize() {
    std::sort(entries.begin(), entries.end());
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
  }

  bool contains(UserId i, UserId j) const {
    return std::binary_search(entries.begin(), entries.end(),
                              std::make_pair(i, j));
  }

  std::size_t count() const { return entries.size(); }
};

struct EvalItem {
  UserId follower = 0;
  UserId followee = 0;
  EdgeLabel label = EdgeLabel::kHold;
};

// Labeled (follower, followee, label) pairs with fold assignments.
struct EvalSet {
  std::vector<EvalItem> items;
  std::vector<int> fold;  // per-item fold index, -1 until kfold_split ran

  std::size_t size() const { return items.size(); }

  std::size_t count_label(EdgeLabel l) const {
    std::size_t n = 0;
    for (const auto& it : items) n += (it.label == l);
    return n;
  }
};

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : DataError {
  ParseError(const std::string& what, std::size_t line)
      : DataError(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
  std::size_t line_number;
};

}  // namespace umhi
