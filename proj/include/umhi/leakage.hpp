#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "umhi/graph.hpp"

namespace umhi {

// Instrumentation hook: every training stage reports each labeled pair whose
// outcome it consumed. Cross-validation intersects the record with the test
// fold to certify that the count of leaked labels is exactly zero.
class LeakageAudit {
 public:
  void record(const std::string& stage, UserId follower, UserId followee) {
    consumed_[stage].insert(key(follower, followee));
    all_.insert(key(follower, followee));
  }

  std::size_t overlap_with(const std::vector<std::pair<UserId, UserId>>& test_pairs) const {
    std::size_t n = 0;
    for (const auto& [i, j] : test_pairs) n += all_.count(key(i, j));
    return n;
  }

  std::size_t total_consumed() const { return all_.size(); }

  std::vector<std::string> stages() const {
    std::vector<std::string> out;
    for (const auto& [stage, pairs] : consumed_) out.push_back(stage);
    return out;
  }

  std::size_t consumed_by(const std::string& stage) const {
    auto it = consumed_.find(stage);
    return it == consumed_.end() ? 0 : it->second.size();
  }

  void reset() {
    consumed_.clear();
    all_.clear();
  }

 private:
  static std::uint64_t key(UserId i, UserId j) {
    return (static_cast<std::uint64_t>(i) << 32) | j;
  }

  std::map<std::string, std::set<std::uint64_t>> consumed_;
  std::set<std::uint64_t> all_;
};

}  // namespace umhi
