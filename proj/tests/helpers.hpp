#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "umhi/graph.hpp"
#include "umhi/ingest.hpp"
#include "umhi/rng.hpp"

namespace testutil {

inline umhi::TemporalGraph make_graph(std::size_t n,
                                      const std::vector<std::pair<umhi::UserId, umhi::UserId>>& edges,
                                      umhi::TimeWindow window = {0, 100}) {
  std::vector<umhi::RelationRecord> records;
  for (const auto& [i, j] : edges) {
    umhi::RelationRecord r;
    r.follower = i;
    r.followee = j;
    r.first_seen = window.t_start - 1;
    records.push_back(r);
  }
  return umhi::build_temporal_graph(records, {}, n, window);
}

// Random directed graph for oracle sweeps.
inline umhi::TemporalGraph random_graph(std::size_t n, double p, std::uint64_t seed) {
  umhi::Rng rng(seed);
  std::vector<std::pair<umhi::UserId, umhi::UserId>> edges;
  for (umhi::UserId i = 0; i < n; ++i) {
    for (umhi::UserId j = 0; j < n; ++j) {
      if (i != j && rng.uniform() < p) edges.emplace_back(i, j);
    }
  }
  return make_graph(n, edges);
}

// Two-block SBM, undirected pairs materialized as both directed edges.
inline umhi::TemporalGraph sbm_two_block(std::size_t block, double p_in, double p_out,
                                         std::uint64_t seed) {
  umhi::Rng rng(seed);
  const std::size_t n = 2 * block;
  std::vector<std::pair<umhi::UserId, umhi::UserId>> edges;
  for (umhi::UserId i = 0; i < n; ++i) {
    for (umhi::UserId j = i + 1; j < n; ++j) {
      const bool same = (i < block) == (j < block);
      if (rng.uniform() < (same ? p_in : p_out)) {
        edges.emplace_back(i, j);
        edges.emplace_back(j, i);
      }
    }
  }
  return make_graph(n, edges);
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("umhi-test-" + tag + "-" + std::to_string(counter++) + "-" +
             std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name, const std::string& contents) const {
    const auto p = path_ / name;
    std::ofstream out(p);
    out << contents;
    return p.string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
