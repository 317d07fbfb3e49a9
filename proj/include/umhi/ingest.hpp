#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "umhi/graph.hpp"

namespace umhi {

struct IngestCounters {
  std::size_t duplicate_relations = 0;  // keep-last dedup events
  std::size_t self_loops_rejected = 0;
  std::size_t posts_out_of_window = 0;
  std::size_t posts_empty_text = 0;
  std::size_t posts_unknown_user = 0;
};

struct RelationData {
  std::vector<RelationRecord> records;
  IdMap ids;
  IngestCounters counters;
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

inline std::int64_t parse_epoch(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(s, &used);
    if (used != s.size()) throw ParseError("trailing characters in epoch field", line_no);
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("invalid epoch value '" + s + "'", line_no);
  }
}

}  // namespace detail

// Relations file: UTF-8, tab-separated columns follower_id, followee_id,
// first_seen_epoch, dissolved_at_epoch or "-". Lines beginning "#" ignored.
// Duplicate (follower, followee) pairs keep the last occurrence; self loops
// are rejected. Both are counted, not fatal.
inline RelationData ingest_relations(const std::string& path,
                                     const TimeWindow& window) {
  std::ifstream in(path);
  if (!in) throw DataError("missing relations file: " + path);

  RelationData out;
  // (follower, followee) -> index into out.records, for keep-last dedup.
  std::unordered_map<std::uint64_t, std::size_t> seen;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    const auto fields = detail::split_tabs(line);
    if (fields.size() < 4)
      throw ParseError("expected >= 4 tab-separated fields", line_no);

    RelationRecord rec;
    const std::string& follower_ext = fields[0];
    const std::string& followee_ext = fields[1];
    if (follower_ext == followee_ext) {
      ++out.counters.self_loops_rejected;
      continue;
    }
    rec.follower = out.ids.intern(follower_ext);
    rec.followee = out.ids.intern(followee_ext);
    rec.first_seen = detail::parse_epoch(fields[2], line_no);
    if (fields[3] != "-") {
      rec.dissolved_at = detail::parse_epoch(fields[3], line_no);
    }
    rec.label = (rec.dissolved_at && window.contains(*rec.dissolved_at))
                    ? EdgeLabel::kUnfollow
                    : EdgeLabel::kHold;

    const std::uint64_t key =
        (static_cast<std::uint64_t>(rec.follower) << 32) | rec.followee;
    auto it = seen.find(key);
    if (it != seen.end()) {
      out.records[it->second] = rec;
      ++out.counters.duplicate_relations;
    } else {
      seen.emplace(key, out.records.size());
      out.records.push_back(rec);
    }
  }
  return out;
}

// Posts file: one JSON object per line with keys user (string), time
// (integer), text (string), upvotes (integer). Posts outside the window or
// with empty text are dropped and counted; unknown users are dropped with a
// warning count.
inline std::vector<std::vector<Post>> ingest_posts(const std::string& path,
                                                   const TimeWindow& window,
                                                   const IdMap& ids,
                                                   IngestCounters& counters) {
  std::ifstream in(path);
  if (!in) throw DataError("missing posts file: " + path);

  std::vector<std::vector<Post>> posts(ids.size());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("user") ||
        !obj.contains("time") || !obj.contains("text") ||
        !obj.contains("upvotes")) {
      throw ParseError("invalid post JSON object", line_no);
    }

    Post p;
    try {
      const std::string user = obj.at("user").get<std::string>();
      p.time = obj.at("time").get<std::int64_t>();
      p.text = obj.at("text").get<std::string>();
      p.upvotes = obj.at("upvotes").get<std::uint32_t>();
      const auto id = ids.lookup(user);
      if (!id) {
        ++counters.posts_unknown_user;
        continue;
      }
      p.user = *id;
    } catch (const nlohmann::json::exception&) {
      throw ParseError("post JSON field has wrong type", line_no);
    }

    if (p.text.empty()) {
      ++counters.posts_empty_text;
      continue;
    }
    if (!window.contains(p.time)) {
      ++counters.posts_out_of_window;
      continue;
    }
    posts[p.user].push_back(std::move(p));
  }

  for (auto& list : posts) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Post& a, const Post& b) { return a.time < b.time; });
  }
  return posts;
}

// Follow-graph snapshot at t_start: an edge is present iff it was first seen
// at or before the window start. Edges that dissolve during the window still
// existed at t_start, so structural encoders never see label information.
inline TemporalGraph build_temporal_graph(const std::vector<RelationRecord>& records,
                                          std::vector<std::vector<Post>> posts,
                                          std::size_t num_users,
                                          const TimeWindow& window) {
  TemporalGraph g;
  g.num_users = num_users;
  g.window = window;
  g.out_adjacency.assign(num_users, {});
  g.in_adjacency.assign(num_users, {});
  if (posts.size() < num_users) posts.resize(num_users);
  g.posts = std::move(posts);

  for (const auto& rec : records) {
    if (rec.first_seen > window.t_start) continue;
    g.out_adjacency[rec.follower].push_back(rec.followee);
    g.in_adjacency[rec.followee].push_back(rec.follower);
  }
  for (auto& nbrs : g.out_adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  for (auto& nbrs : g.in_adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return g;
}

}  // namespace umhi
