#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "umhi/synth.hpp"

#include "helpers.hpp"

using namespace umhi;

namespace {

SynthConfig small_config(std::uint64_t seed = 11) {
  SynthConfig cfg;
  cfg.n_users = 500;
  cfg.n_communities = 5;
  cfg.vocab_size = 400;
  cfg.n_topics = 8;
  cfg.mean_out_degree = 15;
  cfg.seed = seed;
  return cfg;
}

// Spearman rank correlation of two sequences.
double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
      return v[x] < v[y];
    });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += ra[k] / n;
    mb += rb[k] / n;
  }
  double cov = 0, va = 0, vb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cov += (ra[k] - ma) * (rb[k] - mb);
    va += (ra[k] - ma) * (ra[k] - ma);
    vb += (rb[k] - mb) * (rb[k] - mb);
  }
  return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("generator is bitwise deterministic per seed") {
  const auto a = generate_synthetic_benchmark(small_config());
  const auto b = generate_synthetic_benchmark(small_config());
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    CHECK(a.records[k].follower == b.records[k].follower);
    CHECK(a.records[k].followee == b.records[k].followee);
    CHECK(a.records[k].label == b.records[k].label);
  }
  CHECK(a.unfollows.entries == b.unfollows.entries);
  REQUIRE(a.eval.size() == b.eval.size());
  for (std::size_t k = 0; k < a.eval.size(); ++k) {
    CHECK(a.eval.items[k].follower == b.eval.items[k].follower);
    CHECK(a.eval.items[k].label == b.eval.items[k].label);
  }
  REQUIRE(a.graph.posts.size() == b.graph.posts.size());
  for (std::size_t u = 0; u < a.graph.posts.size(); ++u) {
    REQUIRE(a.graph.posts[u].size() == b.graph.posts[u].size());
    for (std::size_t p = 0; p < a.graph.posts[u].size(); ++p)
      CHECK(a.graph.posts[u][p].text == b.graph.posts[u][p].text);
  }

  const auto c = generate_synthetic_benchmark(small_config(12));
  CHECK(c.unfollows.entries != a.unfollows.entries);
}

TEST_CASE("inconsistent configs are rejected") {
  auto cfg = small_config();
  SECTION("zero communities") {
    cfg.n_communities = 0;
    CHECK_THROWS_AS(generate_synthetic_benchmark(cfg), ArgumentError);
  }
  SECTION("positive beta_sim") {
    cfg.beta_sim = 0.2;
    CHECK_THROWS_AS(generate_synthetic_benchmark(cfg), ArgumentError);
  }
  SECTION("leader interaction must strengthen similarity") {
    cfg.beta_leader_sim = 1.5;
    CHECK_THROWS_AS(generate_synthetic_benchmark(cfg), ArgumentError);
  }
  SECTION("leader exposure must be monotone negative") {
    cfg.beta_leader_expo = 0.5;
    cfg.beta_expo = 0.1;
    CHECK_THROWS_AS(generate_synthetic_benchmark(cfg), ArgumentError);
  }
}

TEST_CASE("realized label rate tracks the analytic expectation") {
  const auto data = generate_synthetic_benchmark(small_config(21));
  double realized = 0.0;
  for (const auto& e : data.truth.edges) realized += e.label;
  realized /= static_cast<double>(data.truth.edges.size());
  CHECK(realized == Catch::Approx(data.truth.expected_label_rate).margin(0.05));
  // the benchmark is usable: neither degenerate class
  CHECK(realized > 0.1);
  CHECK(realized < 0.9);
}

TEST_CASE("rou decreases across similarity quantiles (planted beta_sim < 0)") {
  const auto data = generate_synthetic_benchmark(small_config(31));

  // Bin edges over eval-pair similarity, bin means of rou.
  const TfidfCorpus tfidf(data.graph.posts);
  std::vector<std::pair<double, int>> pairs;
  for (const auto& item : data.eval.items) {
    pairs.emplace_back(tfidf.similarity(item.follower, item.followee),
                       item.label == EdgeLabel::kUnfollow ? 1 : 0);
  }
  std::sort(pairs.begin(), pairs.end());
  const std::size_t bins = 8;
  std::vector<double> bin_idx, bin_rou;
  const std::size_t per = pairs.size() / bins;
  for (std::size_t b = 0; b < bins; ++b) {
    std::size_t un = 0, n = 0;
    for (std::size_t k = b * per; k < std::min(pairs.size(), (b + 1) * per); ++k) {
      un += pairs[k].second;
      ++n;
    }
    if (n == 0) continue;
    bin_idx.push_back(static_cast<double>(b));
    bin_rou.push_back(static_cast<double>(un) / static_cast<double>(n));
  }
  CHECK(spearman(bin_idx, bin_rou) < 0.0);
}

TEST_CASE("leader rou is monotone non-increasing in exposure") {
  const auto data = generate_synthetic_benchmark(small_config(41));

  struct Obs {
    double expo;
    int label;
  };
  std::vector<Obs> leader_pairs;
  for (const auto& item : data.eval.items) {
    if (data.truth.roles.role[item.followee] != SocialRole::kOpnLdr) continue;
    leader_pairs.push_back({static_cast<double>(data.graph.posts[item.followee].size()),
                            item.label == EdgeLabel::kUnfollow ? 1 : 0});
  }
  REQUIRE(leader_pairs.size() > 200);
  std::sort(leader_pairs.begin(), leader_pairs.end(),
            [](const Obs& a, const Obs& b) { return a.expo < b.expo; });
  const std::size_t bins = 4;
  const std::size_t per = leader_pairs.size() / bins;
  std::vector<double> rate;
  for (std::size_t b = 0; b < bins; ++b) {
    std::size_t un = 0, n = 0;
    for (std::size_t k = b * per;
         k < (b + 1 == bins ? leader_pairs.size() : (b + 1) * per); ++k) {
      un += leader_pairs[k].label;
      ++n;
    }
    rate.push_back(static_cast<double>(un) / static_cast<double>(n));
  }
  // sampling tolerance: two-sigma of a proportion at the bin size
  const double tol = 2.0 * std::sqrt(0.25 / static_cast<double>(per));
  for (std::size_t b = 1; b < rate.size(); ++b) CHECK(rate[b] <= rate[b - 1] + tol);
  CHECK(rate.back() < rate.front());
}

TEST_CASE("rou_curve shows leaders most sensitive to similarity") {
  const auto data = generate_synthetic_benchmark(small_config(51));
  const TfidfCorpus tfidf(data.graph.posts);
  const auto table = rou_curve(data.eval, RouCondition::kSimilarity,
                               data.truth.roles, tfidf, data.graph, 6, 30);
  auto range_of = [&](SocialRole role) {
    double lo = 1.0, hi = 0.0;
    for (const auto& row : table.rows) {
      if (row.role != role) continue;
      lo = std::min(lo, row.rou_value);
      hi = std::max(hi, row.rou_value);
    }
    return hi - lo;
  };
  CHECK(range_of(SocialRole::kOpnLdr) > range_of(SocialRole::kStrHole));
}

TEST_CASE("eval set respects the posting filter and feeds R_train leftovers") {
  const auto data = generate_synthetic_benchmark(small_config(61));
  for (const auto& item : data.eval.items) {
    CHECK_FALSE(data.graph.posts[item.follower].empty());
    CHECK_FALSE(data.graph.posts[item.followee].empty());
  }
  // masking all of E must leave history signal for MF
  const auto masked = mask_test_edges(data.unfollows, data.eval);
  CHECK(masked.count() > 0);
  CHECK(masked.count() < data.unfollows.count());
}

TEST_CASE("synth dataset writes the ingest wire formats") {
  testutil::TempDir tmp("synthio");
  auto cfg = small_config(71);
  cfg.n_users = 120;
  cfg.mean_out_degree = 8;
  const auto data = generate_synthetic_benchmark(cfg);
  write_synth_dataset(data, tmp.path().string());

  const auto rel = ingest_relations((tmp.path() / "relations.tsv").string(),
                                    {cfg.t_start, cfg.t_end});
  CHECK(rel.records.size() == data.records.size());
  IngestCounters counters;
  const auto posts = ingest_posts((tmp.path() / "posts.jsonl").string(),
                                  {cfg.t_start, cfg.t_end}, rel.ids, counters);
  std::size_t total = 0, expected = 0;
  for (const auto& p : posts) total += p.size();
  for (const auto& p : data.graph.posts) expected += p.size();
  CHECK(total == expected);
  CHECK(counters.posts_unknown_user == 0);

  // label reconstruction through ingestion matches the generator
  const auto r = build_unfollow_matrix(rel.records, rel.ids.size());
  std::size_t matches = 0;
  for (const auto& [i, j] : data.unfollows.entries) {
    const auto ei = rel.ids.lookup("u" + std::to_string(i));
    const auto ej = rel.ids.lookup("u" + std::to_string(j));
    REQUIRE(ei);
    REQUIRE(ej);
    matches += r.contains(*ei, *ej);
  }
  CHECK(matches == data.unfollows.count());
}
