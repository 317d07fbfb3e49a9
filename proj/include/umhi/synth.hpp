#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "umhi/eval_set.hpp"
#include "umhi/graph.hpp"
#include "umhi/ingest.hpp"
#include "umhi/netstats.hpp"
#include "umhi/rng.hpp"

namespace umhi {

// Seeded generative model that plants the observed interaction mechanism at
// desk scale: degree-skewed communities, topic-mixture posts, a low-rank
// unfollow-history factor, and a label logit whose coefficients encode the
// directions of the similarity/exposure/role curves.
struct SynthConfig {
  std::size_t n_users = 2000;
  std::size_t n_communities = 8;
  std::size_t vocab_size = 1200;
  std::size_t n_topics = 10;
  double mean_out_degree = 25.0;
  double broker_fraction = 0.08;   // users with elevated cross-community links
  double cross_prob = 0.05;        // baseline cross-community link probability
  double broker_cross_prob = 0.5;
  double post_user_fraction = 0.75;
  double attractiveness_sigma = 1.0;  // lognormal in-degree skew

  // Label logit coefficients. Standardized condition values (z-scores) keep
  // them on one scale.
  double beta0 = -0.55;
  double beta_sim = -0.9;         // must be negative: rou falls with similarity
  double beta_expo = 0.15;        // main exposure effect (non-leaders)
  double beta_leader_sim = -0.8;  // leaders most sensitive to similarity
  double beta_leader_expo = -0.9; // leaders: monotone decreasing rou in exposure
  double beta_hole_sim = 0.55;    // structure holes: similarity is a weak factor
  double beta_spam = 2.2;         // followee spam-topic fraction raises unfollow
  double beta_same_comm = -0.5;   // same-community edges are stabler
  double beta_hist = 0.9;         // low-rank history term
  std::size_t hist_rank = 8;

  double hold_ratio = 5802.0 / 6790.0;
  std::int64_t t_start = 0;
  std::int64_t t_end = 30 * 24 * 3600;
  std::uint64_t seed = 7;

  void validate() const {
    if (n_users < 2 || n_communities == 0 || n_communities > n_users)
      throw ArgumentError("synth: inconsistent user/community counts");
    if (n_topics == 0 || vocab_size < n_topics)
      throw ArgumentError("synth: vocabulary smaller than topic count");
    if (hist_rank == 0) throw ArgumentError("synth: hist_rank must be positive");
    if (!(beta_sim < 0.0))
      throw ArgumentError("synth: beta_sim must be negative");
    if (std::abs(beta_sim + beta_leader_sim) <= std::abs(beta_sim))
      throw ArgumentError("synth: leader interaction must strengthen the similarity effect");
    if (!(beta_expo + beta_leader_expo < 0.0))
      throw ArgumentError("synth: leader exposure effect must be monotone negative");
  }
};

struct SynthEdgeTruth {
  UserId follower = 0, followee = 0;
  double sim = 0.0;     // measured tf-idf similarity
  double sim_z = 0.0;   // standardized over edges
  double expo_z = 0.0;
  double hist_z = 0.0;
  double prob = 0.0;    // sigmoid of the planted logit
  int label = 0;
};

struct SynthTruth {
  SynthConfig config;
  std::vector<int> community;
  std::vector<double> spam_fraction;  // realized spam-topic token share
  RoleAssignment roles;
  std::vector<SynthEdgeTruth> edges;
  double expected_label_rate = 0.0;  // mean of prob over edges
};

struct SynthData {
  TemporalGraph graph;
  std::vector<RelationRecord> records;
  UnfollowMatrix unfollows;
  EvalSet eval;  // folds unassigned
  SynthTruth truth;
};

namespace synth_detail {

inline void zscore(std::vector<double>& v) {
  if (v.empty()) return;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
  for (double& x : v) x = (x - mean) * inv;
}

}  // namespace synth_detail

inline SynthData generate_synthetic_benchmark(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_users;
  SynthData data;
  data.truth.config = cfg;

  // Communities, broker flags, attractiveness.
  Rng rng_graph(substream_seed(cfg.seed, "synth-graph"));
  std::vector<int> community(n);
  for (std::size_t u = 0; u < n; ++u)
    community[u] = static_cast<int>(rng_graph.uniform_index(cfg.n_communities));
  std::vector<char> broker(n, 0);
  std::vector<double> attract(n);
  for (std::size_t u = 0; u < n; ++u) {
    broker[u] = rng_graph.uniform() < cfg.broker_fraction ? 1 : 0;
    attract[u] = std::exp(cfg.attractiveness_sigma * rng_graph.gaussian());
  }
  std::vector<std::vector<UserId>> members(cfg.n_communities);
  for (std::size_t u = 0; u < n; ++u)
    members[static_cast<std::size_t>(community[u])].push_back(static_cast<UserId>(u));
  for (const auto& m : members) {
    if (m.size() < 2) throw ArgumentError("synth: a community has fewer than 2 members");
  }

  // Preferential attachment via ball urns: each accepted follow appends the
  // followee, so in-degree feeds back into attractiveness.
  std::vector<std::vector<UserId>> urn(cfg.n_communities);
  for (std::size_t c = 0; c < cfg.n_communities; ++c) {
    for (UserId v : members[c]) {
      const int copies = std::max(1, static_cast<int>(std::lround(attract[v] * 2.0)));
      for (int k = 0; k < copies; ++k) urn[c].push_back(v);
    }
  }

  std::vector<std::pair<UserId, UserId>> edge_list;
  std::unordered_set<std::uint64_t> edge_keys;
  auto key = [](UserId i, UserId j) {
    return (static_cast<std::uint64_t>(i) << 32) | j;
  };
  for (std::size_t u = 0; u < n; ++u) {
    const std::size_t degree =
        1 + rng_graph.poisson(std::max(0.0, cfg.mean_out_degree - 1.0));
    const double p_cross = broker[u] ? cfg.broker_cross_prob : cfg.cross_prob;
    for (std::size_t e = 0; e < degree; ++e) {
      UserId target = static_cast<UserId>(u);
      for (int attempt = 0; attempt < 30; ++attempt) {
        std::size_t c = static_cast<std::size_t>(community[u]);
        if (cfg.n_communities > 1 && rng_graph.uniform() < p_cross) {
          std::size_t other;
          do {
            other = rng_graph.uniform_index(cfg.n_communities);
          } while (other == c);
          c = other;
        }
        const UserId cand = urn[c][rng_graph.uniform_index(urn[c].size())];
        if (cand == static_cast<UserId>(u)) continue;
        if (edge_keys.count(key(static_cast<UserId>(u), cand))) continue;
        target = cand;
        break;
      }
      if (target == static_cast<UserId>(u)) continue;  // gave up on this slot
      edge_keys.insert(key(static_cast<UserId>(u), target));
      edge_list.emplace_back(static_cast<UserId>(u), target);
      urn[static_cast<std::size_t>(community[target])].push_back(target);
    }
  }

  // Topic machinery: community base mixtures plus per-user noise; topic 0 is
  // the spam topic, mixed in by a skewed per-user propensity.
  Rng rng_posts(substream_seed(cfg.seed, "synth-posts"));
  const std::size_t T = cfg.n_topics;
  std::vector<std::vector<double>> comm_topics(cfg.n_communities, std::vector<double>(T));
  for (auto& dist : comm_topics) {
    double z = 0.0;
    for (double& w : dist) {
      w = std::exp(2.0 * rng_posts.gaussian());
      z += w;
    }
    for (double& w : dist) w /= z;
  }
  std::vector<std::vector<double>> user_mix(n, std::vector<double>(T));
  std::vector<double> spam_propensity(n);
  for (std::size_t u = 0; u < n; ++u) {
    double z = 0.0;
    std::vector<double> noise(T);
    for (double& w : noise) {
      w = std::exp(rng_posts.gaussian());
      z += w;
    }
    const auto& base = comm_topics[static_cast<std::size_t>(community[u])];
    for (std::size_t t = 0; t < T; ++t)
      user_mix[u][t] = 0.55 * base[t] + 0.45 * noise[t] / z;
    const double uu = rng_posts.uniform();
    spam_propensity[u] = 0.6 * uu * uu * uu;  // most users low, a tail high
    for (std::size_t t = 0; t < T; ++t) user_mix[u][t] *= (1.0 - spam_propensity[u]);
    user_mix[u][0] += spam_propensity[u];
  }

  const std::size_t band = cfg.vocab_size / T;
  auto sample_word = [&](std::size_t topic, Rng& r) {
    const double x = r.uniform();
    const std::size_t offset = static_cast<std::size_t>(x * x * static_cast<double>(band));
    return topic * band + std::min(offset, band - 1);
  };

  std::vector<std::vector<Post>> posts(n);
  std::vector<double> spam_fraction(n, 0.0);
  const TimeWindow window{cfg.t_start, cfg.t_end};
  for (std::size_t u = 0; u < n; ++u) {
    if (rng_posts.uniform() >= cfg.post_user_fraction) continue;
    std::size_t n_posts = 1 + rng_posts.poisson(1.5);
    if (rng_posts.uniform() < 0.1) n_posts += rng_posts.poisson(8.0);
    std::size_t spam_tokens = 0, total_tokens = 0;
    for (std::size_t k = 0; k < n_posts; ++k) {
      Post p;
      p.user = static_cast<UserId>(u);
      p.time = cfg.t_start + static_cast<std::int64_t>(
                                 rng_posts.uniform() *
                                 static_cast<double>(cfg.t_end - cfg.t_start));
      p.upvotes = rng_posts.poisson(3.0 * attract[u]);
      const std::size_t len = 4 + rng_posts.poisson(4.0);
      std::string text;
      for (std::size_t w = 0; w < std::min<std::size_t>(len, 14); ++w) {
        double x = rng_posts.uniform();
        std::size_t topic = 0;
        double acc = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
          acc += user_mix[u][t];
          if (x < acc) {
            topic = t;
            break;
          }
        }
        if (!text.empty()) text += ' ';
        text += 'w' + std::to_string(sample_word(topic, rng_posts));
        spam_tokens += (topic == 0);
        ++total_tokens;
      }
      p.text = text;
      posts[u].push_back(std::move(p));
    }
    std::stable_sort(posts[u].begin(), posts[u].end(),
                     [](const Post& a, const Post& b) { return a.time < b.time; });
    if (total_tokens > 0)
      spam_fraction[u] = static_cast<double>(spam_tokens) / static_cast<double>(total_tokens);
  }

  // Graph snapshot + observable statistics the logit depends on.
  std::vector<RelationRecord> proto_records;
  proto_records.reserve(edge_list.size());
  for (const auto& [i, j] : edge_list) {
    RelationRecord rec;
    rec.follower = i;
    rec.followee = j;
    rec.first_seen = cfg.t_start - 86400;
    proto_records.push_back(rec);
  }
  data.graph = build_temporal_graph(proto_records, posts, n, window);

  const TfidfCorpus tfidf(data.graph.posts);
  const auto pr = pagerank(data.graph);
  const auto constraint = burt_constraint(data.graph);
  data.truth.roles = assign_roles(pr.scores, constraint);

  std::vector<double> expo_raw(n);
  for (std::size_t u = 0; u < n; ++u)
    expo_raw[u] = std::log1p(static_cast<double>(data.graph.posts[u].size()));
  std::vector<double> expo_z_user = expo_raw;
  synth_detail::zscore(expo_z_user);

  // Low-rank history factors.
  Rng rng_hist(substream_seed(cfg.seed, "synth-history"));
  const double inv_sqrt_rank = 1.0 / std::sqrt(static_cast<double>(cfg.hist_rank));
  std::vector<double> hu(n * cfg.hist_rank), hv(n * cfg.hist_rank);
  for (double& x : hu) x = rng_hist.gaussian() * inv_sqrt_rank;
  for (double& x : hv) x = rng_hist.gaussian() * inv_sqrt_rank;

  const std::size_t m = edge_list.size();
  std::vector<double> sim(m), sim_z(m), hist_z(m);
  for (std::size_t e = 0; e < m; ++e) {
    sim[e] = tfidf.similarity(edge_list[e].first, edge_list[e].second);
    double h = 0.0;
    const double* a = hu.data() + edge_list[e].first * cfg.hist_rank;
    const double* b = hv.data() + edge_list[e].second * cfg.hist_rank;
    for (std::size_t d = 0; d < cfg.hist_rank; ++d) h += a[d] * b[d];
    hist_z[e] = h;
  }
  sim_z = sim;
  synth_detail::zscore(sim_z);
  synth_detail::zscore(hist_z);

  // Labels from the planted logit.
  Rng rng_labels(substream_seed(cfg.seed, "synth-labels"));
  data.records = std::move(proto_records);
  data.truth.edges.resize(m);
  double prob_sum = 0.0;
  for (std::size_t e = 0; e < m; ++e) {
    const UserId i = edge_list[e].first, j = edge_list[e].second;
    const SocialRole role_j = data.truth.roles.role[j];
    double logit = cfg.beta0;
    double sim_coeff = cfg.beta_sim;
    if (role_j == SocialRole::kOpnLdr) sim_coeff += cfg.beta_leader_sim;
    if (role_j == SocialRole::kStrHole) sim_coeff += cfg.beta_hole_sim;
    logit += sim_coeff * sim_z[e];
    double expo_coeff = cfg.beta_expo;
    if (role_j == SocialRole::kOpnLdr) expo_coeff += cfg.beta_leader_expo;
    logit += expo_coeff * expo_z_user[j];
    logit += cfg.beta_spam * spam_fraction[j];
    if (community[i] == community[j]) logit += cfg.beta_same_comm;
    logit += cfg.beta_hist * hist_z[e];

    const double prob = 1.0 / (1.0 + std::exp(-logit));
    prob_sum += prob;
    const int label = rng_labels.uniform() < prob ? 1 : 0;
    if (label == 1) {
      data.records[e].label = EdgeLabel::kUnfollow;
      data.records[e].dissolved_at =
          cfg.t_start + static_cast<std::int64_t>(
                            rng_labels.uniform() *
                            static_cast<double>(cfg.t_end - cfg.t_start));
    } else {
      // keep the uniform draw count per edge stable across label outcomes
      (void)rng_labels.uniform();
    }
    data.truth.edges[e] = {i, j, sim[e], sim_z[e], expo_z_user[j], hist_z[e], prob, label};
  }
  data.truth.expected_label_rate = prob_sum / static_cast<double>(m);
  data.truth.community = std::move(community);
  data.truth.spam_fraction = std::move(spam_fraction);

  data.unfollows = build_unfollow_matrix(data.records, n);
  data.eval = build_balanced_eval_set(data.records, data.graph.posts,
                                      substream_seed(cfg.seed, "synth-eval"),
                                      cfg.hold_ratio)
                  .eval;
  return data;
}

// Emits the generated dataset in the ingest wire formats so the CLI pipeline
// can consume it like a crawl.
inline void write_synth_dataset(const SynthData& data, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::ofstream rel(fs::path(dir) / "relations.tsv");
  if (!rel) throw DataError("cannot write relations.tsv under " + dir);
  rel << "# follower_id\tfollowee_id\tfirst_seen_epoch\tdissolved_at_epoch\n";
  for (const auto& r : data.records) {
    rel << 'u' << r.follower << '\t' << 'u' << r.followee << '\t' << r.first_seen
        << '\t';
    if (r.dissolved_at) rel << *r.dissolved_at;
    else rel << '-';
    rel << '\n';
  }

  std::ofstream posts(fs::path(dir) / "posts.jsonl");
  if (!posts) throw DataError("cannot write posts.jsonl under " + dir);
  for (const auto& user_posts : data.graph.posts) {
    for (const auto& p : user_posts) {
      nlohmann::json obj{{"user", "u" + std::to_string(p.user)},
                         {"time", p.time},
                         {"text", p.text},
                         {"upvotes", p.upvotes}};
      posts << obj.dump() << '\n';
    }
  }

  nlohmann::json truth{{"format_version", 1},
                       {"n_users", data.truth.config.n_users},
                       {"seed", data.truth.config.seed},
                       {"expected_label_rate", data.truth.expected_label_rate},
                       {"n_edges", data.truth.edges.size()},
                       {"n_unfollow", data.unfollows.count()},
                       {"eval_items", data.eval.size()}};
  std::ofstream truth_out(fs::path(dir) / "truth.json");
  truth_out << truth.dump(2) << '\n';
}

}  // namespace umhi
