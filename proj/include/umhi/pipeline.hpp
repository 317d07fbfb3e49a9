#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "umhi/baselines.hpp"
#include "umhi/eval_set.hpp"
#include "umhi/fusion.hpp"
#include "umhi/graph.hpp"
#include "umhi/han.hpp"
#include "umhi/han_pretrain.hpp"
#include "umhi/leakage.hpp"
#include "umhi/line.hpp"
#include "umhi/metrics.hpp"
#include "umhi/mf.hpp"
#include "umhi/netstats.hpp"
#include "umhi/walks.hpp"
#include "umhi/word2vec.hpp"

namespace umhi {

enum class Method { kUmhi, kDaLr, kSaLr };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kDaLr: return "da_lr";
    case Method::kSaLr: return "sa_lr";
    default: return "umhi";
  }
}

struct PipelineConfig {
  Method method = Method::kUmhi;
  ComponentMask mask;

  LineConfig line;  // order overridden per use
  WalkConfig walk;
  Word2VecConfig word2vec;
  HanDims han_dims;  // vocab filled from the word-vector table at run time
  HanPretrainConfig han_train;
  MfConfig mf;
  FusionTrainConfig fusion;
  std::vector<std::size_t> fusion_hidden{256, 64};

  double baseline_l2 = 1.0;
  std::size_t svd_rank = 50;
  int workers = 1;
  std::uint64_t seed = 42;
};

// One dataset prepared for experiments: graph, records, eval set with folds,
// and R_train masked with ALL of E (test labels never re-enter the matrix in
// any fold).
struct DatasetBundle {
  const TemporalGraph* graph = nullptr;
  const std::vector<RelationRecord>* records = nullptr;
  EvalSet eval;
  UnfollowMatrix r_masked;

  static DatasetBundle make(const TemporalGraph& graph,
                            const std::vector<RelationRecord>& records,
                            EvalSet eval) {
    DatasetBundle b;
    b.graph = &graph;
    b.records = &records;
    b.eval = std::move(eval);
    b.r_masked = mask_test_edges(build_unfollow_matrix(records, graph.num_users),
                                 b.eval);
    return b;
  }
};

struct TrainedComponents {
  WordVectors wv;
  ContentEncoder han;
  std::vector<std::vector<TokenizedPost>> tokenized;
  EmbeddingTable line1, line2, walk;
  FactorModel mf;

  FeatureSource source(const ComponentMask& mask) const {
    return FeatureSource(mask, mask.line1 ? &line1 : nullptr,
                         mask.line2 ? &line2 : nullptr,
                         mask.walk ? &walk : nullptr,
                         mask.han ? &han : nullptr,
                         mask.han ? &tokenized : nullptr,
                         mask.mf ? &mf : nullptr);
  }
};

// Stage I for one fold: every active component is retrained from its own
// seed substream. LINE/walk/word2vec see only the label-free snapshot; MF
// sees the fully masked matrix; HAN pretraining sees only this fold's
// training pairs.
inline TrainedComponents train_components(const DatasetBundle& data,
                                          const PipelineConfig& cfg, int fold,
                                          const std::vector<EvalItem>& train_pairs,
                                          LeakageAudit* audit = nullptr) {
  TrainedComponents out;
  const auto fold_u = static_cast<std::uint64_t>(fold);

  if (cfg.mask.line1) {
    LineConfig lc = cfg.line;
    lc.order = LineOrder::kFirst;
    lc.seed = substream_seed(cfg.seed, "line1", fold_u);
    lc.workers = cfg.workers;
    out.line1 = train_line(*data.graph, lc);
  }
  if (cfg.mask.line2) {
    LineConfig lc = cfg.line;
    lc.order = LineOrder::kSecond;
    lc.seed = substream_seed(cfg.seed, "line2", fold_u);
    lc.workers = cfg.workers;
    out.line2 = train_line(*data.graph, lc);
  }
  if (cfg.mask.walk) {
    WalkConfig wc = cfg.walk;
    wc.seed = substream_seed(cfg.seed, "walk", fold_u);
    wc.workers = cfg.workers;
    out.walk = train_walk_embedding(*data.graph, wc);
  }
  if (cfg.mask.han) {
    Word2VecConfig wv_cfg = cfg.word2vec;
    wv_cfg.seed = substream_seed(cfg.seed, "word2vec", fold_u);
    wv_cfg.workers = cfg.workers;
    out.wv = train_word_vectors(data.graph->posts, wv_cfg);

    HanDims dims = cfg.han_dims;
    dims.vocab = out.wv.vocab.size();
    dims.word_dim = out.wv.table.dim();
    out.han = ContentEncoder(dims);
    out.han.init_random(substream_seed(cfg.seed, "han-init", fold_u));
    out.han.set_word_embeddings(out.wv.table);

    out.tokenized.resize(data.graph->num_users);
    for (UserId u = 0; u < data.graph->num_users; ++u)
      out.tokenized[u] = tokenize_user_posts(data.graph->posts[u], out.wv.vocab,
                                             dims.t_max);

    HanPretrainConfig hc = cfg.han_train;
    hc.seed = substream_seed(cfg.seed, "han-pretrain", fold_u);
    pretrain_content_encoder(out.han, out.tokenized, train_pairs, hc, audit);
  }
  if (cfg.mask.mf) {
    if (audit) {
      // The positive entries of the masked matrix are the labels MF consumes.
      for (const auto& [i, j] : data.r_masked.entries) audit->record("mf", i, j);
    }
    MfConfig mc = cfg.mf;
    mc.seed = substream_seed(cfg.seed, "mf", fold_u);
    out.mf = factorize_history(data.r_masked, mc);
  }
  return out;
}

struct FoldRun {
  MetricsReport metrics;
  std::vector<PredictionRecord> predictions;
  std::size_t leaked_labels = 0;
};

namespace detail {

inline MetricsReport score_pairs(const FusionModel& model, const FeatureSource& source,
                                 const std::vector<EvalItem>& pairs,
                                 std::vector<PredictionRecord>* out_preds) {
  std::vector<ScoredLabel> scored;
  scored.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto pred = model.predict(source, p.follower, p.followee);
    scored.push_back({pred.score, p.label == EdgeLabel::kUnfollow ? 1 : 0});
    if (out_preds) out_preds->push_back(pred);
  }
  return compute_metrics(scored);
}

inline std::vector<UserId> train_users(const std::vector<EvalItem>& pairs) {
  std::vector<UserId> users;
  users.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    users.push_back(p.follower);
    users.push_back(p.followee);
  }
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  return users;
}

}  // namespace detail

// Stage II + evaluation for one fold of the UMHI pipeline (or an ablation
// given by cfg.mask).
inline FoldRun run_umhi_fold(const DatasetBundle& data, const PipelineConfig& cfg,
                             int fold, const std::vector<EvalItem>& train_pairs,
                             const std::vector<EvalItem>& test_pairs) {
  LeakageAudit audit;
  const auto components = train_components(data, cfg, fold, train_pairs, &audit);
  auto source = components.source(cfg.mask);

  FusionModel model(cfg.mask, source.dim(), cfg.fusion_hidden);
  model.mlp().init_random(substream_seed(cfg.seed, "fusion-init",
                                         static_cast<std::uint64_t>(fold)));
  FusionTrainConfig fc = cfg.fusion;
  fc.seed = substream_seed(cfg.seed, "fusion", static_cast<std::uint64_t>(fold));
  train_fusion(model, source, train_pairs, fc, &audit);

  FoldRun run;
  run.metrics = detail::score_pairs(model, source, test_pairs, &run.predictions);
  std::vector<std::pair<UserId, UserId>> test_keys;
  test_keys.reserve(test_pairs.size());
  for (const auto& p : test_pairs) test_keys.emplace_back(p.follower, p.followee);
  run.leaked_labels = audit.overlap_with(test_keys);
  return run;
}

// DA+LR / SA+LR: handcrafted features + logistic regression.
inline FoldRun run_baseline_fold(const DatasetBundle& data, const PipelineConfig& cfg,
                                 int fold, const std::vector<EvalItem>& train_pairs,
                                 const std::vector<EvalItem>& test_pairs) {
  LeakageAudit audit;
  const TfidfCorpus tfidf(data.graph->posts);
  const BaselineKind kind = cfg.method == Method::kDaLr
                                ? BaselineKind::kContentAction
                                : BaselineKind::kStructuralAction;

  TruncatedSvd svd;
  if (kind == BaselineKind::kContentAction) {
    const auto users = detail::train_users(train_pairs);
    std::vector<const TruncatedSvd::SparseDoc*> docs;
    docs.reserve(users.size());
    for (UserId u : users) docs.push_back(&tfidf.doc(u));
    svd.fit(docs, tfidf.vocab().size(), cfg.svd_rank,
            substream_seed(cfg.seed, "svd", static_cast<std::uint64_t>(fold)));
  }

  std::vector<std::vector<double>> x;
  std::vector<int> y;
  x.reserve(train_pairs.size());
  for (const auto& p : train_pairs) {
    audit.record("baseline-lr", p.follower, p.followee);
    x.push_back(extract_baseline_features(*data.graph, tfidf, &svd, kind,
                                          p.follower, p.followee));
    y.push_back(p.label == EdgeLabel::kUnfollow ? 1 : 0);
  }
  const auto lr = train_logistic(x, y, cfg.baseline_l2);

  FoldRun run;
  std::vector<ScoredLabel> scored;
  scored.reserve(test_pairs.size());
  for (const auto& p : test_pairs) {
    const double score = lr.predict(extract_baseline_features(
        *data.graph, tfidf, &svd, kind, p.follower, p.followee));
    scored.push_back({score, p.label == EdgeLabel::kUnfollow ? 1 : 0});
    run.predictions.push_back({p.follower, p.followee, score, score >= 0.5 ? 1 : 0});
  }
  run.metrics = compute_metrics(scored);
  std::vector<std::pair<UserId, UserId>> test_keys;
  for (const auto& p : test_pairs) test_keys.emplace_back(p.follower, p.followee);
  run.leaked_labels = audit.overlap_with(test_keys);
  return run;
}

struct CrossValidationResult {
  std::vector<MetricsReport> folds;
  MetricsReport mean;
  MetricsReport stddev;
  std::size_t leaked_labels = 0;

  static CrossValidationResult aggregate(std::vector<MetricsReport> folds,
                                         std::size_t leaked) {
    CrossValidationResult r;
    r.folds = std::move(folds);
    r.leaked_labels = leaked;
    const double n = static_cast<double>(r.folds.size());
    for (const auto& f : r.folds) {
      r.mean.precision += f.precision / n;
      r.mean.recall += f.recall / n;
      r.mean.auc += f.auc / n;
      r.mean.n_pos += f.n_pos;
      r.mean.n_neg += f.n_neg;
    }
    for (const auto& f : r.folds) {
      r.stddev.precision += (f.precision - r.mean.precision) * (f.precision - r.mean.precision) / n;
      r.stddev.recall += (f.recall - r.mean.recall) * (f.recall - r.mean.recall) / n;
      r.stddev.auc += (f.auc - r.mean.auc) * (f.auc - r.mean.auc) / n;
    }
    r.stddev.precision = std::sqrt(r.stddev.precision);
    r.stddev.recall = std::sqrt(r.stddev.recall);
    r.stddev.auc = std::sqrt(r.stddev.auc);
    return r;
  }
};

inline std::vector<EvalItem> fold_items(const EvalSet& e, int fold, bool invert) {
  std::vector<EvalItem> out;
  for (std::size_t k = 0; k < e.items.size(); ++k) {
    const bool in_fold = e.fold[k] == fold;
    if (in_fold != invert) out.push_back(e.items[k]);
  }
  return out;
}

// Five-fold cross validation: test on fold f, train on the rest; components
// retrained per fold; the MF matrix always masks all of E. Progress lines go
// to stderr when verbose.
inline CrossValidationResult cross_validate(const DatasetBundle& data,
                                            const PipelineConfig& cfg, int k = 5,
                                            bool verbose = false) {
  std::vector<MetricsReport> folds;
  std::size_t leaked = 0;
  for (int f = 0; f < k; ++f) {
    const auto train = fold_items(data.eval, f, /*invert=*/true);
    const auto test = fold_items(data.eval, f, /*invert=*/false);
    if (test.empty()) throw ArgumentError("cross_validate: empty fold; run kfold_split first");
    FoldRun run;
    try {
      run = cfg.method == Method::kUmhi
                ? run_umhi_fold(data, cfg, f, train, test)
                : run_baseline_fold(data, cfg, f, train, test);
    } catch (const std::exception& e) {
      throw DataError("fold " + std::to_string(f) + ": " + e.what());
    }
    if (verbose) {
      std::fprintf(stderr, "[umhi] %s fold %d: precision=%.4f recall=%.4f auc=%.4f leaked=%zu\n",
                   method_name(cfg.method), f, run.metrics.precision,
                   run.metrics.recall, run.metrics.auc, run.leaked_labels);
    }
    leaked += run.leaked_labels;
    folds.push_back(run.metrics);
  }
  return CrossValidationResult::aggregate(std::move(folds), leaked);
}

struct SweepRow {
  double fraction = 0.0;
  MetricsReport metrics;
};

// Training-size robustness: components are trained once on the full fold-0
// training pool, then only the fusion stage is refit per training fraction
// and evaluated on the fixed test fold. Fraction 1.0 reproduces the standard
// fold-0 run bit for bit.
inline std::vector<SweepRow> robustness_sweep(const DatasetBundle& data,
                                              const PipelineConfig& cfg,
                                              const std::vector<double>& fractions,
                                              int test_fold = 0,
                                              bool verbose = false) {
  if (cfg.method != Method::kUmhi)
    throw ArgumentError("robustness_sweep: only the umhi method is supported");
  const auto train_pool = fold_items(data.eval, test_fold, /*invert=*/true);
  const auto test = fold_items(data.eval, test_fold, /*invert=*/false);

  const auto components = train_components(data, cfg, test_fold, train_pool, nullptr);
  auto source = components.source(cfg.mask);

  std::vector<SweepRow> rows;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    const double frac = fractions[fi];
    std::vector<EvalItem> subset;
    if (frac >= 1.0) {
      subset = train_pool;
    } else {
      std::vector<EvalItem> shuffled = train_pool;
      Rng rng(substream_seed(cfg.seed, "sweep-subsample", fi));
      rng.shuffle(shuffled);
      const std::size_t keep = static_cast<std::size_t>(
          std::llround(frac * static_cast<double>(shuffled.size())));
      subset.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::size_t pos = 0, neg = 0;
    for (const auto& p : subset) (p.label == EdgeLabel::kUnfollow ? pos : neg)++;
    if (pos == 0 || neg == 0) {
      std::fprintf(stderr, "[umhi] sweep: fraction %.2f leaves a class empty; skipped\n", frac);
      continue;
    }

    FusionModel model(cfg.mask, source.dim(), cfg.fusion_hidden);
    model.mlp().init_random(substream_seed(cfg.seed, "fusion-init",
                                           static_cast<std::uint64_t>(test_fold)));
    FusionTrainConfig fc = cfg.fusion;
    fc.seed = substream_seed(cfg.seed, "fusion", static_cast<std::uint64_t>(test_fold));
    train_fusion(model, source, subset, fc, nullptr);

    SweepRow row;
    row.fraction = frac;
    row.metrics = detail::score_pairs(model, source, test, nullptr);
    if (verbose) {
      std::fprintf(stderr, "[umhi] sweep fraction %.2f: auc=%.4f precision=%.4f\n",
                   frac, row.metrics.auc, row.metrics.precision);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace umhi
