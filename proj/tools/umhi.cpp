// umhi: unfollow prediction toolkit.
//
// Subcommands: ingest | analyze | embed | pretrain | train | evaluate |
// predict | synth | report. Each one reads and writes only its declared
// artifact files under the output directory. Exit codes: 0 success, 1 usage
// error, 2 data error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <type_traits>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "umhi/config.hpp"
#include "umhi/eval_set.hpp"
#include "umhi/fusion.hpp"
#include "umhi/ingest.hpp"
#include "umhi/line.hpp"
#include "umhi/mf.hpp"
#include "umhi/netstats.hpp"
#include "umhi/pipeline.hpp"
#include "umhi/synth.hpp"
#include "umhi/walks.hpp"
#include "umhi/word2vec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct StageClock {
  std::map<std::string, double> seconds;

  template <typename F>
  auto time(const std::string& stage, F&& fn) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      seconds[stage] = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    } else {
      auto result = fn();
      seconds[stage] = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
      return result;
    }
  }
};

std::uint64_t file_checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw umhi::DataError("missing artifact: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string checksum_hex(const fs::path& path) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(file_checksum(path)));
  return buf;
}

void require_artifact(const fs::path& path) {
  if (!fs::exists(path))
    throw umhi::DataError("missing input artifact: " + path.string());
}

std::string default_out_dir() {
  const char* env = std::getenv("UMHI_OUT_DIR");
  return env ? env : "umhi-out";
}

// ---- dataset artifacts ----

struct Dataset {
  umhi::RelationData relations;
  umhi::TemporalGraph graph;
  umhi::EvalSet eval;
};

void write_dataset(const Dataset& data, const umhi::ExperimentConfig& cfg,
                   const fs::path& dir) {
  fs::create_directories(dir);

  std::ofstream users(dir / "users.tsv");
  for (umhi::UserId u = 0; u < data.relations.ids.size(); ++u)
    users << u << '\t' << data.relations.ids.name(u) << '\n';

  std::ofstream rel(dir / "relations.tsv");
  rel << "# follower_id\tfollowee_id\tfirst_seen_epoch\tdissolved_at_epoch\n";
  for (const auto& r : data.relations.records) {
    rel << data.relations.ids.name(r.follower) << '\t'
        << data.relations.ids.name(r.followee) << '\t' << r.first_seen << '\t';
    if (r.dissolved_at) rel << *r.dissolved_at;
    else rel << '-';
    rel << '\n';
  }

  std::ofstream posts(dir / "posts.jsonl");
  for (const auto& user_posts : data.graph.posts) {
    for (const auto& p : user_posts) {
      json obj{{"user", data.relations.ids.name(p.user)},
               {"time", p.time},
               {"text", p.text},
               {"upvotes", p.upvotes}};
      posts << obj.dump() << '\n';
    }
  }

  umhi::save_eval_set(data.eval, (dir / "evalset.tsv").string());

  json manifest{{"format_version", 1},
                {"num_users", data.graph.num_users},
                {"num_records", data.relations.records.size()},
                {"window", {cfg.window().t_start, cfg.window().t_end}},
                {"eval_items", data.eval.size()},
                {"eval_unfollow", data.eval.count_label(umhi::EdgeLabel::kUnfollow)},
                {"duplicate_relations", data.relations.counters.duplicate_relations},
                {"self_loops_rejected", data.relations.counters.self_loops_rejected},
                {"posts_dropped_window", data.relations.counters.posts_out_of_window},
                {"posts_dropped_empty", data.relations.counters.posts_empty_text},
                {"posts_unknown_user", data.relations.counters.posts_unknown_user}};
  std::ofstream mf(dir / "manifest.json");
  mf << manifest.dump(2) << '\n';
}

Dataset load_dataset(const fs::path& dir, const umhi::ExperimentConfig& cfg) {
  require_artifact(dir / "manifest.json");
  std::ifstream mf(dir / "manifest.json");
  json manifest = json::parse(mf, nullptr, false);
  if (manifest.is_discarded() || manifest.value("format_version", 0) != 1)
    throw umhi::DataError("dataset manifest format version mismatch: " +
                          (dir / "manifest.json").string());
  require_artifact(dir / "relations.tsv");
  require_artifact(dir / "posts.jsonl");
  require_artifact(dir / "evalset.tsv");

  Dataset data;
  const auto window = umhi::TimeWindow{manifest.at("window")[0].get<std::int64_t>(),
                                       manifest.at("window")[1].get<std::int64_t>()};
  data.relations = umhi::ingest_relations((dir / "relations.tsv").string(), window);
  auto posts = umhi::ingest_posts((dir / "posts.jsonl").string(), window,
                                  data.relations.ids, data.relations.counters);
  data.graph = umhi::build_temporal_graph(data.relations.records, std::move(posts),
                                          data.relations.ids.size(), window);
  data.eval = umhi::load_eval_set((dir / "evalset.tsv").string());
  (void)cfg;
  return data;
}

void write_metrics_files(const umhi::CrossValidationResult& cv, const fs::path& dir,
                         const std::string& method) {
  fs::create_directories(dir);
  json doc{{"format_version", 1}, {"method", method}, {"folds", json::array()}};
  for (const auto& f : cv.folds) doc["folds"].push_back(umhi::metrics_to_json(f));
  doc["mean"] = umhi::metrics_to_json(cv.mean);
  doc["stddev"] = {{"precision", cv.stddev.precision},
                   {"recall", cv.stddev.recall},
                   {"auc", cv.stddev.auc}};
  doc["leaked_labels"] = cv.leaked_labels;
  std::ofstream out(dir / "metrics.json");
  out << doc.dump(2) << '\n';

  std::ofstream tsv(dir / "metrics.tsv");
  tsv << "# umhi-metrics v1\tfold\tprecision\trecall\tauc\tn_pos\tn_neg\n";
  tsv.precision(10);
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    tsv << f << '\t' << cv.folds[f].precision << '\t' << cv.folds[f].recall << '\t'
        << cv.folds[f].auc << '\t' << cv.folds[f].n_pos << '\t' << cv.folds[f].n_neg
        << '\n';
  }
  tsv << "mean\t" << cv.mean.precision << '\t' << cv.mean.recall << '\t'
      << cv.mean.auc << '\t' << cv.mean.n_pos << '\t' << cv.mean.n_neg << '\n';
  tsv << "stddev\t" << cv.stddev.precision << '\t' << cv.stddev.recall << '\t'
      << cv.stddev.auc << "\t-\t-\n";
}

// HAN parameters as a versioned JSON container.
void save_han(const umhi::ContentEncoder& encoder, const fs::path& path) {
  const auto& d = encoder.dims();
  json doc{{"format_version", 1},
           {"dims",
            {{"vocab", d.vocab},
             {"word_dim", d.word_dim},
             {"hidden", d.hidden},
             {"att", d.att},
             {"t_max", d.t_max},
             {"l_max", d.l_max}}},
           {"params", encoder.params()}};
  std::ofstream out(path);
  if (!out) throw umhi::DataError("cannot write han model: " + path.string());
  out << doc.dump() << '\n';
}

umhi::ContentEncoder load_han(const fs::path& path) {
  require_artifact(path);
  std::ifstream in(path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || doc.value("format_version", 0) != 1)
    throw umhi::DataError("han model format version mismatch: " + path.string());
  umhi::HanDims d;
  d.vocab = doc.at("dims").at("vocab").get<std::size_t>();
  d.word_dim = doc.at("dims").at("word_dim").get<std::size_t>();
  d.hidden = doc.at("dims").at("hidden").get<std::size_t>();
  d.att = doc.at("dims").at("att").get<std::size_t>();
  d.t_max = doc.at("dims").at("t_max").get<std::size_t>();
  d.l_max = doc.at("dims").at("l_max").get<std::size_t>();
  umhi::ContentEncoder encoder(d);
  encoder.params() = doc.at("params").get<std::vector<double>>();
  if (encoder.params().size() != encoder.param_count())
    throw umhi::DataError("han model parameter count mismatch: " + path.string());
  return encoder;
}

// ---- subcommands ----

int cmd_synth(const umhi::ExperimentConfig& cfg, const std::string& out_dir) {
  const auto synth_cfg = cfg.synth();
  const auto data = umhi::generate_synthetic_benchmark(synth_cfg);
  umhi::write_synth_dataset(data, (fs::path(out_dir) / "dataset-raw").string());
  std::printf("synth: %zu users, %zu edges, %zu unfollows, %zu eval items -> %s\n",
              synth_cfg.n_users, data.truth.edges.size(), data.unfollows.count(),
              data.eval.size(), (fs::path(out_dir) / "dataset-raw").c_str());
  return 0;
}

int cmd_ingest(const umhi::ExperimentConfig& cfg, const std::string& out_dir,
               std::string relations_path, std::string posts_path) {
  const fs::path out(out_dir);
  if (relations_path.empty())
    relations_path = (out / "dataset-raw" / "relations.tsv").string();
  if (posts_path.empty()) posts_path = (out / "dataset-raw" / "posts.jsonl").string();
  require_artifact(relations_path);
  require_artifact(posts_path);

  Dataset data;
  const auto window = cfg.window();
  data.relations = umhi::ingest_relations(relations_path, window);
  auto posts = umhi::ingest_posts(posts_path, window, data.relations.ids,
                                  data.relations.counters);
  data.graph = umhi::build_temporal_graph(data.relations.records, std::move(posts),
                                          data.relations.ids.size(), window);

  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  auto balanced = umhi::build_balanced_eval_set(data.relations.records, data.graph.posts,
                                                umhi::substream_seed(seed, "evalset"),
                                                cfg.get_double("eval.hold_ratio"));
  if (balanced.hold_pool_exhausted)
    std::fprintf(stderr, "[umhi] ingest: hold pool smaller than target ratio\n");
  data.eval = std::move(balanced.eval);
  umhi::kfold_split(data.eval, static_cast<int>(cfg.get_int("eval.folds")),
                    umhi::substream_seed(seed, "kfold"));

  write_dataset(data, cfg, out / "dataset");
  std::printf("ingest: %zu users, %zu records, %zu eval items (%zu unfollow) -> %s\n",
              data.graph.num_users, data.relations.records.size(), data.eval.size(),
              data.eval.count_label(umhi::EdgeLabel::kUnfollow),
              (out / "dataset").c_str());
  return 0;
}

int cmd_analyze(const umhi::ExperimentConfig& cfg, const std::string& out_dir) {
  const fs::path out(out_dir);
  const auto data = load_dataset(out / "dataset", cfg);
  const fs::path dir = out / "analysis";
  fs::create_directories(dir);

  const auto pr = umhi::pagerank(data.graph, cfg.get_double("pagerank.damping"),
                                 cfg.get_double("pagerank.tol"),
                                 static_cast<int>(cfg.get_int("pagerank.max_iter")));
  if (!pr.converged)
    std::fprintf(stderr, "[umhi] analyze: pagerank hit max_iter before tol\n");
  const auto constraint = umhi::burt_constraint(data.graph);
  const auto roles = umhi::assign_roles(pr.scores, constraint);

  std::ofstream pr_out(dir / "pagerank.tsv");
  pr_out.precision(12);
  for (std::size_t u = 0; u < pr.scores.size(); ++u)
    pr_out << u << '\t' << pr.scores[u] << '\n';
  std::ofstream c_out(dir / "constraint.tsv");
  c_out.precision(12);
  for (std::size_t u = 0; u < constraint.size(); ++u)
    c_out << u << '\t' << constraint[u] << '\n';
  std::ofstream r_out(dir / "roles.tsv");
  for (std::size_t u = 0; u < roles.role.size(); ++u)
    r_out << u << '\t' << umhi::role_name(roles.role[u]) << '\n';

  const umhi::TfidfCorpus tfidf(data.graph.posts);
  const int bins = static_cast<int>(cfg.get_int("rou.bins"));
  const auto min_pairs = static_cast<std::size_t>(cfg.get_int("rou.min_bin_pairs"));
  umhi::save_rou_table(
      umhi::rou_curve(data.eval, umhi::RouCondition::kSimilarity, roles, tfidf,
                      data.graph, bins, min_pairs),
      (dir / "rou_similarity.tsv").string());
  umhi::save_rou_table(
      umhi::rou_curve(data.eval, umhi::RouCondition::kExposure, roles, tfidf,
                      data.graph, bins, min_pairs),
      (dir / "rou_exposure.tsv").string());

  std::printf("analyze: roles %zu leaders / %zu holes / %zu ordinary -> %s\n",
              roles.count(umhi::SocialRole::kOpnLdr),
              roles.count(umhi::SocialRole::kStrHole),
              roles.count(umhi::SocialRole::kOrdUsr), dir.c_str());
  return 0;
}

int cmd_embed(const umhi::ExperimentConfig& cfg, const std::string& out_dir) {
  const fs::path out(out_dir);
  const auto data = load_dataset(out / "dataset", cfg);
  const auto pcfg = cfg.pipeline();
  const fs::path dir = out / "embed";
  fs::create_directories(dir);

  json manifest{{"format_version", 1}};
  if (pcfg.mask.line1) {
    umhi::LineConfig lc = pcfg.line;
    lc.order = umhi::LineOrder::kFirst;
    lc.seed = umhi::substream_seed(pcfg.seed, "line1", 0);
    lc.workers = pcfg.workers;
    umhi::train_line(data.graph, lc).save((dir / "line1.emb").string());
    manifest["line1"] = "line1.emb";
  }
  if (pcfg.mask.line2) {
    umhi::LineConfig lc = pcfg.line;
    lc.order = umhi::LineOrder::kSecond;
    lc.seed = umhi::substream_seed(pcfg.seed, "line2", 0);
    lc.workers = pcfg.workers;
    umhi::train_line(data.graph, lc).save((dir / "line2.emb").string());
    manifest["line2"] = "line2.emb";
  }
  if (pcfg.mask.walk) {
    umhi::WalkConfig wc = pcfg.walk;
    wc.seed = umhi::substream_seed(pcfg.seed, "walk", 0);
    wc.workers = pcfg.workers;
    umhi::train_walk_embedding(data.graph, wc).save((dir / "walk.emb").string());
    manifest["walk"] = "walk.emb";
  }
  std::ofstream mf(dir / "embed.manifest.json");
  mf << manifest.dump(2) << '\n';
  std::printf("embed: wrote %s\n", dir.c_str());
  return 0;
}

int cmd_pretrain(const umhi::ExperimentConfig& cfg, const std::string& out_dir) {
  const fs::path out(out_dir);
  const auto data = load_dataset(out / "dataset", cfg);
  const auto pcfg = cfg.pipeline();
  const fs::path dir = out / "pretrain";
  fs::create_directories(dir);

  if (pcfg.mask.han) {
    umhi::Word2VecConfig wv_cfg = pcfg.word2vec;
    wv_cfg.seed = umhi::substream_seed(pcfg.seed, "word2vec", 0);
    wv_cfg.workers = pcfg.workers;
    const auto wv = umhi::train_word_vectors(data.graph.posts, wv_cfg);
    wv.table.save((dir / "words.emb").string());
    wv.vocab.save((dir / "vocab.txt").string());

    umhi::HanDims dims = pcfg.han_dims;
    dims.vocab = wv.vocab.size();
    dims.word_dim = wv.table.dim();
    umhi::ContentEncoder encoder(dims);
    encoder.init_random(umhi::substream_seed(pcfg.seed, "han-init", 0));
    encoder.set_word_embeddings(wv.table);

    std::vector<std::vector<umhi::TokenizedPost>> tokenized(data.graph.num_users);
    for (umhi::UserId u = 0; u < data.graph.num_users; ++u)
      tokenized[u] = umhi::tokenize_user_posts(data.graph.posts[u], wv.vocab, dims.t_max);

    umhi::HanPretrainConfig hc = pcfg.han_train;
    hc.seed = umhi::substream_seed(pcfg.seed, "han-pretrain", 0);
    const auto result =
        umhi::pretrain_content_encoder(encoder, tokenized, data.eval.items, hc);
    save_han(encoder, dir / "han.json");
    std::printf("pretrain: han best epoch %zu (val auc %.4f)\n", result.best_epoch,
                result.epoch_val_auc.empty() ? 0.0
                                             : result.epoch_val_auc[result.best_epoch]);
  }
  if (pcfg.mask.mf) {
    const auto r = umhi::build_unfollow_matrix(data.relations.records,
                                               data.graph.num_users);
    const auto r_train = umhi::mask_test_edges(r, data.eval);
    umhi::MfConfig mc = pcfg.mf;
    mc.seed = umhi::substream_seed(pcfg.seed, "mf", 0);
    const auto model = umhi::factorize_history(r_train, mc);
    umhi::save_factor_model(model, (dir / "mf_p.emb").string(),
                            (dir / "mf_q.emb").string(),
                            (dir / "mf.manifest.json").string(), mc.epochs, mc.seed);
    std::printf("pretrain: mf %zu positives factorized at k=%zu\n",
                r_train.count(), mc.k);
  }
  return 0;
}

struct LoadedComponents {
  umhi::TrainedComponents comp;
  umhi::ComponentMask mask;
  std::vector<std::pair<std::string, std::string>> checksums;
};

LoadedComponents load_components(const umhi::ExperimentConfig& cfg, const fs::path& out,
                                 const Dataset& data) {
  LoadedComponents lc;
  const auto pcfg = cfg.pipeline();
  lc.mask = pcfg.mask;
  auto note = [&](const fs::path& p) {
    lc.checksums.emplace_back(p.filename().string(), checksum_hex(p));
  };
  if (lc.mask.line1) {
    const auto p = out / "embed" / "line1.emb";
    require_artifact(p);
    lc.comp.line1 = umhi::EmbeddingTable::load(p.string());
    note(p);
  }
  if (lc.mask.line2) {
    const auto p = out / "embed" / "line2.emb";
    require_artifact(p);
    lc.comp.line2 = umhi::EmbeddingTable::load(p.string());
    note(p);
  }
  if (lc.mask.walk) {
    const auto p = out / "embed" / "walk.emb";
    require_artifact(p);
    lc.comp.walk = umhi::EmbeddingTable::load(p.string());
    note(p);
  }
  if (lc.mask.han) {
    const auto han_path = out / "pretrain" / "han.json";
    const auto vocab_path = out / "pretrain" / "vocab.txt";
    require_artifact(han_path);
    require_artifact(vocab_path);
    lc.comp.han = load_han(han_path);
    lc.comp.wv.vocab = umhi::Vocabulary::load(vocab_path.string());
    lc.comp.tokenized.resize(data.graph.num_users);
    for (umhi::UserId u = 0; u < data.graph.num_users; ++u)
      lc.comp.tokenized[u] = umhi::tokenize_user_posts(
          data.graph.posts[u], lc.comp.wv.vocab, lc.comp.han.dims().t_max);
    note(han_path);
  }
  if (lc.mask.mf) {
    const auto p = out / "pretrain" / "mf_p.emb";
    const auto q = out / "pretrain" / "mf_q.emb";
    const auto m = out / "pretrain" / "mf.manifest.json";
    require_artifact(p);
    require_artifact(q);
    require_artifact(m);
    lc.comp.mf = umhi::load_factor_model(p.string(), q.string(), m.string());
    note(p);
    note(q);
  }
  return lc;
}

int cmd_train(const umhi::ExperimentConfig& cfg, const std::string& out_dir) {
  const fs::path out(out_dir);
  const auto data = load_dataset(out / "dataset", cfg);
  const auto pcfg = cfg.pipeline();
  auto lc = load_components(cfg, out, data);
  auto source = lc.comp.source(lc.mask);

  umhi::FusionModel model(lc.mask, source.dim(), pcfg.fusion_hidden);
  model.mlp().init_random(umhi::substream_seed(pcfg.seed, "fusion-init", 0));
  umhi::FusionTrainConfig fc = pcfg.fusion;
  fc.seed = umhi::substream_seed(pcfg.seed, "fusion", 0);
  const auto result = umhi::train_fusion(model, source, data.eval.items, fc);

  const fs::path dir = out / "model";
  fs::create_directories(dir);
  model.save((dir / "fusion.json").string());
  json manifest{{"format_version", 1},
                {"components", json::object()},
                {"best_epoch", result.best_epoch}};
  for (const auto& [name, sum] : lc.checksums) manifest["components"][name] = sum;
  std::ofstream mf(dir / "manifest.json");
  mf << manifest.dump(2) << '\n';
  std::printf("train: fusion input width %zu, best epoch %zu -> %s\n", source.dim(),
              result.best_epoch, dir.c_str());
  return 0;
}

int cmd_predict(const umhi::ExperimentConfig& cfg, const std::string& out_dir,
                const std::string& pairs_path) {
  const fs::path out(out_dir);
  const auto data = load_dataset(out / "dataset", cfg);
  auto lc = load_components(cfg, out, data);
  const auto model_path = out / "model" / "fusion.json";
  require_artifact(model_path);
  const auto model = umhi::FusionModel::load(model_path.string());
  auto source = lc.comp.source(model.mask());

  std::vector<std::pair<umhi::UserId, umhi::UserId>> pairs;
  if (!pairs_path.empty()) {
    require_artifact(pairs_path);
    std::ifstream in(pairs_path);
    std::string a, b;
    while (in >> a >> b) {
      const auto ia = data.relations.ids.lookup(a);
      const auto ib = data.relations.ids.lookup(b);
      if (!ia || !ib)
        throw umhi::DataError("predict: unknown user in pair " + a + " " + b);
      pairs.emplace_back(*ia, *ib);
    }
  } else {
    for (const auto& item : data.eval.items)
      pairs.emplace_back(item.follower, item.followee);
  }

  const fs::path path = out / "predictions.tsv";
  std::ofstream preds(path);
  preds << "# umhi-predictions v1\tfollower\tfollowee\tscore\tlabel\n";
  preds.precision(10);
  for (const auto& [i, j] : pairs) {
    const auto rec = model.predict(source, i, j);
    preds << data.relations.ids.name(i) << '\t' << data.relations.ids.name(j) << '\t'
          << rec.score << '\t' << rec.label << '\n';
  }
  std::printf("predict: %zu pairs -> %s\n", pairs.size(), path.c_str());
  return 0;
}

int cmd_evaluate(const umhi::ExperimentConfig& cfg, const std::string& out_dir,
                 const std::vector<double>& robustness_fractions, bool verbose) {
  const fs::path out(out_dir);
  StageClock clock;
  const auto data = clock.time("load", [&] { return load_dataset(out / "dataset", cfg); });
  const auto pcfg = cfg.pipeline();
  const auto bundle = umhi::DatasetBundle::make(data.graph, data.relations.records,
                                                data.eval);
  const int folds = static_cast<int>(cfg.get_int("eval.folds"));

  const auto cv = clock.time("cross_validate", [&] {
    return umhi::cross_validate(bundle, pcfg, folds, verbose);
  });
  const fs::path dir = out / "eval";
  write_metrics_files(cv, dir, umhi::method_name(pcfg.method));

  if (!robustness_fractions.empty()) {
    const auto rows = clock.time("robustness", [&] {
      return umhi::robustness_sweep(bundle, pcfg, robustness_fractions, 0, verbose);
    });
    std::ofstream sweep(dir / "robustness.tsv");
    sweep << "# umhi-robustness v1\tfraction\tprecision\trecall\tauc\n";
    sweep.precision(10);
    for (const auto& row : rows) {
      sweep << row.fraction << '\t' << row.metrics.precision << '\t'
            << row.metrics.recall << '\t' << row.metrics.auc << '\n';
    }
  }

  json manifest{{"format_version", 1},
                {"config", cfg.values()},
                {"stage_seconds", clock.seconds},
                {"leaked_labels", cv.leaked_labels},
                {"metrics",
                 {{"mean_auc", cv.mean.auc},
                  {"mean_precision", cv.mean.precision},
                  {"mean_recall", cv.mean.recall}}}};
  for (const auto& name : {"relations.tsv", "posts.jsonl", "evalset.tsv"})
    manifest["dataset_checksums"][name] = checksum_hex(out / "dataset" / name);
  std::ofstream mf(dir / "run_manifest.json");
  mf << manifest.dump(2) << '\n';

  std::printf("evaluate[%s]: mean precision=%.4f recall=%.4f auc=%.4f (leaked=%zu)\n",
              umhi::method_name(pcfg.method), cv.mean.precision, cv.mean.recall,
              cv.mean.auc, cv.leaked_labels);
  return 0;
}

// Re-emits stored reports byte for byte, no recomputation.
int cmd_report(const std::string& out_dir) {
  const fs::path dir = fs::path(out_dir) / "eval";
  bool any = false;
  for (const auto& name : {"metrics.json", "metrics.tsv", "robustness.tsv"}) {
    const auto path = dir / name;
    if (!fs::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    std::cout << in.rdbuf();
    any = true;
  }
  if (!any)
    throw umhi::DataError("missing input artifact: " + (dir / "metrics.json").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"umhi: unfollow prediction pipeline"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string config_path;
  std::string out_dir = default_out_dir();
  std::vector<std::string> overrides;
  std::int64_t seed_flag = -1;
  int workers_flag = -1;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--out", out_dir, "output directory (env UMHI_OUT_DIR)");
  app.add_option("--seed", seed_flag, "master seed override");
  app.add_option("--workers", workers_flag, "worker threads override");
  app.add_option("--set", overrides, "config override key=value (repeatable)")
      ->take_all();

  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
  std::int64_t synth_users = -1;
  synth->add_option("--users", synth_users, "synthetic user count");

  auto* ingest = app.add_subcommand("ingest", "parse raw relations/posts, build eval set");
  std::string relations_path, posts_path;
  ingest->add_option("--relations", relations_path, "relations tsv path");
  ingest->add_option("--posts", posts_path, "posts jsonl path");

  app.add_subcommand("analyze", "centrality, roles and rou curves");
  app.add_subcommand("embed", "train LINE (and optional walk) embeddings");
  app.add_subcommand("pretrain", "train word vectors, HAN and MF components");
  app.add_subcommand("train", "train the fusion MLP on frozen components");

  auto* evaluate = app.add_subcommand("evaluate", "full k-fold cross validation");
  std::vector<double> robustness_fractions;
  bool verbose = false;
  evaluate->add_option("--robustness", robustness_fractions,
                       "training fractions for the robustness sweep");
  evaluate->add_flag("--verbose", verbose, "per-fold progress on stderr");

  auto* predict = app.add_subcommand("predict", "score pairs with the trained model");
  std::string pairs_path;
  predict->add_option("--pairs", pairs_path, "file of 'follower followee' lines");

  app.add_subcommand("report", "re-emit stored metric reports verbatim");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 1;
  }

  try {
    umhi::ExperimentConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw umhi::ArgumentError("--set expects key=value, got " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed_flag >= 0) cfg.set("seed", std::to_string(seed_flag));
    if (workers_flag >= 0) cfg.set("workers", std::to_string(workers_flag));
    if (synth_users > 0) cfg.set("synth.users", std::to_string(synth_users));

    if (app.got_subcommand("synth")) return cmd_synth(cfg, out_dir);
    if (app.got_subcommand("ingest"))
      return cmd_ingest(cfg, out_dir, relations_path, posts_path);
    if (app.got_subcommand("analyze")) return cmd_analyze(cfg, out_dir);
    if (app.got_subcommand("embed")) return cmd_embed(cfg, out_dir);
    if (app.got_subcommand("pretrain")) return cmd_pretrain(cfg, out_dir);
    if (app.got_subcommand("train")) return cmd_train(cfg, out_dir);
    if (app.got_subcommand("evaluate"))
      return cmd_evaluate(cfg, out_dir, robustness_fractions, verbose);
    if (app.got_subcommand("predict")) return cmd_predict(cfg, out_dir, pairs_path);
    if (app.got_subcommand("report")) return cmd_report(out_dir);
    std::fprintf(stderr, "no subcommand\n");
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
