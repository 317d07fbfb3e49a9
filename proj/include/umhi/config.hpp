#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>

#include "umhi/graph.hpp"
#include "umhi/pipeline.hpp"
#include "umhi/synth.hpp"

namespace umhi {

// Flat "key = value" experiment configuration. Every key has a default equal
// to the published hyperparameters; unknown keys are rejected so typos fail
// loudly. Command-line flags override file values by calling set() after
// load_file().
class ExperimentConfig {
 public:
  ExperimentConfig() : values_(defaults()) {}

  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"seed", "42"},
        {"workers", "1"},
        {"window.start", "0"},
        {"window.end", "2592000"},
        {"eval.hold_ratio", "0.854491899852725"},  // the observed 5802:6790
        {"eval.folds", "5"},
        {"pagerank.damping", "0.85"},
        {"pagerank.tol", "1e-10"},
        {"pagerank.max_iter", "200"},
        {"rou.bins", "10"},
        {"rou.min_bin_pairs", "20"},
        {"method", "umhi"},
        {"components.line1", "true"},
        {"components.line2", "true"},
        {"components.walk", "false"},
        {"components.han", "true"},
        {"components.mf", "true"},
        {"line.dim", "100"},
        {"line.epochs", "100"},
        {"line.negatives", "5"},
        {"line.lr0", "0.025"},
        {"walk.dim", "100"},
        {"walk.walks_per_node", "10"},
        {"walk.walk_len", "40"},
        {"walk.window", "5"},
        {"walk.p", "1.0"},
        {"walk.q", "1.0"},
        {"walk.negatives", "5"},
        {"walk.lr0", "0.025"},
        {"word2vec.dim", "100"},
        {"word2vec.window", "5"},
        {"word2vec.negatives", "5"},
        {"word2vec.epochs", "5"},
        {"word2vec.lr0", "0.025"},
        {"han.hidden", "100"},
        {"han.att", "100"},
        {"han.t_max", "100"},
        {"han.l_max", "50"},
        {"han.epochs", "10"},
        {"han.lr", "0.001"},
        {"han.batch", "64"},
        {"han.pairs_per_epoch", "0"},
        {"han.train_word_embeddings", "true"},
        {"han.val_fraction", "0.1"},
        {"adam.mode", "paper"},  // paper: beta1=0.1 beta2=0.001; standard: 0.9/0.999
        {"mf.k", "64"},
        {"mf.lambda", "0.01"},
        {"mf.lr", "0.01"},
        {"mf.epochs", "100"},
        {"mf.full_sum_max_users", "5000"},
        {"mf.zeros_per_positive", "10"},
        {"fusion.hidden1", "256"},
        {"fusion.hidden2", "64"},
        {"fusion.epochs", "10"},
        {"fusion.lr", "0.001"},
        {"fusion.batch", "64"},
        {"fusion.val_fraction", "0.1"},
        {"baseline.l2", "1.0"},
        {"baseline.svd_rank", "50"},
        {"synth.users", "2000"},
        {"synth.communities", "8"},
        {"synth.vocab", "1200"},
        {"synth.topics", "10"},
        {"synth.mean_out_degree", "25"},
        {"synth.broker_fraction", "0.08"},
        {"synth.cross_prob", "0.05"},
        {"synth.broker_cross_prob", "0.5"},
        {"synth.post_user_fraction", "0.75"},
        {"synth.attractiveness_sigma", "1.0"},
        {"synth.beta0", "-0.55"},
        {"synth.beta_sim", "-0.9"},
        {"synth.beta_expo", "0.15"},
        {"synth.beta_leader_sim", "-0.8"},
        {"synth.beta_leader_expo", "-0.9"},
        {"synth.beta_hole_sim", "0.55"},
        {"synth.beta_spam", "2.2"},
        {"synth.beta_same_comm", "-0.5"},
        {"synth.beta_hist", "0.9"},
        {"synth.hist_rank", "8"},
    };
    return d;
  }

  void set(const std::string& key, const std::string& value) {
    if (!defaults().count(key)) throw ArgumentError("unknown config key: " + key);
    values_[key] = value;
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ParseError("expected key = value", line_no);
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (!defaults().count(key))
        throw ParseError("unknown config key: " + key, line_no);
      values_[key] = value;
    }
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ArgumentError("unknown config key: " + key);
    return it->second;
  }

  std::int64_t get_int(const std::string& key) const {
    try {
      return std::stoll(get(key));
    } catch (const std::exception&) {
      throw DataError("config key " + key + " is not an integer: " + get(key));
    }
  }

  double get_double(const std::string& key) const {
    try {
      return std::stod(get(key));
    } catch (const std::exception&) {
      throw DataError("config key " + key + " is not a number: " + get(key));
    }
  }

  bool get_bool(const std::string& key) const {
    const auto& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw DataError("config key " + key + " is not a boolean: " + v);
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  TimeWindow window() const {
    return {get_int("window.start"), get_int("window.end")};
  }

  AdamConfig adam() const {
    const auto& mode = get("adam.mode");
    if (mode == "paper") return AdamConfig::paper();
    if (mode == "standard") return AdamConfig::standard();
    throw DataError("adam.mode must be 'paper' or 'standard', got " + mode);
  }

  PipelineConfig pipeline() const {
    PipelineConfig p;
    const auto& m = get("method");
    if (m == "umhi") p.method = Method::kUmhi;
    else if (m == "da_lr") p.method = Method::kDaLr;
    else if (m == "sa_lr") p.method = Method::kSaLr;
    else throw DataError("method must be umhi|da_lr|sa_lr, got " + m);

    p.mask.line1 = get_bool("components.line1");
    p.mask.line2 = get_bool("components.line2");
    p.mask.walk = get_bool("components.walk");
    p.mask.han = get_bool("components.han");
    p.mask.mf = get_bool("components.mf");

    p.line.dim = static_cast<std::size_t>(get_int("line.dim"));
    p.line.epochs = static_cast<std::size_t>(get_int("line.epochs"));
    p.line.negatives = static_cast<std::size_t>(get_int("line.negatives"));
    p.line.lr0 = get_double("line.lr0");

    p.walk.dim = static_cast<std::size_t>(get_int("walk.dim"));
    p.walk.walks_per_node = static_cast<std::size_t>(get_int("walk.walks_per_node"));
    p.walk.walk_len = static_cast<std::size_t>(get_int("walk.walk_len"));
    p.walk.window = static_cast<std::size_t>(get_int("walk.window"));
    p.walk.p = get_double("walk.p");
    p.walk.q = get_double("walk.q");
    p.walk.negatives = static_cast<std::size_t>(get_int("walk.negatives"));
    p.walk.lr0 = get_double("walk.lr0");

    p.word2vec.dim = static_cast<std::size_t>(get_int("word2vec.dim"));
    p.word2vec.window = static_cast<std::size_t>(get_int("word2vec.window"));
    p.word2vec.negatives = static_cast<std::size_t>(get_int("word2vec.negatives"));
    p.word2vec.epochs = static_cast<std::size_t>(get_int("word2vec.epochs"));
    p.word2vec.lr0 = get_double("word2vec.lr0");

    p.han_dims.hidden = static_cast<std::size_t>(get_int("han.hidden"));
    p.han_dims.att = static_cast<std::size_t>(get_int("han.att"));
    p.han_dims.t_max = static_cast<std::size_t>(get_int("han.t_max"));
    p.han_dims.l_max = static_cast<std::size_t>(get_int("han.l_max"));
    p.han_train.epochs = static_cast<std::size_t>(get_int("han.epochs"));
    p.han_train.lr = get_double("han.lr");
    p.han_train.batch = static_cast<std::size_t>(get_int("han.batch"));
    p.han_train.pairs_per_epoch = static_cast<std::size_t>(get_int("han.pairs_per_epoch"));
    p.han_train.train_word_embeddings = get_bool("han.train_word_embeddings");
    p.han_train.val_fraction = get_double("han.val_fraction");
    p.han_train.adam = adam();

    p.mf.k = static_cast<std::size_t>(get_int("mf.k"));
    p.mf.lambda = get_double("mf.lambda");
    p.mf.lr = get_double("mf.lr");
    p.mf.epochs = static_cast<std::size_t>(get_int("mf.epochs"));
    p.mf.full_sum_max_users = static_cast<std::size_t>(get_int("mf.full_sum_max_users"));
    p.mf.zeros_per_positive = static_cast<std::size_t>(get_int("mf.zeros_per_positive"));

    p.fusion_hidden = {static_cast<std::size_t>(get_int("fusion.hidden1")),
                       static_cast<std::size_t>(get_int("fusion.hidden2"))};
    p.fusion.epochs = static_cast<std::size_t>(get_int("fusion.epochs"));
    p.fusion.lr = get_double("fusion.lr");
    p.fusion.batch = static_cast<std::size_t>(get_int("fusion.batch"));
    p.fusion.val_fraction = get_double("fusion.val_fraction");
    p.fusion.adam = adam();

    p.baseline_l2 = get_double("baseline.l2");
    p.svd_rank = static_cast<std::size_t>(get_int("baseline.svd_rank"));
    p.workers = static_cast<int>(get_int("workers"));
    p.seed = static_cast<std::uint64_t>(get_int("seed"));
    return p;
  }

  SynthConfig synth() const {
    SynthConfig s;
    s.n_users = static_cast<std::size_t>(get_int("synth.users"));
    s.n_communities = static_cast<std::size_t>(get_int("synth.communities"));
    s.vocab_size = static_cast<std::size_t>(get_int("synth.vocab"));
    s.n_topics = static_cast<std::size_t>(get_int("synth.topics"));
    s.mean_out_degree = get_double("synth.mean_out_degree");
    s.broker_fraction = get_double("synth.broker_fraction");
    s.cross_prob = get_double("synth.cross_prob");
    s.broker_cross_prob = get_double("synth.broker_cross_prob");
    s.post_user_fraction = get_double("synth.post_user_fraction");
    s.attractiveness_sigma = get_double("synth.attractiveness_sigma");
    s.beta0 = get_double("synth.beta0");
    s.beta_sim = get_double("synth.beta_sim");
    s.beta_expo = get_double("synth.beta_expo");
    s.beta_leader_sim = get_double("synth.beta_leader_sim");
    s.beta_leader_expo = get_double("synth.beta_leader_expo");
    s.beta_hole_sim = get_double("synth.beta_hole_sim");
    s.beta_spam = get_double("synth.beta_spam");
    s.beta_same_comm = get_double("synth.beta_same_comm");
    s.beta_hist = get_double("synth.beta_hist");
    s.hist_rank = static_cast<std::size_t>(get_int("synth.hist_rank"));
    s.hold_ratio = get_double("eval.hold_ratio");
    s.t_start = get_int("window.start");
    s.t_end = get_int("window.end");
    s.seed = static_cast<std::uint64_t>(get_int("seed"));
    return s;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace umhi
