#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "umhi/adam.hpp"
#include "umhi/graph.hpp"
#include "umhi/han.hpp"
#include "umhi/leakage.hpp"
#include "umhi/metrics.hpp"
#include "umhi/mf.hpp"
#include "umhi/rng.hpp"

namespace umhi {

// Which component vectors feed the fusion input d.
struct ComponentMask {
  bool line1 = true;
  bool line2 = true;
  bool walk = false;  // alternative structural source (Deepwalk/node2vec)
  bool han = true;
  bool mf = true;
};

// Assembles d = n_i ⊕ n_j ⊕ m_i ⊕ m_j ⊕ p_i ⊕ q_j from frozen component
// models, in exactly that order. Content vectors are cached per user once
// encoded; warm the cache before fanning prediction out across workers.
class FeatureSource {
 public:
  FeatureSource(ComponentMask mask, const EmbeddingTable* line1,
                const EmbeddingTable* line2, const EmbeddingTable* walk,
                const ContentEncoder* han,
                const std::vector<std::vector<TokenizedPost>>* user_posts,
                const FactorModel* mf)
      : mask_(mask), line1_(line1), line2_(line2), walk_(walk), han_(han),
        user_posts_(user_posts), mf_(mf) {
    require(mask_.line1, line1_ != nullptr, "line1");
    require(mask_.line2, line2_ != nullptr, "line2");
    require(mask_.walk, walk_ != nullptr, "walk");
    require(mask_.han, han_ != nullptr && user_posts_ != nullptr, "han");
    require(mask_.mf, mf_ != nullptr, "mf");
  }

  std::size_t structural_dim() const {
    std::size_t d = 0;
    if (mask_.line1) d += line1_->dim();
    if (mask_.line2) d += line2_->dim();
    if (mask_.walk) d += walk_->dim();
    return d;
  }

  std::size_t dim() const {
    std::size_t d = 2 * structural_dim();
    if (mask_.han) d += 2 * han_->dims().bi();
    if (mask_.mf) d += 2 * mf_->k;
    return d;
  }

  void features(UserId i, UserId j, double* out) const {
    std::size_t at = 0;
    write_structural(i, out, at);
    write_structural(j, out, at);
    if (mask_.han) {
      write_content(i, out, at);
      write_content(j, out, at);
    }
    if (mask_.mf) {
      check_user(i, mf_->p.count());
      check_user(j, mf_->q.count());
      const double* p = mf_->p.row(i);
      const double* q = mf_->q.row(j);
      for (std::size_t d = 0; d < mf_->k; ++d) out[at++] = p[d];
      for (std::size_t d = 0; d < mf_->k; ++d) out[at++] = q[d];
    }
  }

  VectorXd features(UserId i, UserId j) const {
    VectorXd d(static_cast<Eigen::Index>(dim()));
    features(i, j, d.data());
    return d;
  }

  void warm_content_cache(const std::vector<UserId>& users) const {
    if (!mask_.han) return;
    for (UserId u : users) content_vector(u);
  }

 private:
  static void require(bool active, bool present, const char* name) {
    if (active && !present)
      throw ArgumentError(std::string("missing component vector: ") + name);
  }

  static void check_user(UserId u, std::size_t count) {
    if (u >= count) throw ArgumentError("unknown user id " + std::to_string(u));
  }

  void write_structural(UserId u, double* out, std::size_t& at) const {
    if (mask_.line1) {
      check_user(u, line1_->count());
      const double* r = line1_->row(u);
      for (std::size_t d = 0; d < line1_->dim(); ++d) out[at++] = r[d];
    }
    if (mask_.line2) {
      check_user(u, line2_->count());
      const double* r = line2_->row(u);
      for (std::size_t d = 0; d < line2_->dim(); ++d) out[at++] = r[d];
    }
    if (mask_.walk) {
      check_user(u, walk_->count());
      const double* r = walk_->row(u);
      for (std::size_t d = 0; d < walk_->dim(); ++d) out[at++] = r[d];
    }
  }

  const VectorXd& content_vector(UserId u) const {
    auto it = m_cache_.find(u);
    if (it != m_cache_.end()) return it->second;
    check_user(u, user_posts_->size());
    if ((*user_posts_)[u].empty())
      throw DataError("content vector unavailable: user " + std::to_string(u) +
                      " has no usable post");
    return m_cache_.emplace(u, han_->encode_user((*user_posts_)[u])).first->second;
  }

  void write_content(UserId u, double* out, std::size_t& at) const {
    const VectorXd& m = content_vector(u);
    for (Eigen::Index d = 0; d < m.size(); ++d) out[at++] = m(d);
  }

  ComponentMask mask_;
  const EmbeddingTable* line1_;
  const EmbeddingTable* line2_;
  const EmbeddingTable* walk_;
  const ContentEncoder* han_;
  const std::vector<std::vector<TokenizedPost>>* user_posts_;
  const FactorModel* mf_;
  mutable std::unordered_map<UserId, VectorXd> m_cache_;
};

// Funnel MLP with rectified hidden layers and a sigmoid output unit, stored
// as one flat parameter vector.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::size_t input, std::vector<std::size_t> hidden)
      : sizes_{input} {
    sizes_.insert(sizes_.end(), hidden.begin(), hidden.end());
    sizes_.push_back(1);
    offsets_.clear();
    std::size_t at = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back({at, at + sizes_[l + 1] * sizes_[l]});
      at += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    params_.assign(at, 0.0);
  }

  void init_random(std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const double r = std::sqrt(6.0 / static_cast<double>(sizes_[l] + sizes_[l + 1]));
      EigenMap w = weight(params_, l);
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        for (Eigen::Index k = 0; k < w.rows(); ++k) w(k, c) = rng.uniform(-r, r);
      // biases stay zero
    }
  }

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // y = sigmoid(MLP(x)), clamped away from the endpoints so scores stay
  // strictly inside (0,1) even for saturating logits.
  double forward(const VectorXd& x) const {
    if (static_cast<std::size_t>(x.size()) != sizes_.front())
      throw ArgumentError("fusion_forward: input width mismatch");
    VectorXd a = x;
    auto& p = const_cast<std::vector<double>&>(params_);
    for (std::size_t l = 0; l < layer_count(); ++l) {
      EigenMap w = weight(p, l);
      EigenMap b = bias(p, l);
      VectorXd z = w * a + b.col(0);
      if (l + 1 < layer_count())
        a = z.array().max(0.0).matrix();
      else
        a = z;
    }
    const double y = 1.0 / (1.0 + std::exp(-a(0)));
    const double tiny = 1e-15;
    return std::min(1.0 - tiny, std::max(tiny, y));
  }

  // Gradient of the scalar output y with respect to the input vector.
  VectorXd input_gradient(const VectorXd& x) const {
    const std::size_t L = layer_count();
    auto& p = const_cast<std::vector<double>&>(params_);
    std::vector<VectorXd> acts(L + 1);
    acts[0] = x;
    for (std::size_t l = 0; l < L; ++l) {
      EigenMap w = weight(p, l);
      EigenMap b = bias(p, l);
      VectorXd z = w * acts[l] + b.col(0);
      acts[l + 1] = l + 1 < L ? z.array().max(0.0).matrix() : z;
    }
    const double y = 1.0 / (1.0 + std::exp(-acts[L](0)));
    VectorXd d = VectorXd::Constant(1, y * (1.0 - y));
    for (std::size_t l = L; l-- > 0;) {
      EigenMap w = weight(p, l);
      VectorXd back = w.transpose() * d;
      if (l > 0)
        d = (back.array() * (acts[l].array() > 0.0).cast<double>()).matrix();
      else
        d = back;
    }
    return d;
  }

  // Mean binary cross-entropy over a batch (columns of x).
  double batch_loss(const MatrixXd& x, const std::vector<double>& labels) const {
    double total = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      total += ContentEncoder::bce(forward(x.col(c)), labels[static_cast<std::size_t>(c)]);
    return total / static_cast<double>(x.cols());
  }

  // Accumulates the gradient of batch_loss into grads (same layout).
  void batch_backward(const MatrixXd& x, const std::vector<double>& labels,
                      std::vector<double>& grads) const {
    const std::size_t L = layer_count();
    auto& p = const_cast<std::vector<double>&>(params_);

    std::vector<MatrixXd> acts(L + 1);  // pre-activation inputs per layer
    acts[0] = x;
    for (std::size_t l = 0; l < L; ++l) {
      EigenMap w = weight(p, l);
      EigenMap b = bias(p, l);
      MatrixXd z = (w * acts[l]).colwise() + b.col(0);
      acts[l + 1] = l + 1 < L ? z.array().max(0.0).matrix() : z;
    }

    const double inv_b = 1.0 / static_cast<double>(x.cols());
    // dL/dlogit = (sigmoid(logit) - y) / B
    Eigen::RowVectorXd delta(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double yhat = 1.0 / (1.0 + std::exp(-acts[L](0, c)));
      delta(c) = (yhat - labels[static_cast<std::size_t>(c)]) * inv_b;
    }

    MatrixXd d = delta;
    for (std::size_t l = L; l-- > 0;) {
      EigenMap gw = weight(grads, l);
      EigenMap gb = bias(grads, l);
      gw.noalias() += d * acts[l].transpose();
      gb.col(0) += d.rowwise().sum();
      if (l > 0) {
        EigenMap w = weight(p, l);
        MatrixXd back = w.transpose() * d;
        d = (back.array() * (acts[l].array() > 0.0).cast<double>()).matrix();
      }
    }
  }

  bool operator==(const Mlp& o) const {
    return sizes_ == o.sizes_ && params_ == o.params_;
  }

 private:
  friend class FusionModel;

  EigenMap weight(std::vector<double>& p, std::size_t l) const {
    return EigenMap(p.data() + offsets_[l].first,
                    static_cast<Eigen::Index>(sizes_[l + 1]),
                    static_cast<Eigen::Index>(sizes_[l]));
  }
  EigenMap bias(std::vector<double>& p, std::size_t l) const {
    return EigenMap(p.data() + offsets_[l].second,
                    static_cast<Eigen::Index>(sizes_[l + 1]), 1);
  }

  std::vector<std::size_t> sizes_;
  std::vector<std::pair<std::size_t, std::size_t>> offsets_;
  std::vector<double> params_;
};

struct PredictionRecord {
  UserId follower = 0;
  UserId followee = 0;
  double score = 0.5;
  int label = 0;  // 1 iff score >= 0.5
};

// Frozen component references plus the trainable MLP head. The component
// blocks of d live on very different scales, so the trainer fits a per-
// dimension standardization on its training pairs; it is part of the fusion
// stage and is applied before the MLP on every forward.
class FusionModel {
 public:
  FusionModel() = default;
  FusionModel(ComponentMask mask, std::size_t input_dim,
              std::vector<std::size_t> hidden = {256, 64})
      : mask_(mask), mlp_(input_dim, std::move(hidden)) {}

  const ComponentMask& mask() const { return mask_; }
  Mlp& mlp() { return mlp_; }
  const Mlp& mlp() const { return mlp_; }

  void set_standardization(VectorXd mean, VectorXd scale) {
    feat_mean_ = std::move(mean);
    feat_scale_ = std::move(scale);
  }

  VectorXd standardize(const VectorXd& d) const {
    if (feat_mean_.size() == 0) return d;
    return ((d - feat_mean_).array() / feat_scale_.array()).matrix();
  }

  double forward(const VectorXd& d) const { return mlp_.forward(standardize(d)); }

  PredictionRecord predict(const FeatureSource& source, UserId i, UserId j) const {
    const double y = forward(source.features(i, j));
    return {i, j, y, y >= 0.5 ? 1 : 0};
  }

  void save(const std::string& path) const {
    nlohmann::json doc{{"format_version", 1},
                       {"mask",
                        {{"line1", mask_.line1},
                         {"line2", mask_.line2},
                         {"walk", mask_.walk},
                         {"han", mask_.han},
                         {"mf", mask_.mf}}},
                       {"sizes", mlp_.sizes()},
                       {"params", mlp_.params()},
                       {"feat_mean", std::vector<double>(feat_mean_.data(),
                                                         feat_mean_.data() + feat_mean_.size())},
                       {"feat_scale", std::vector<double>(feat_scale_.data(),
                                                          feat_scale_.data() + feat_scale_.size())}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write fusion model: " + path);
    out << doc.dump() << '\n';
  }

  static FusionModel load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing fusion model: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || doc.value("format_version", 0) != 1)
      throw DataError("fusion model format version mismatch: " + path);
    FusionModel model;
    model.mask_.line1 = doc.at("mask").at("line1").get<bool>();
    model.mask_.line2 = doc.at("mask").at("line2").get<bool>();
    model.mask_.walk = doc.at("mask").at("walk").get<bool>();
    model.mask_.han = doc.at("mask").at("han").get<bool>();
    model.mask_.mf = doc.at("mask").at("mf").get<bool>();
    const auto sizes = doc.at("sizes").get<std::vector<std::size_t>>();
    std::vector<std::size_t> hidden(sizes.begin() + 1, sizes.end() - 1);
    model.mlp_ = Mlp(sizes.front(), hidden);
    model.mlp_.params() = doc.at("params").get<std::vector<double>>();
    const auto mean = doc.at("feat_mean").get<std::vector<double>>();
    const auto scale = doc.at("feat_scale").get<std::vector<double>>();
    model.feat_mean_ = Eigen::Map<const VectorXd>(mean.data(),
                                                  static_cast<Eigen::Index>(mean.size()));
    model.feat_scale_ = Eigen::Map<const VectorXd>(scale.data(),
                                                   static_cast<Eigen::Index>(scale.size()));
    return model;
  }

 private:
  ComponentMask mask_;
  Mlp mlp_;
  VectorXd feat_mean_, feat_scale_;  // empty until trained
};

struct FusionTrainConfig {
  std::size_t epochs = 10;
  double lr = 0.001;
  std::size_t batch = 64;  // split 50/50 between classes
  AdamConfig adam = AdamConfig::paper();
  double val_fraction = 0.1;
  std::uint64_t seed = 1;
};

struct FusionTrainResult {
  std::vector<double> epoch_val_auc;
  double first_batch_loss = 0.0;
  std::size_t best_epoch = 0;
  // (n_pos, n_neg) of every batch, for the balance invariant.
  std::vector<std::pair<std::size_t, std::size_t>> batch_log;
};

// Stage II: only the MLP weights move; the components behind source stay
// frozen. Every mini-batch holds equal positive and negative counts sampled
// with replacement. Model selection by best validation AUC on a held-out
// fraction of the training pairs.
inline FusionTrainResult train_fusion(FusionModel& model, const FeatureSource& source,
                                      const std::vector<EvalItem>& train_pairs,
                                      const FusionTrainConfig& cfg,
                                      LeakageAudit* audit = nullptr) {
  Rng rng(substream_seed(cfg.seed, "fusion-train"));

  std::vector<EvalItem> pos, neg;
  for (const auto& p : train_pairs)
    (p.label == EdgeLabel::kUnfollow ? pos : neg).push_back(p);
  if (pos.empty() || neg.empty())
    throw ArgumentError("train_fusion: a class pool is empty");
  if (audit)
    for (const auto& p : train_pairs) audit->record("fusion-train", p.follower, p.followee);

  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<EvalItem> val;
  const std::size_t val_pos =
      static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(pos.size()));
  const std::size_t val_neg =
      static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(neg.size()));
  if (val_pos > 0 && val_neg > 0) {
    val.insert(val.end(), pos.end() - static_cast<std::ptrdiff_t>(val_pos), pos.end());
    val.insert(val.end(), neg.end() - static_cast<std::ptrdiff_t>(val_neg), neg.end());
    pos.resize(pos.size() - val_pos);
    neg.resize(neg.size() - val_neg);
  }

  const std::size_t half = std::max<std::size_t>(1, cfg.batch / 2);
  const std::size_t batches_per_epoch =
      std::max<std::size_t>(1, (pos.size() + neg.size() + cfg.batch - 1) / cfg.batch);
  const std::size_t in_dim = source.dim();

  // Per-dimension standardization fit on the training pairs.
  {
    VectorXd mean = VectorXd::Zero(static_cast<Eigen::Index>(in_dim));
    VectorXd m2 = VectorXd::Zero(static_cast<Eigen::Index>(in_dim));
    std::size_t count = 0;
    auto accumulate = [&](const std::vector<EvalItem>& items) {
      for (const auto& p : items) {
        const VectorXd d = source.features(p.follower, p.followee);
        mean += d;
        m2 += d.cwiseProduct(d);
        ++count;
      }
    };
    accumulate(pos);
    accumulate(neg);
    mean /= static_cast<double>(count);
    VectorXd var = m2 / static_cast<double>(count) - mean.cwiseProduct(mean);
    VectorXd scale(var.size());
    for (Eigen::Index k = 0; k < var.size(); ++k)
      scale(k) = var(k) > 1e-12 ? std::sqrt(var(k)) : 1.0;
    model.set_standardization(std::move(mean), std::move(scale));
  }

  AdamConfig adam_cfg = cfg.adam;
  adam_cfg.lr = cfg.lr;
  Adam adam(model.mlp().params().size(), adam_cfg);
  std::vector<double> grads(model.mlp().params().size(), 0.0);

  auto val_auc = [&]() {
    std::vector<ScoredLabel> scored;
    scored.reserve(val.size());
    for (const auto& p : val) {
      scored.push_back({model.forward(source.features(p.follower, p.followee)),
                        p.label == EdgeLabel::kUnfollow ? 1 : 0});
    }
    return auc_rank_sum(scored);
  };

  FusionTrainResult result;
  std::vector<double> best_params;
  double best_auc = -1.0;
  bool first_batch = true;

  MatrixXd batch_x(static_cast<Eigen::Index>(in_dim),
                   static_cast<Eigen::Index>(2 * half));
  std::vector<double> batch_y(2 * half, 0.0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t bi = 0; bi < batches_per_epoch; ++bi) {
      std::size_t n_pos = 0, n_neg = 0;
      for (std::size_t k = 0; k < 2 * half; ++k) {
        const bool positive = k < half;
        const auto& pick = positive ? pos[rng.uniform_index(pos.size())]
                                    : neg[rng.uniform_index(neg.size())];
        batch_x.col(static_cast<Eigen::Index>(k)) =
            model.standardize(source.features(pick.follower, pick.followee));
        batch_y[k] = positive ? 1.0 : 0.0;
        (positive ? n_pos : n_neg)++;
      }
      result.batch_log.emplace_back(n_pos, n_neg);
      if (first_batch) {
        result.first_batch_loss = model.mlp().batch_loss(batch_x, batch_y);
        first_batch = false;
      }
      std::fill(grads.begin(), grads.end(), 0.0);
      model.mlp().batch_backward(batch_x, batch_y, grads);
      adam.step(model.mlp().params().data(), grads.data(), grads.size());
    }
    if (!val.empty()) {
      const double auc = val_auc();
      result.epoch_val_auc.push_back(auc);
      if (auc > best_auc) {
        best_auc = auc;
        best_params = model.mlp().params();
        result.best_epoch = epoch;
      }
    }
  }
  if (!best_params.empty()) model.mlp().params() = best_params;
  return result;
}

}  // namespace umhi
