#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "umhi/adam.hpp"
#include "umhi/graph.hpp"
#include "umhi/han.hpp"
#include "umhi/leakage.hpp"
#include "umhi/metrics.hpp"
#include "umhi/rng.hpp"

namespace umhi {

struct HanPretrainConfig {
  std::size_t epochs = 10;
  double lr = 0.001;
  std::size_t batch = 64;
  AdamConfig adam = AdamConfig::paper();
  // 0 = one pass over the training pool per epoch; otherwise caps the number
  // of pair samples per epoch (they are drawn with replacement anyway).
  std::size_t pairs_per_epoch = 0;
  double val_fraction = 0.1;
  bool train_word_embeddings = true;
  std::uint64_t seed = 1;
};

struct HanPretrainResult {
  std::vector<double> epoch_val_auc;
  double first_batch_loss = 0.0;
  std::size_t best_epoch = 0;
};

namespace detail {

// Stratified split: the first val_pos/val_neg items of a seeded shuffle of
// each class pool become validation.
struct PairSplit {
  std::vector<EvalItem> train_pos, train_neg, val;
};

inline PairSplit split_pairs(const std::vector<EvalItem>& pairs, double val_fraction,
                             Rng& rng) {
  PairSplit s;
  std::vector<EvalItem> pos, neg;
  for (const auto& p : pairs)
    (p.label == EdgeLabel::kUnfollow ? pos : neg).push_back(p);
  rng.shuffle(pos);
  rng.shuffle(neg);
  const std::size_t val_pos =
      static_cast<std::size_t>(val_fraction * static_cast<double>(pos.size()));
  const std::size_t val_neg =
      static_cast<std::size_t>(val_fraction * static_cast<double>(neg.size()));
  if (val_pos > 0 && val_neg > 0) {
    s.val.insert(s.val.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(val_pos));
    s.val.insert(s.val.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(val_neg));
    pos.erase(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(val_pos));
    neg.erase(neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(val_neg));
  }
  s.train_pos = std::move(pos);
  s.train_neg = std::move(neg);
  return s;
}

}  // namespace detail

// Pretrains the content encoder as a standalone edge classifier:
// sigmoid(w . (m_i ⊕ m_j) + b) with balanced mini-batches and
// adaptive-moment updates, keeping the epoch with the best validation AUC.
// user_posts holds each user's capped tokenized posts.
inline HanPretrainResult pretrain_content_encoder(
    ContentEncoder& encoder, const std::vector<std::vector<TokenizedPost>>& user_posts,
    const std::vector<EvalItem>& train_pairs, const HanPretrainConfig& cfg,
    LeakageAudit* audit = nullptr) {
  Rng rng(substream_seed(cfg.seed, "han-pretrain"));
  auto split = detail::split_pairs(train_pairs, cfg.val_fraction, rng);
  if (split.train_pos.empty() || split.train_neg.empty())
    throw ArgumentError("pretrain_content_encoder: a class pool is empty");

  if (audit) {
    for (const auto& p : train_pairs) audit->record("han-pretrain", p.follower, p.followee);
  }

  const std::size_t pool =
      cfg.pairs_per_epoch > 0 ? cfg.pairs_per_epoch
                              : split.train_pos.size() + split.train_neg.size();
  const std::size_t batches_per_epoch = std::max<std::size_t>(1, (pool + cfg.batch - 1) / cfg.batch);
  const std::size_t half = std::max<std::size_t>(1, cfg.batch / 2);

  AdamConfig adam_cfg = cfg.adam;
  adam_cfg.lr = cfg.lr;
  Adam adam(encoder.param_count(), adam_cfg);
  std::vector<double> grads(encoder.param_count(), 0.0);

  auto val_auc = [&]() {
    std::vector<ScoredLabel> scored;
    scored.reserve(split.val.size());
    for (const auto& p : split.val) {
      scored.push_back({encoder.score_pair(user_posts[p.follower], user_posts[p.followee]),
                        p.label == EdgeLabel::kUnfollow ? 1 : 0});
    }
    return auc_rank_sum(scored);
  };

  HanPretrainResult result;
  std::vector<double> best_params;
  double best_auc = -1.0;
  bool first_batch = true;

  const han_detail::Layout layout{encoder.dims()};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t bi = 0; bi < batches_per_epoch; ++bi) {
      std::fill(grads.begin(), grads.end(), 0.0);
      double batch_loss = 0.0;
      std::size_t batch_n = 0;
      for (std::size_t k = 0; k < 2 * half; ++k) {
        const bool positive = k < half;
        const auto& pick =
            positive ? split.train_pos[rng.uniform_index(split.train_pos.size())]
                     : split.train_neg[rng.uniform_index(split.train_neg.size())];
        const double label = positive ? 1.0 : 0.0;
        batch_loss += encoder.pair_loss(user_posts[pick.follower],
                                        user_posts[pick.followee], label);
        encoder.pair_backward(user_posts[pick.follower], user_posts[pick.followee],
                              label, grads);
        ++batch_n;
      }
      const double inv = 1.0 / static_cast<double>(batch_n);
      for (double& g : grads) g *= inv;
      if (!cfg.train_word_embeddings) {
        std::fill(grads.begin() + static_cast<std::ptrdiff_t>(layout.word_emb),
                  grads.begin() + static_cast<std::ptrdiff_t>(
                                      layout.word_emb +
                                      encoder.dims().vocab * encoder.dims().word_dim),
                  0.0);
      }
      if (first_batch) {
        result.first_batch_loss = batch_loss * inv;
        first_batch = false;
      }
      adam.step(encoder.params().data(), grads.data(), encoder.param_count());
    }
    if (!split.val.empty()) {
      const double auc = val_auc();
      result.epoch_val_auc.push_back(auc);
      if (auc > best_auc) {
        best_auc = auc;
        best_params = encoder.params();
        result.best_epoch = epoch;
      }
    }
  }
  if (!best_params.empty()) encoder.params() = best_params;
  return result;
}

}  // namespace umhi
