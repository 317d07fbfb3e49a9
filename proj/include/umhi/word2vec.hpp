#pragma once

#include <cmath>
#include <vector>

#include "umhi/embedding.hpp"
#include "umhi/tokenize.hpp"
#include "umhi/walks.hpp"

namespace umhi {

struct Word2VecConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr0 = 0.025;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct WordVectors {
  Vocabulary vocab;  // every distinct corpus token, no pruning
  EmbeddingTable table;

  // Out-of-vocabulary tokens map to the zero vector at encode time.
  std::vector<double> vector_of(const std::string& token) const {
    const auto id = vocab.lookup(token);
    if (id < 0) return std::vector<double>(table.dim(), 0.0);
    return table.vec(static_cast<std::size_t>(id));
  }
};

// Skip-gram with negative sampling over every post as one sentence. Noise
// follows unigram count^0.75.
inline WordVectors train_word_vectors(const std::vector<std::vector<std::string>>& sentences,
                                      const Word2VecConfig& cfg) {
  WordVectors wv;
  std::vector<std::vector<std::uint32_t>> sequences;
  sequences.reserve(sentences.size());
  for (const auto& sent : sentences) {
    std::vector<std::uint32_t> ids;
    ids.reserve(sent.size());
    for (const auto& tok : sent) ids.push_back(wv.vocab.intern(tok));
    if (!ids.empty()) sequences.push_back(std::move(ids));
  }
  if (wv.vocab.size() == 0) throw ArgumentError("train_word_vectors: empty vocabulary");

  std::vector<double> counts(wv.vocab.size(), 0.0);
  for (const auto& s : sequences)
    for (auto id : s) counts[id] += 1.0;
  for (double& c : counts) c = std::pow(c, 0.75);

  wv.table = train_skipgram(sequences, wv.vocab.size(), cfg.dim, cfg.window,
                            cfg.negatives, cfg.epochs, cfg.lr0, counts,
                            substream_seed(cfg.seed, "word2vec"), cfg.workers);
  return wv;
}

// Convenience path from raw posts: tokenize each post into one sentence.
inline WordVectors train_word_vectors(const std::vector<std::vector<Post>>& posts,
                                      const Word2VecConfig& cfg) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& user_posts : posts) {
    for (const auto& p : user_posts) {
      auto toks = tokenize(p.text);
      if (!toks.empty()) sentences.push_back(std::move(toks));
    }
  }
  return train_word_vectors(sentences, cfg);
}

}  // namespace umhi
