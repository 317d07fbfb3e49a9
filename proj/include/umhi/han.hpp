#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "umhi/adam.hpp"
#include "umhi/embedding.hpp"
#include "umhi/graph.hpp"
#include "umhi/rng.hpp"
#include "umhi/tokenize.hpp"

namespace umhi {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using EigenMap = Eigen::Map<MatrixXd>;
using EigenConstMap = Eigen::Map<const MatrixXd>;

// Two-level encoder: word-level bidirectional LSTM with attention turns each
// post into s (2H), post-level bidirectional LSTM with attention turns the
// post sequence into the user vector m (2H). Pretraining adds a logistic head
// on m_i ⊕ m_j.
struct HanDims {
  std::size_t vocab = 0;
  std::size_t word_dim = 100;   // N
  std::size_t hidden = 100;     // H per direction
  std::size_t att = 100;        // attention projection size
  std::size_t t_max = 100;      // tokens kept per post
  std::size_t l_max = 50;       // most recent posts kept per user

  std::size_t bi() const { return 2 * hidden; }
  std::size_t head_in() const { return 4 * hidden; }
};

namespace han_detail {

struct CellOffsets {
  std::size_t wx = 0, wh = 0, b = 0;
  std::size_t in = 0, hidden = 0;
};

struct AttnOffsets {
  std::size_t w = 0, b = 0, c = 0;
  std::size_t in = 0, att = 0;
};

// Flat parameter layout so Adam and finite-difference checks can treat the
// whole model as one vector.
struct Layout {
  std::size_t word_emb = 0;
  CellOffsets word_fwd, word_bwd, post_fwd, post_bwd;
  AttnOffsets word_attn, post_attn;
  std::size_t head_w = 0, head_b = 0;
  std::size_t total = 0;

  explicit Layout(const HanDims& d) {
    std::size_t at = 0;
    auto take = [&at](std::size_t n) {
      const std::size_t off = at;
      at += n;
      return off;
    };
    auto cell = [&](std::size_t in, std::size_t h) {
      CellOffsets c;
      c.in = in;
      c.hidden = h;
      c.wx = take(4 * h * in);
      c.wh = take(4 * h * h);
      c.b = take(4 * h);
      return c;
    };
    auto attn = [&](std::size_t in, std::size_t a) {
      AttnOffsets o;
      o.in = in;
      o.att = a;
      o.w = take(a * in);
      o.b = take(a);
      o.c = take(a);
      return o;
    };
    word_emb = take(d.vocab * d.word_dim);
    word_fwd = cell(d.word_dim, d.hidden);
    word_bwd = cell(d.word_dim, d.hidden);
    word_attn = attn(d.bi(), d.att);
    post_fwd = cell(d.bi(), d.hidden);
    post_bwd = cell(d.bi(), d.hidden);
    post_attn = attn(d.bi(), d.att);
    head_w = take(d.head_in());
    head_b = take(1);
    total = at;
  }
};

struct LstmTrace {
  MatrixXd gi, gf, gg, go;  // gate activations, H x T
  MatrixXd c, tanh_c, h;    // H x T
};

struct AttnTrace {
  MatrixXd u;      // A x T
  VectorXd alpha;  // T
};

struct PostTrace {
  std::vector<std::uint32_t> tokens;
  MatrixXd x;  // N x T word embeddings (zero column for OOV sentinel)
  LstmTrace fwd, bwd;
  MatrixXd h_bi;  // 2H x T
  AttnTrace attn;
  VectorXd s;  // 2H
};

struct UserTrace {
  std::vector<PostTrace> posts;
  MatrixXd s_mat;  // 2H x L
  LstmTrace fwd, bwd;
  MatrixXd h_bi;  // 2H x L
  AttnTrace attn;
  VectorXd m;  // 2H
};

}  // namespace han_detail

// Sentinel word id whose embedding is the non-trainable zero vector.
constexpr std::uint32_t kOovWordId = 0xFFFFFFFFu;

class ContentEncoder {
 public:
  ContentEncoder() : dims_{}, layout_(dims_) {}
  explicit ContentEncoder(const HanDims& dims)
      : dims_(dims), layout_(dims), params_(layout_.total, 0.0) {}

  const HanDims& dims() const { return dims_; }
  std::size_t param_count() const { return layout_.total; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Uniform [-0.08, 0.08], the conventional LSTM range.
  void init_random(std::uint64_t seed) {
    Rng rng(seed);
    for (double& x : params_) x = rng.uniform(-0.08, 0.08);
  }

  // Copies pretrained word vectors into the embedding block (row w of the
  // table becomes column w here).
  void set_word_embeddings(const EmbeddingTable& table) {
    if (table.count() != dims_.vocab || table.dim() != dims_.word_dim)
      throw ArgumentError("set_word_embeddings: dimension mismatch");
    EigenMap emb = word_emb(params_);
    for (std::size_t w = 0; w < table.count(); ++w)
      for (std::size_t d = 0; d < table.dim(); ++d)
        emb(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(w)) = table.row(w)[d];
  }

  // s = attention-weighted sum of bidirectional hidden states over the words
  // of one post.
  VectorXd encode_post(const TokenizedPost& post) const {
    han_detail::PostTrace trace;
    forward_post(post, const_cast<std::vector<double>&>(params_), trace);
    return trace.s;
  }

  // m = second-level recurrence with attention over s_1..s_L.
  VectorXd encode_user(const std::vector<TokenizedPost>& posts) const {
    han_detail::UserTrace trace;
    forward_user(posts, const_cast<std::vector<double>&>(params_), trace);
    return trace.m;
  }

  // Word attention weights for one post (tests assert they sum to one).
  VectorXd word_attention(const TokenizedPost& post) const {
    han_detail::PostTrace trace;
    forward_post(post, const_cast<std::vector<double>&>(params_), trace);
    return trace.attn.alpha;
  }

  VectorXd post_attention(const std::vector<TokenizedPost>& posts) const {
    han_detail::UserTrace trace;
    forward_user(posts, const_cast<std::vector<double>&>(params_), trace);
    return trace.attn.alpha;
  }

  // Pretraining head: sigmoid(w . (m_i ⊕ m_j) + b).
  double score_pair(const std::vector<TokenizedPost>& posts_i,
                    const std::vector<TokenizedPost>& posts_j) const {
    const VectorXd m_i = encode_user(posts_i);
    const VectorXd m_j = encode_user(posts_j);
    return head_forward(m_i, m_j);
  }

  // Cross-entropy loss of one labeled pair; the unit the gradient check
  // differentiates.
  double pair_loss(const std::vector<TokenizedPost>& posts_i,
                   const std::vector<TokenizedPost>& posts_j, double label) const {
    const double y = score_pair(posts_i, posts_j);
    return bce(y, label);
  }

  // Accumulates d pair_loss / d params into grads (same layout as params_).
  void pair_backward(const std::vector<TokenizedPost>& posts_i,
                     const std::vector<TokenizedPost>& posts_j, double label,
                     std::vector<double>& grads) const {
    han_detail::UserTrace trace_i, trace_j;
    auto& params = const_cast<std::vector<double>&>(params_);
    forward_user(posts_i, params, trace_i);
    forward_user(posts_j, params, trace_j);
    const double y = head_forward(trace_i.m, trace_j.m);
    const double dlogit = y - label;

    const std::size_t bi = dims_.bi();
    EigenConstMap w(params_.data() + layout_.head_w, dims_.head_in(), 1);
    VectorXd dm_i = dlogit * w.col(0).head(bi);
    VectorXd dm_j = dlogit * w.col(0).tail(bi);

    EigenMap gw(grads.data() + layout_.head_w, dims_.head_in(), 1);
    gw.col(0).head(bi) += dlogit * trace_i.m;
    gw.col(0).tail(bi) += dlogit * trace_j.m;
    grads[layout_.head_b] += dlogit;

    backward_user(trace_i, dm_i, grads);
    backward_user(trace_j, dm_j, grads);
  }

  static double bce(double y, double label) {
    const double eps = 1e-12;
    return -(label * std::log(std::max(y, eps)) +
             (1.0 - label) * std::log(std::max(1.0 - y, eps)));
  }

  // ||s||^2 of one encoded post and its parameter gradient; the scalar unit
  // the word-level gradient check differences.
  double post_norm2(const TokenizedPost& post) const {
    return encode_post(post).squaredNorm();
  }

  void post_norm2_backward(const TokenizedPost& post, std::vector<double>& grads) const {
    han_detail::PostTrace trace;
    forward_post(post, const_cast<std::vector<double>&>(params_), trace);
    backward_post(trace, 2.0 * trace.s, grads);
  }

  bool all_finite() const {
    for (double v : params_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  friend struct HanPretrainer;

  EigenMap word_emb(std::vector<double>& p) const {
    return EigenMap(p.data() + layout_.word_emb,
                    static_cast<Eigen::Index>(dims_.word_dim),
                    static_cast<Eigen::Index>(dims_.vocab));
  }

  static double sigmoid_(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  double head_forward(const VectorXd& m_i, const VectorXd& m_j) const {
    EigenConstMap w(params_.data() + layout_.head_w, dims_.head_in(), 1);
    const std::size_t bi = dims_.bi();
    double logit = params_[layout_.head_b];
    logit += w.col(0).head(bi).dot(m_i) + w.col(0).tail(bi).dot(m_j);
    return sigmoid_(logit);
  }

  // ---- LSTM ----

  void lstm_forward(const han_detail::CellOffsets& cell, std::vector<double>& p,
                    const MatrixXd& x, han_detail::LstmTrace& trace) const {
    const auto H = static_cast<Eigen::Index>(cell.hidden);
    const auto T = x.cols();
    EigenMap wx(p.data() + cell.wx, 4 * H, static_cast<Eigen::Index>(cell.in));
    EigenMap wh(p.data() + cell.wh, 4 * H, H);
    EigenMap b(p.data() + cell.b, 4 * H, 1);

    MatrixXd z_in = (wx * x).colwise() + b.col(0);
    trace.gi.resize(H, T);
    trace.gf.resize(H, T);
    trace.gg.resize(H, T);
    trace.go.resize(H, T);
    trace.c.resize(H, T);
    trace.tanh_c.resize(H, T);
    trace.h.resize(H, T);

    VectorXd h_prev = VectorXd::Zero(H);
    VectorXd c_prev = VectorXd::Zero(H);
    VectorXd z(4 * H);
    for (Eigen::Index t = 0; t < T; ++t) {
      z.noalias() = z_in.col(t) + wh * h_prev;
      for (Eigen::Index k = 0; k < H; ++k) {
        trace.gi(k, t) = sigmoid_(z(k));
        trace.gf(k, t) = sigmoid_(z(H + k));
        trace.gg(k, t) = std::tanh(z(2 * H + k));
        trace.go(k, t) = sigmoid_(z(3 * H + k));
        trace.c(k, t) = trace.gf(k, t) * c_prev(k) + trace.gi(k, t) * trace.gg(k, t);
        trace.tanh_c(k, t) = std::tanh(trace.c(k, t));
        trace.h(k, t) = trace.go(k, t) * trace.tanh_c(k, t);
      }
      h_prev = trace.h.col(t);
      c_prev = trace.c.col(t);
    }
  }

  // dX returned; parameter gradients accumulated.
  MatrixXd lstm_backward(const han_detail::CellOffsets& cell,
                         const MatrixXd& x, const han_detail::LstmTrace& trace,
                         const MatrixXd& dh_in, std::vector<double>& grads) const {
    const auto H = static_cast<Eigen::Index>(cell.hidden);
    const auto T = x.cols();
    auto& params = const_cast<std::vector<double>&>(params_);
    EigenMap wx(params.data() + cell.wx, 4 * H, static_cast<Eigen::Index>(cell.in));
    EigenMap wh(params.data() + cell.wh, 4 * H, H);
    EigenMap gwx(grads.data() + cell.wx, 4 * H, static_cast<Eigen::Index>(cell.in));
    EigenMap gwh(grads.data() + cell.wh, 4 * H, H);
    EigenMap gb(grads.data() + cell.b, 4 * H, 1);

    MatrixXd dz(4 * H, T);
    VectorXd carry_h = VectorXd::Zero(H);
    VectorXd carry_c = VectorXd::Zero(H);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      const VectorXd dh = dh_in.col(t) + carry_h;
      for (Eigen::Index k = 0; k < H; ++k) {
        const double i = trace.gi(k, t), f = trace.gf(k, t);
        const double g = trace.gg(k, t), o = trace.go(k, t);
        const double tc = trace.tanh_c(k, t);
        const double dc = carry_c(k) + dh(k) * o * (1.0 - tc * tc);
        const double c_prev = t > 0 ? trace.c(k, t - 1) : 0.0;
        dz(k, t) = dc * g * i * (1.0 - i);
        dz(H + k, t) = dc * c_prev * f * (1.0 - f);
        dz(2 * H + k, t) = dc * i * (1.0 - g * g);
        dz(3 * H + k, t) = dh(k) * tc * o * (1.0 - o);
        carry_c(k) = dc * f;
      }
      carry_h.noalias() = wh.transpose() * dz.col(t);
    }

    gwx.noalias() += dz * x.transpose();
    if (T > 1) {
      gwh.noalias() += dz.rightCols(T - 1) * trace.h.leftCols(T - 1).transpose();
    }
    gb.col(0) += dz.rowwise().sum();
    return wx.transpose() * dz;
  }

  // ---- attention ----

  void attn_forward(const han_detail::AttnOffsets& attn, std::vector<double>& p,
                    const MatrixXd& h, han_detail::AttnTrace& trace,
                    VectorXd& out) const {
    const auto A = static_cast<Eigen::Index>(attn.att);
    EigenMap w(p.data() + attn.w, A, static_cast<Eigen::Index>(attn.in));
    EigenMap b(p.data() + attn.b, A, 1);
    EigenMap c(p.data() + attn.c, A, 1);

    trace.u = ((w * h).colwise() + b.col(0)).array().tanh().matrix();
    VectorXd e = trace.u.transpose() * c.col(0);
    const double e_max = e.maxCoeff();
    trace.alpha = (e.array() - e_max).exp().matrix();
    trace.alpha /= trace.alpha.sum();
    out.noalias() = h * trace.alpha;
  }

  MatrixXd attn_backward(const han_detail::AttnOffsets& attn, const MatrixXd& h,
                         const han_detail::AttnTrace& trace, const VectorXd& ds,
                         std::vector<double>& grads) const {
    const auto A = static_cast<Eigen::Index>(attn.att);
    auto& params = const_cast<std::vector<double>&>(params_);
    EigenMap w(params.data() + attn.w, A, static_cast<Eigen::Index>(attn.in));
    EigenMap c(params.data() + attn.c, A, 1);
    EigenMap gw(grads.data() + attn.w, A, static_cast<Eigen::Index>(attn.in));
    EigenMap gb(grads.data() + attn.b, A, 1);
    EigenMap gc(grads.data() + attn.c, A, 1);

    // s = h * alpha
    VectorXd dalpha = h.transpose() * ds;
    MatrixXd dh = ds * trace.alpha.transpose();

    // softmax backward
    const double inner = trace.alpha.dot(dalpha);
    VectorXd de = (trace.alpha.array() * (dalpha.array() - inner)).matrix();

    // e_t = u_t . c ; u = tanh(w h + b)
    gc.col(0).noalias() += trace.u * de;
    MatrixXd du = c.col(0) * de.transpose();             // A x T
    MatrixXd dpre = (du.array() * (1.0 - trace.u.array().square())).matrix();
    gw.noalias() += dpre * h.transpose();
    gb.col(0) += dpre.rowwise().sum();
    dh.noalias() += w.transpose() * dpre;
    return dh;
  }

  // ---- post / user composition ----

  MatrixXd embed_tokens(const std::vector<std::uint32_t>& tokens,
                        std::vector<double>& p) const {
    const auto N = static_cast<Eigen::Index>(dims_.word_dim);
    MatrixXd x = MatrixXd::Zero(N, static_cast<Eigen::Index>(tokens.size()));
    EigenMap emb = word_emb(p);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t] == kOovWordId) continue;  // OOV stays the zero vector
      if (tokens[t] >= dims_.vocab)
        throw ArgumentError("encode: word id out of vocabulary range");
      x.col(static_cast<Eigen::Index>(t)) = emb.col(tokens[t]);
    }
    return x;
  }

  void forward_post(const TokenizedPost& post, std::vector<double>& p,
                    han_detail::PostTrace& trace) const {
    if (post.tokens.empty()) throw ArgumentError("encode_post: empty post");
    trace.tokens.assign(
        post.tokens.begin(),
        post.tokens.begin() +
            static_cast<std::ptrdiff_t>(std::min(post.tokens.size(), dims_.t_max)));
    trace.x = embed_tokens(trace.tokens, p);
    const auto T = trace.x.cols();
    const auto H = static_cast<Eigen::Index>(dims_.hidden);

    lstm_forward(layout_.word_fwd, p, trace.x, trace.fwd);
    const MatrixXd x_rev = trace.x.rowwise().reverse();
    lstm_forward(layout_.word_bwd, p, x_rev, trace.bwd);

    trace.h_bi.resize(2 * H, T);
    trace.h_bi.topRows(H) = trace.fwd.h;
    trace.h_bi.bottomRows(H) = trace.bwd.h.rowwise().reverse();
    attn_forward(layout_.word_attn, p, trace.h_bi, trace.attn, trace.s);
  }

  void backward_post(const han_detail::PostTrace& trace, const VectorXd& ds,
                     std::vector<double>& grads) const {
    const auto H = static_cast<Eigen::Index>(dims_.hidden);
    MatrixXd dh_bi = attn_backward(layout_.word_attn, trace.h_bi, trace.attn, ds, grads);

    const MatrixXd dh_fwd = dh_bi.topRows(H);
    const MatrixXd dh_bwd = dh_bi.bottomRows(H).rowwise().reverse();
    MatrixXd dx = lstm_backward(layout_.word_fwd, trace.x, trace.fwd, dh_fwd, grads);
    const MatrixXd x_rev = trace.x.rowwise().reverse();
    const MatrixXd dx_rev = lstm_backward(layout_.word_bwd, x_rev, trace.bwd, dh_bwd, grads);
    dx += dx_rev.rowwise().reverse();

    EigenMap gemb(grads.data() + layout_.word_emb,
                  static_cast<Eigen::Index>(dims_.word_dim),
                  static_cast<Eigen::Index>(dims_.vocab));
    for (std::size_t t = 0; t < trace.tokens.size(); ++t) {
      if (trace.tokens[t] == kOovWordId) continue;
      gemb.col(trace.tokens[t]) += dx.col(static_cast<Eigen::Index>(t));
    }
  }

  void forward_user(const std::vector<TokenizedPost>& posts, std::vector<double>& p,
                    han_detail::UserTrace& trace) const {
    if (posts.empty()) throw DataError("encode_user: user has no usable post");
    // Most recent l_max posts kept; input is chronologically ordered.
    const std::size_t keep = std::min(posts.size(), dims_.l_max);
    const std::size_t begin = posts.size() - keep;

    const auto H = static_cast<Eigen::Index>(dims_.hidden);
    trace.posts.resize(keep);
    trace.s_mat.resize(2 * H, static_cast<Eigen::Index>(keep));
    for (std::size_t l = 0; l < keep; ++l) {
      forward_post(posts[begin + l], p, trace.posts[l]);
      trace.s_mat.col(static_cast<Eigen::Index>(l)) = trace.posts[l].s;
    }

    lstm_forward(layout_.post_fwd, p, trace.s_mat, trace.fwd);
    const MatrixXd s_rev = trace.s_mat.rowwise().reverse();
    lstm_forward(layout_.post_bwd, p, s_rev, trace.bwd);

    trace.h_bi.resize(2 * H, static_cast<Eigen::Index>(keep));
    trace.h_bi.topRows(H) = trace.fwd.h;
    trace.h_bi.bottomRows(H) = trace.bwd.h.rowwise().reverse();
    attn_forward(layout_.post_attn, p, trace.h_bi, trace.attn, trace.m);
  }

  void backward_user(const han_detail::UserTrace& trace, const VectorXd& dm,
                     std::vector<double>& grads) const {
    const auto H = static_cast<Eigen::Index>(dims_.hidden);
    MatrixXd dh_bi = attn_backward(layout_.post_attn, trace.h_bi, trace.attn, dm, grads);

    const MatrixXd dh_fwd = dh_bi.topRows(H);
    const MatrixXd dh_bwd = dh_bi.bottomRows(H).rowwise().reverse();
    MatrixXd ds_mat =
        lstm_backward(layout_.post_fwd, trace.s_mat, trace.fwd, dh_fwd, grads);
    const MatrixXd s_rev = trace.s_mat.rowwise().reverse();
    const MatrixXd ds_rev =
        lstm_backward(layout_.post_bwd, s_rev, trace.bwd, dh_bwd, grads);
    ds_mat += ds_rev.rowwise().reverse();

    for (std::size_t l = 0; l < trace.posts.size(); ++l) {
      backward_post(trace.posts[l], ds_mat.col(static_cast<Eigen::Index>(l)), grads);
    }
  }

  HanDims dims_;
  han_detail::Layout layout_;
  std::vector<double> params_;
};

// Converts raw posts to capped tokenized form for one user. Posts that
// tokenize to nothing are dropped.
inline std::vector<TokenizedPost> tokenize_user_posts(const std::vector<Post>& posts,
                                                      const Vocabulary& vocab,
                                                      std::size_t t_max = 100) {
  std::vector<TokenizedPost> out;
  for (const auto& p : posts) {
    TokenizedPost tp;
    tp.time = p.time;
    for (const auto& tok : tokenize(p.text)) {
      if (tp.tokens.size() >= t_max) break;
      const auto id = vocab.lookup(tok);
      tp.tokens.push_back(id < 0 ? kOovWordId : static_cast<std::uint32_t>(id));
    }
    if (!tp.tokens.empty()) out.push_back(std::move(tp));
  }
  return out;
}

}  // namespace umhi
