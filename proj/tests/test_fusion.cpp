#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "umhi/fusion.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace umhi;

namespace {

// Frozen zero-valued components at the published dimensions.
struct PaperDimComponents {
  EmbeddingTable line1{6, 100}, line2{6, 100};
  ContentEncoder han;
  std::vector<std::vector<TokenizedPost>> posts;
  FactorModel mf;

  PaperDimComponents() {
    HanDims dims;
    dims.vocab = 4;
    dims.word_dim = 100;
    dims.hidden = 100;
    dims.att = 100;
    han = ContentEncoder(dims);  // zero params -> zero content vectors
    posts.resize(6);
    for (std::size_t u = 0; u < 6; ++u) {
      TokenizedPost p;
      p.tokens = {0, 1};
      posts[u].push_back(p);
    }
    mf.k = 64;
    mf.p = EmbeddingTable(6, 64);
    mf.q = EmbeddingTable(6, 64);
  }

  FeatureSource source() const {
    return FeatureSource(ComponentMask{}, &line1, &line2, nullptr, &han, &posts, &mf);
  }
};

}  // namespace

TEST_CASE("assembled feature width is 928 at the published dimensions") {
  PaperDimComponents c;
  auto source = c.source();
  CHECK(source.dim() == 928);  // 2*(100+100) + 2*200 + 2*64

  SECTION("all-zero components give the zero vector") {
    const auto d = source.features(0, 1);
    REQUIRE(d.size() == 928);
    CHECK(d.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("feature order is n_i, n_j, m_i, m_j, p_i, q_j and i/j asymmetric") {
  EmbeddingTable line1(3, 2), line2(3, 2);
  FactorModel mf;
  mf.k = 2;
  mf.p = EmbeddingTable(3, 2);
  mf.q = EmbeddingTable(3, 2);
  for (UserId u = 0; u < 3; ++u) {
    for (std::size_t d = 0; d < 2; ++d) {
      line1.row(u)[d] = 100.0 * u + d;        // marks the table and user
      line2.row(u)[d] = 200.0 * u + d;
      mf.p.row(u)[d] = 300.0 * u + d;
      mf.q.row(u)[d] = 400.0 * u + d;
    }
  }
  ComponentMask mask;
  mask.han = false;
  FeatureSource source(mask, &line1, &line2, nullptr, nullptr, nullptr, &mf);
  REQUIRE(source.dim() == 12);

  const auto d01 = source.features(0, 1);
  // n_0 = line1[0] ++ line2[0], n_1 = line1[1] ++ line2[1], p_0, q_1
  CHECK(d01(0) == 0.0);
  CHECK(d01(2) == 200.0 * 0);
  CHECK(d01(4) == 100.0);
  CHECK(d01(6) == 200.0);
  CHECK(d01(8) == 0.0);    // p_0
  CHECK(d01(10) == 400.0); // q_1

  const auto d10 = source.features(1, 0);
  CHECK((d01 - d10).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("missing component vectors fail naming the component") {
  EmbeddingTable line1(2, 2);
  ComponentMask mask;
  mask.han = false;
  mask.mf = false;
  try {
    FeatureSource source(mask, &line1, nullptr, nullptr, nullptr, nullptr, nullptr);
    FAIL("expected missing-component error");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("line2") != std::string::npos);
  }
}

TEST_CASE("fusion_forward: zero weights give exactly one half") {
  Mlp mlp(10, {8, 4});
  const VectorXd x = VectorXd::Random(10);
  CHECK(mlp.forward(x) == 0.5);
}

TEST_CASE("fusion_forward stays strictly inside (0,1)") {
  Mlp mlp(16, {8, 4});
  mlp.init_random(3);
  Rng rng(5);
  for (int k = 0; k < 10000; ++k) {
    VectorXd x(16);
    for (Eigen::Index d = 0; d < 16; ++d) x(d) = rng.uniform(-50.0, 50.0);
    const double y = mlp.forward(x);
    CHECK(y > 0.0);
    CHECK(y < 1.0);
  }
}

TEST_CASE("fusion_forward rejects width mismatch") {
  Mlp mlp(12, {4});
  CHECK_THROWS_AS(mlp.forward(VectorXd::Zero(5)), ArgumentError);
}

TEST_CASE("input gradient matches finite differences") {
  Mlp mlp(9, {7, 5});
  mlp.init_random(21);
  Rng rng(2);
  VectorXd x(9);
  for (Eigen::Index d = 0; d < 9; ++d) x(d) = rng.uniform(-1, 1);

  const VectorXd analytic = mlp.input_gradient(x);
  std::vector<double> xv(x.data(), x.data() + x.size());
  const auto fd = oracle::finite_difference(
      xv,
      [&]() {
        return mlp.forward(Eigen::Map<const VectorXd>(xv.data(),
                                                      static_cast<Eigen::Index>(xv.size())));
      },
      1e-6);
  std::vector<double> av(analytic.data(), analytic.data() + analytic.size());
  CHECK(oracle::max_relative_error(av, fd, 1e-7) < 1e-4);
}

TEST_CASE("fusion loss parameter gradient matches finite differences") {
  Mlp mlp(6, {5, 3});
  mlp.init_random(33);
  Rng rng(4);
  MatrixXd batch(6, 4);
  for (Eigen::Index c = 0; c < 4; ++c)
    for (Eigen::Index r = 0; r < 6; ++r) batch(r, c) = rng.uniform(-1, 1);
  const std::vector<double> labels{1.0, 0.0, 1.0, 0.0};

  std::vector<double> grads(mlp.params().size(), 0.0);
  mlp.batch_backward(batch, labels, grads);
  const auto fd = oracle::finite_difference(
      mlp.params(), [&]() { return mlp.batch_loss(batch, labels); }, 1e-5);
  CHECK(oracle::max_relative_error(grads, fd, 1e-6) < 1e-4);
}

TEST_CASE("cross entropy falls as predictions move toward the labels") {
  // The printed objective is maximized by a perfect classifier; the
  // implemented loss is its negation and must decrease toward the label.
  CHECK(ContentEncoder::bce(0.9, 1.0) < ContentEncoder::bce(0.6, 1.0));
  CHECK(ContentEncoder::bce(0.1, 0.0) < ContentEncoder::bce(0.4, 0.0));
}

namespace {

struct SeparableFixture {
  EmbeddingTable line1{60, 4}, line2{60, 4};
  FactorModel mf;
  std::vector<EvalItem> pairs;
  ComponentMask mask;

  explicit SeparableFixture(std::uint64_t seed) {
    mask.han = false;
    mf.k = 4;
    mf.p = EmbeddingTable(60, 4);
    mf.q = EmbeddingTable(60, 4);
    Rng rng(seed);
    std::vector<bool> hot(60);
    for (std::size_t u = 0; u < 60; ++u) {
      hot[u] = rng.uniform() < 0.5;
      for (std::size_t d = 0; d < 4; ++d) {
        line1.row(u)[d] = rng.uniform(-0.2, 0.2) + (hot[u] ? 1.0 : -1.0);
        line2.row(u)[d] = rng.uniform(-0.2, 0.2);
        mf.p.row(u)[d] = rng.uniform(-0.2, 0.2);
        mf.q.row(u)[d] = rng.uniform(-0.2, 0.2);
      }
    }
    for (int k = 0; k < 400; ++k) {
      const auto i = static_cast<UserId>(rng.uniform_index(60));
      auto j = static_cast<UserId>(rng.uniform_index(60));
      while (j == i) j = static_cast<UserId>(rng.uniform_index(60));
      pairs.push_back({i, j, hot[i] ? EdgeLabel::kUnfollow : EdgeLabel::kHold});
    }
  }

  FeatureSource source() const {
    return FeatureSource(mask, &line1, &line2, nullptr, nullptr, nullptr, &mf);
  }
};

}  // namespace

TEST_CASE("train_fusion solves a separable task and freezes components") {
  SeparableFixture fx(7);
  auto source = fx.source();
  FusionModel model(fx.mask, source.dim(), {16, 8});
  model.mlp().init_random(5);

  const auto line1_before = fx.line1;
  const auto mf_p_before = fx.mf.p;

  FusionTrainConfig cfg;
  cfg.epochs = 10;
  cfg.lr = 0.01;
  cfg.seed = 3;
  const auto result = train_fusion(model, source, fx.pairs, cfg);

  CHECK(result.first_batch_loss == Catch::Approx(std::log(2.0)).margin(0.1));
  for (const auto& [np, nn] : result.batch_log) {
    CHECK(np == nn);  // exactly balanced batches
  }

  std::vector<ScoredLabel> scored;
  for (const auto& p : fx.pairs) {
    scored.push_back({model.forward(source.features(p.follower, p.followee)),
                      p.label == EdgeLabel::kUnfollow ? 1 : 0});
  }
  CHECK(auc_rank_sum(scored) > 0.99);

  // Frozen-component contract: bit-identical before and after training.
  CHECK(fx.line1 == line1_before);
  CHECK(fx.mf.p == mf_p_before);
}

TEST_CASE("train_fusion rejects an empty class pool") {
  SeparableFixture fx(9);
  for (auto& p : fx.pairs) p.label = EdgeLabel::kHold;
  auto source = fx.source();
  FusionModel model(fx.mask, source.dim(), {8});
  FusionTrainConfig cfg;
  CHECK_THROWS_AS(train_fusion(model, source, fx.pairs, cfg), ArgumentError);
}

TEST_CASE("predict_edge threshold and determinism") {
  SeparableFixture fx(11);
  auto source = fx.source();
  FusionModel model(fx.mask, source.dim(), {8});
  model.mlp().init_random(2);

  const auto a = model.predict(source, 0, 1);
  const auto b = model.predict(source, 0, 1);
  CHECK(a.score == b.score);
  CHECK(a.label == (a.score >= 0.5 ? 1 : 0));

  SECTION("y = 0.5 maps to label 1 (ties to positive)") {
    Mlp zero(source.dim(), {4});
    FusionModel tie(fx.mask, source.dim(), {4});
    const auto rec = tie.predict(source, 0, 1);
    CHECK(rec.score == 0.5);
    CHECK(rec.label == 1);
  }
  SECTION("unknown user rejected") {
    CHECK_THROWS_AS(model.predict(source, 500, 1), ArgumentError);
  }
}

TEST_CASE("fusion model round trips through the versioned container") {
  testutil::TempDir tmp("fusion");
  SeparableFixture fx(13);
  auto source = fx.source();
  FusionModel model(fx.mask, source.dim(), {8, 4});
  model.mlp().init_random(77);
  const auto path = (tmp.path() / "fusion.json").string();
  model.save(path);
  const auto loaded = FusionModel::load(path);
  CHECK(loaded.mlp() == model.mlp());
  CHECK(loaded.mask().han == fx.mask.han);

  SECTION("version mismatch fails loudly") {
    const auto bad = tmp.file("bad.json", R"({"format_version": 2})");
    CHECK_THROWS_AS(FusionModel::load(bad), DataError);
  }
}
