// tests/test_phonetics.cpp

#include "cogseg/phonetics.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cogseg/snapshot.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cogseg;

namespace {

// Three meaningful groups plus four fillers; [b] and [p] differ only in
// voicing, [b] and [d] only in place.
ModelContext consonant_context() {
  FeatureTable t;
  t.groups = {"g3", "g4", "g5", "g6", "manner", "place", "voicing"};
  t.value_names[4] = {"stop", "fricative"};
  t.value_names[5] = {"labial", "alveolar"};
  t.value_names[6] = {"voiced", "voiceless"};
  for (int g = 0; g < 4; ++g) t.value_names[g] = {"none"};
  t.entries["b"] = {0, 0, 0, 0, 0, 0, 0};
  t.entries["p"] = {0, 0, 0, 0, 0, 0, 1};
  t.entries["d"] = {0, 0, 0, 0, 0, 1, 0};
  return ModelContext::build(KnownAlphabet({"b", "p", "d"}),
                             LostAlphabet({"x", "y"}), t);
}

MappingMatrix stochastic_matrix(const std::vector<std::vector<double>>& rows) {
  MappingMatrix m;
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(rows[0].size());
  m.probs.resize(r, c);
  m.log_probs.resize(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      m.probs(i, j) = rows[i][j];
      m.log_probs(i, j) = std::log(rows[i][j]);
    }
  return m;
}

}  // namespace

TEST_SUITE("phonetics") {

TEST_CASE("embed_known concatenates the feature embeddings in group order") {
  const ModelContext ctx = consonant_context();
  ModelParams p = init_params(ctx, 3, true, 0.0, 5);

  const auto b = embed_known(p, ctx, std::string("b"));
  REQUIRE(b.size() == 21);
  for (int g = 0; g < kFeatureGroups; ++g) {
    const int row = ctx.phone_rows[ctx.known.id("b")][g];
    CHECK((b.segment(3 * g, 3).transpose() - p.feature_emb.row(row)).norm() ==
          0.0);
  }

  // Shared feature values produce shared segments: b vs p differ only in the
  // voicing slice, b vs d only in the place slice.
  const auto pv = embed_known(p, ctx, std::string("p"));
  const auto d = embed_known(p, ctx, std::string("d"));
  CHECK((b.segment(0, 18) - pv.segment(0, 18)).norm() == 0.0);
  CHECK((b.segment(18, 3) - pv.segment(18, 3)).norm() > 0.0);
  CHECK((b.segment(15, 3) - d.segment(15, 3)).norm() > 0.0);

  CHECK_THROWS_AS(embed_known(p, ctx, std::string("q")), MissingPhone);
}

TEST_CASE("two phones with identical feature values embed identically") {
  FeatureTable t = oracle::make_table(4);
  t.entries["D"] = t.entries["C"];  // duplicate feature bundle
  const ModelContext ctx = ModelContext::build(
      KnownAlphabet({"A", "B", "C", "D"}), LostAlphabet({"a"}), t);
  ModelParams p = init_params(ctx, 2, true, 0.0, 7);
  CHECK((embed_known(p, ctx, 2) - embed_known(p, ctx, 3)).norm() == 0.0);
}

TEST_CASE("all-ones feature embeddings with d=2 give the 14-dim ones vector") {
  const ModelContext ctx = oracle::make_context(3, 2);
  ModelParams p = init_params(ctx, 2, true, 0.0, 9);
  p.feature_emb.setOnes();
  const auto v = embed_known(p, ctx, 0);
  REQUIRE(v.size() == 14);
  CHECK(v.minCoeff() == 1.0);
  CHECK(v.maxCoeff() == 1.0);
}

TEST_CASE("embed_lost: softmax saturation, symmetry, hand-computed mixture") {
  const ModelContext ctx = oracle::make_context(2, 2);
  ModelParams p = init_params(ctx, 1, true, 0.0, 11);
  Eigen::MatrixXd known(2, 7);
  known.setZero();
  known(0, 0) = 1.0;
  known(1, 1) = 1.0;

  p.mixture_logits.setZero();
  p.mixture_logits(0, 0) = 1000.0;
  CHECK((embed_lost(p, known, 0) - known.row(0).transpose()).norm() < 1e-6);

  p.mixture_logits.row(1).setZero();  // uniform -> arithmetic mean
  const Eigen::VectorXd mean = 0.5 * (known.row(0) + known.row(1)).transpose();
  CHECK((embed_lost(p, known, 1) - mean).norm() < 1e-12);

  p.mixture_logits(2, 0) = std::log(3.0);
  p.mixture_logits(2, 1) = 0.0;
  const auto v = embed_lost(p, known, 2);
  CHECK(v(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(v(1) == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(embed_lost(p, known, 9), MissingChar);
}

TEST_CASE("identical embeddings flatten the mapping to uniform rows") {
  const ModelContext ctx = oracle::make_context(3, 2);
  ModelParams p = init_params(ctx, 2, true, 0.0, 13);
  p.feature_emb.setConstant(0.3);
  p.mixture_logits.setZero();
  const MappingMatrix m = mapping_matrix(p, ctx, 0.7);
  for (int i = 0; i < m.num_known(); ++i)
    for (int j = 0; j < m.num_outcomes(); ++j)
      CHECK(m.probs(i, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("low temperature saturates an aligned pair") {
  // Per-phone embeddings, one lost char + deletion; the mixture for the lost
  // char saturates on phone 0, whose embedding is orthogonal to phone 1's.
  const ModelContext ctx = oracle::make_context(2, 1);
  ModelParams p = init_params(ctx, 1, false, 0.0, 17);
  p.char_emb.setZero();
  p.char_emb(0, 0) = 1.0;
  p.char_emb(1, 1) = 1.0;
  p.mixture_logits.setZero();
  p.mixture_logits(0, 0) = 1000.0;  // lost char 0 == phone 0
  p.mixture_logits(1, 1) = 1000.0;  // deletion row sits on phone 1
  const MappingMatrix m = mapping_matrix(p, ctx, 0.01);
  CHECK(m.probs(0, 0) > 0.99);
}

TEST_CASE("two-way softmax with dots (2, 0) at T=1") {
  const ModelContext ctx = oracle::make_context(2, 1);
  ModelParams p = init_params(ctx, 1, false, 0.0, 19);
  p.char_emb.setZero();
  p.char_emb(0, 0) = std::sqrt(2.0);
  p.mixture_logits.setZero();
  p.mixture_logits(0, 0) = 1e4;  // lost char -> phone 0: dot = 2
  p.mixture_logits(1, 1) = 1e4;  // deletion -> phone 1: dot = 0
  const MappingMatrix m = mapping_matrix(p, ctx, 1.0);
  CHECK(m.probs(0, 0) == doctest::Approx(0.8808).epsilon(1e-4));
  CHECK(m.probs(0, 1) == doctest::Approx(0.1192).epsilon(1e-4));

  CHECK_THROWS_AS(mapping_matrix(p, ctx, 0.0), InvalidTemperature);
  CHECK_THROWS_AS(mapping_matrix(p, ctx, -1.0), InvalidTemperature);
}

TEST_CASE("mapping rows are stochastic for random parameters") {
  const ModelContext ctx = oracle::make_context(5, 4);
  for (int draw = 0; draw < 10; ++draw) {
    const ModelParams p = testutil::random_params(ctx, 3, 100 + draw);
    const MappingMatrix m = mapping_matrix(p, ctx, 0.2);
    for (int i = 0; i < m.num_known(); ++i) {
      CHECK(m.probs.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
      for (int j = 0; j < m.num_outcomes(); ++j) {
        CHECK(m.probs(i, j) > 0.0);
        CHECK(m.probs(i, j) < 1.0);
      }
    }
  }
}

TEST_CASE("feature locality: unrelated value rows do not touch a phone") {
  const ModelContext ctx = oracle::make_context(4, 2);
  ModelParams p = testutil::random_params(ctx, 3, 23);
  const Eigen::VectorXd before = embed_known(p, ctx, 0);
  // Value row of group 0 belonging to phone 3, not phone 0.
  p.feature_emb.row(ctx.phone_rows[3][0]).array() += 5.0;
  const Eigen::VectorXd after = embed_known(p, ctx, 0);
  CHECK((before - after).norm() == 0.0);
}

TEST_CASE("lowering the temperature sharpens every row") {
  const ModelContext ctx = oracle::make_context(4, 3);
  const ModelParams p = testutil::random_params(ctx, 3, 29);
  const MappingMatrix hot = mapping_matrix(p, ctx, 1.0);
  const MappingMatrix cold = mapping_matrix(p, ctx, 0.25);
  for (int i = 0; i < hot.num_known(); ++i)
    CHECK(cold.probs.row(i).maxCoeff() > hot.probs.row(i).maxCoeff());
}

TEST_CASE("supervision loss examples") {
  CHECK(mapping_supervision_loss(stochastic_matrix({{0.5, 0.5}}), {}) == 0.0);

  auto m = stochastic_matrix({{1.0 - 1e-15, 1e-15}});
  CHECK(mapping_supervision_loss(m, {{0, 0}}) ==
        doctest::Approx(0.0).epsilon(1e-9));

  auto half = stochastic_matrix({{0.5, 0.3, 0.2}});
  CHECK(mapping_supervision_loss(half, {{0, 0}}) ==
        doctest::Approx(0.6931).epsilon(1e-4));
}

TEST_CASE("supervision loss gradient matches finite differences") {
  const ModelContext ctx = oracle::make_context(4, 3);
  const ModelParams params = testutil::random_params(ctx, 2, 31);
  const std::map<int, int> targets = {{0, 2}, {1, 0}, {3, 1}};

  MappingForward fwd = mapping_forward(params, ctx, 0.5, nullptr);
  Eigen::MatrixXd g_log = Eigen::MatrixXd::Zero(4, 4);
  mapping_supervision_loss_grad(fwd.matrix, targets, g_log);
  ParamGrads grads;
  grads.init_like(params);
  mapping_backward(fwd, params, ctx, g_log, Eigen::MatrixXd::Zero(0, 0),
                   grads);

  const double err = testutil::fd_max_rel_err(
      params, grads, [&](const ModelParams& p) {
        return mapping_supervision_loss(mapping_matrix(p, ctx, 0.5), targets);
      });
  CHECK(err <= 1e-4);
}

TEST_CASE("dropout masks are seeded, binary-scaled and train-only") {
  const DropoutMask a = DropoutMask::sample(4, 6, 0.5, 99);
  const DropoutMask b = DropoutMask::sample(4, 6, 0.5, 99);
  const DropoutMask c = DropoutMask::sample(4, 6, 0.5, 100);
  CHECK((a.scale - b.scale).norm() == 0.0);
  CHECK((a.scale - c.scale).norm() > 0.0);
  for (int r = 0; r < 4; ++r)
    for (int col = 0; col < 6; ++col)
      CHECK((a.scale(r, col) == 0.0 || a.scale(r, col) == 2.0));

  const ModelContext ctx = oracle::make_context(3, 2);
  const ModelParams p = testutil::random_params(ctx, 2, 37);
  const DropoutMask mask =
      DropoutMask::sample(3, p.known_dim(), 0.5, 7);
  const MappingForward with = mapping_forward(p, ctx, 0.5, &mask);
  const MappingForward without = mapping_forward(p, ctx, 0.5, nullptr);
  CHECK((with.matrix.probs - without.matrix.probs).cwiseAbs().maxCoeff() >
        0.0);
  CHECK(!DropoutMask::none().active);
}

TEST_CASE("feature table file round-trips and canonicalizes group order") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "cogseg_ft_test";
  fs::create_directories(dir);
  const auto path = (dir / "features.csv").string();
  {
    std::ofstream out(path);
    out << "phone,voicing,manner,place,g3,g4,g5,g6\n";
    out << "b,voiced,stop,labial,x,x,x,x\n";
    out << "p,voiceless,stop,labial,x,x,x,x\n";
  }
  const FeatureTable t = FeatureTable::load(path);
  CHECK(t.groups.front() == "g3");
  CHECK(t.groups.back() == "voicing");
  CHECK(t.entries.size() == 2);

  const auto path2 = (dir / "features2.csv").string();
  t.save(path2);
  const FeatureTable t2 = FeatureTable::load(path2);
  CHECK(t2.groups == t.groups);
  CHECK(t2.entries.at("b") == t.entries.at("b"));

  {
    std::ofstream out(path);
    out << "phone,a,b\nb,x,y\n";
  }
  CHECK_THROWS_AS(FeatureTable::load(path), ParseError);
}

TEST_CASE("snapshot round-trips bit-exactly") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "cogseg_snap_test";
  fs::create_directories(dir);
  const auto path = (dir / "model.bin").string();

  const ModelContext ctx = oracle::make_context(4, 3);
  const ModelParams p = testutil::random_params(ctx, 3, 41);
  const SnapshotMeta meta{0.2, std::exp(-3.5), {3, 8}};
  save_snapshot(path, p, ctx, meta);

  const Snapshot s = load_snapshot(path);
  CHECK(s.params.dim == p.dim);
  CHECK(s.params.feature_based == p.feature_based);
  CHECK((s.params.feature_emb - p.feature_emb).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.params.mixture_logits - p.mixture_logits).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(s.ctx.known.phones() == ctx.known.phones());
  CHECK(s.ctx.lost.chars() == ctx.lost.chars());
  CHECK(s.meta.temperature == meta.temperature);
  CHECK(s.meta.alpha == meta.alpha);
  CHECK(s.meta.range.min_len == 3);
  CHECK(s.meta.range.max_len == 8);

  const auto path2 = (dir / "model2.bin").string();
  save_snapshot(path2, s.params, s.ctx, s.meta);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
}

}  // TEST_SUITE
