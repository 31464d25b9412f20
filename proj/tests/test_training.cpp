// tests/test_training.cpp

#include "cogseg/training.hpp"

#include <filesystem>
#include <fstream>

#include "cogseg/evaluation.hpp"
#include "cogseg/snapshot.hpp"
#include "cogseg/synth.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cogseg;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cogseg_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SynthSpec tiny_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.known_alphabet_size = 5;
  spec.lost_alphabet_size = 5;
  spec.vocab_size = 8;
  spec.stem_len_min = 3;
  spec.stem_len_max = 4;
  spec.num_inscriptions = 12;
  spec.tokens_per_inscription = 2;
  spec.sub_rate = spec.del_rate = spec.ins_rate = 0.02;
  spec.filler_rate = 0.1;
  spec.whitespace_ratio = 0.7;
  spec.seed = seed;
  return spec;
}

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.dim = 3;
  cfg.dropout = 0.0;
  cfg.steps = 12;
  cfg.schedule = {3.0, 1.0, 8};
  cfg.objective.range = {2, 6};
  cfg.objective.temperature = 0.3;
  cfg.objective.r_cov = 0.4;
  cfg.objective.lambda_cov = 5.0;
  cfg.objective.lambda_loss = 10.0;
  cfg.learning_rate = 0.2;
  return cfg;
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("annealing schedule endpoints") {
  const AnnealSchedule hard{10.0, 3.5, 2000};
  CHECK(anneal_alpha(0, hard) == doctest::Approx(std::exp(-10.0)));
  CHECK(anneal_alpha(0, hard) == doctest::Approx(4.54e-5).epsilon(1e-3));
  CHECK(anneal_alpha(2000, hard) == doctest::Approx(std::exp(-3.5)));
  CHECK(anneal_alpha(5000, hard) == doctest::Approx(0.0302).epsilon(1e-3));
  CHECK(anneal_alpha(1000, hard) == doctest::Approx(std::exp(-6.75)));

  const AnnealSchedule soft{0.0, 3.5, 2000};
  CHECK(anneal_alpha(0, soft) == doctest::Approx(1.0));

  for (const auto& s : {hard, soft})
    for (int step : {0, 1, 500, 1999, 2000, 4000}) {
      const double a = anneal_alpha(step, s);
      CHECK(a > 0.0);
      CHECK(a <= 1.0);
    }

  // Literal reading: the schedule values are ln(alpha) themselves.
  const AnnealSchedule literal{-2.0, -1.0, 10};
  CHECK(anneal_alpha(0, literal, true) == doctest::Approx(std::exp(-2.0)));
  CHECK(anneal_alpha(10, literal, true) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(anneal_alpha(-1, literal), ConfigError);
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  const ModelContext ctx = oracle::make_context(3, 3);
  ModelParams params = testutil::random_params(ctx, 2, 211);
  const ModelParams before = params;
  auto vocab = oracle::make_vocab({{0, 1, 2}, {2, 1}}, 3);
  Chunk c = oracle::make_chunk({0, 2, 1, 1});
  std::vector<const Chunk*> batch = {&c};
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.dropout = 0.0;
  cfg.dim = 2;
  cfg.objective.range = {2, 3};
  cfg.objective.temperature = 0.5;
  train_step(batch, vocab, params, ctx, cfg, cfg.schedule, 0, 1);
  CHECK((params.feature_emb - before.feature_emb).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((params.mixture_logits - before.mixture_logits)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("one SGD step moves each coordinate by lr times the FD gradient") {
  const ModelContext ctx = oracle::make_context(3, 3);
  ModelParams params = testutil::random_params(ctx, 2, 223);
  const ModelParams before = params;
  auto vocab = oracle::make_vocab({{0, 1, 2}, {1, 0}}, 3);
  Chunk c = oracle::make_chunk({0, 2, 1});
  std::vector<const Chunk*> batch = {&c};

  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.dropout = 0.0;
  cfg.dim = 2;
  cfg.objective.range = {2, 3};
  cfg.objective.temperature = 0.5;
  cfg.objective.lambda_cov = 1.0;
  cfg.objective.r_cov = 0.9;
  cfg.schedule = {1.0, 1.0, 1};

  train_step(batch, vocab, params, ctx, cfg, cfg.schedule, 0, 1);

  ObjectiveConfig ocfg = cfg.objective;
  ocfg.alpha = anneal_alpha(0, cfg.schedule);
  const double eps = 1e-4;
  auto rng = make_rng(5, "pick");
  std::uniform_int_distribution<int> pick(
      0, static_cast<int>(before.num_parameters()) - 1);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t coord = pick(rng);
    ModelParams p = before;
    p.add_to_parameter(coord, eps);
    const double hi =
        total_objective(batch, vocab, mapping_matrix(p, ctx, 0.5), ocfg, 3)
            .total;
    p.add_to_parameter(coord, -2 * eps);
    const double lo =
        total_objective(batch, vocab, mapping_matrix(p, ctx, 0.5), ocfg, 3)
            .total;
    const double fd = (hi - lo) / (2 * eps);
    const double moved =
        params.get_parameter(coord) - before.get_parameter(coord);
    CHECK(moved == doctest::Approx(cfg.learning_rate * fd).epsilon(1e-3));
  }
}

TEST_CASE("training runs are deterministic given the seed") {
  const SynthBundle b = generate_synthetic(tiny_spec(3));
  const ModelContext ctx =
      ModelContext::build(b.vocab.alphabet, b.lost, b.features);
  TrainConfig cfg = tiny_train_config();
  cfg.dropout = 0.5;

  const auto dir = temp_dir("determinism");
  const SingleRun r1 = train_single_run(b.corpus, b.vocab, ctx, cfg,
                                        cfg.schedule, 42,
                                        (dir / "m1.tsv").string());
  const SingleRun r2 = train_single_run(b.corpus, b.vocab, ctx, cfg,
                                        cfg.schedule, 42,
                                        (dir / "m2.tsv").string());
  CHECK((r1.params.feature_emb - r2.params.feature_emb)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((r1.params.mixture_logits - r2.params.mixture_logits)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(r1.objective_trace == r2.objective_trace);

  std::ifstream f1(dir / "m1.tsv"), f2(dir / "m2.tsv");
  const std::string m1((std::istreambuf_iterator<char>(f1)), {});
  const std::string m2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(m1 == m2);
  CHECK(m1.find("step\tobjective\tcoverage\tomega_loss\talpha\n") == 0);

  // A different seed diverges.
  const SingleRun r3 = train_single_run(b.corpus, b.vocab, ctx, cfg,
                                        cfg.schedule, 43, "");
  CHECK((r1.params.feature_emb - r3.params.feature_emb)
            .cwiseAbs()
            .maxCoeff() > 0.0);
}

TEST_CASE("experiment grid of one returns that run; failures are survived") {
  const SynthBundle b = generate_synthetic(tiny_spec(9));
  const ModelContext ctx =
      ModelContext::build(b.vocab.alphabet, b.lost, b.features);
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 6;

  const auto dir1 = temp_dir("grid1");
  const auto res1 = run_experiment(b.corpus, b.vocab, ctx, cfg, {7},
                                   {cfg.schedule}, dir1.string(), nullptr);
  REQUIRE(res1.runs.size() == 1);
  CHECK(res1.best == 0);
  CHECK(!res1.runs[0].failed);
  CHECK(res1.runs[0].selection_value ==
        doctest::Approx(res1.runs[0].final_objective));
  CHECK(fs::exists(res1.runs[0].snapshot_path));
  CHECK(static_cast<int>(res1.runs[0].objective_trace.size()) == 6);

  // Second schedule poisons its runs with an out-of-range insertion
  // penalty; the healthy run must win.
  const auto dir2 = temp_dir("grid2");
  const auto res2 =
      run_experiment(b.corpus, b.vocab, ctx, cfg, {7},
                     {cfg.schedule, AnnealSchedule{-1e9, -1e9, 2}},
                     dir2.string(), nullptr);
  REQUIRE(res2.runs.size() == 2);
  CHECK(!res2.runs[0].failed);
  CHECK(res2.runs[1].failed);
  CHECK(!res2.runs[1].error.empty());
  CHECK(res2.best == 0);

  // Selection by P@K when gold spans are supplied.
  const auto dir3 = temp_dir("grid3");
  const auto res3 = run_experiment(b.corpus, b.vocab, ctx, cfg, {7, 8},
                                   {cfg.schedule}, dir3.string(), &b.gold);
  REQUIRE(res3.runs.size() == 2);
  for (const auto& r : res3.runs) {
    CHECK(r.selection_value >= 0.0);
    CHECK(r.selection_value <= 1.0);
  }
}

TEST_CASE("experiment selection matches an offline recomputation") {
  const SynthBundle b = generate_synthetic(tiny_spec(15));
  const ModelContext ctx =
      ModelContext::build(b.vocab.alphabet, b.lost, b.features);
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 8;
  const auto dir = temp_dir("grid_recompute");
  const auto res = run_experiment(b.corpus, b.vocab, ctx, cfg, {3, 4},
                                  {cfg.schedule}, dir.string(), &b.gold);
  for (const auto& r : res.runs) {
    REQUIRE(!r.failed);
    const Snapshot snap = load_snapshot(r.snapshot_path);
    const MappingMatrix m =
        mapping_matrix(snap.params, snap.ctx, snap.meta.temperature);
    const SegmentationParams sp = SegmentationParams::uniform(
        snap.meta.range, 1.0 / snap.ctx.lost.size(), snap.meta.alpha);
    const auto preds = predict_corpus(b.corpus, b.vocab, m, sp, cfg.eval_k);
    CHECK(precision_at_k(preds, b.gold, cfg.eval_k) ==
          doctest::Approx(r.selection_value));
  }
  const int best = res.best;
  for (const auto& r : res.runs)
    if (!r.failed)
      CHECK(res.runs[best].selection_value >= r.selection_value);
}

TEST_CASE("gradient check harness stays within tolerance on a toy model") {
  const SynthBundle b = generate_synthetic(tiny_spec(21));
  const ModelContext ctx =
      ModelContext::build(b.vocab.alphabet, b.lost, b.features);
  const ModelParams params = testutil::random_params(ctx, 2, 31);
  ObjectiveConfig cfg;
  cfg.range = {2, 5};
  cfg.temperature = 0.3;
  cfg.alpha = 0.2;
  cfg.lambda_cov = 5.0;
  cfg.r_cov = 0.8;
  auto chunks = b.corpus.all_chunks();
  chunks.resize(4);
  const auto report =
      gradient_check(params, ctx, chunks, b.vocab, cfg, 1e-4, 60, 17);
  CHECK(report.coords_checked >= 50);
  CHECK(report.max_rel_err <= 1e-4);
}

TEST_CASE("argmax mapping reads row maxima") {
  MappingMatrix m;
  m.probs.resize(2, 3);
  m.probs << 0.2, 0.7, 0.1, 0.6, 0.3, 0.1;
  m.log_probs = m.probs.array().log();
  const auto arg = argmax_mapping(m);
  REQUIRE(arg.size() == 2);
  CHECK(arg[0] == 1);
  CHECK(arg[1] == 0);
}

}  // TEST_SUITE
