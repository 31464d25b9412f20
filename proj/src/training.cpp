// cogseg/training.cpp

#include "cogseg/training.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "cogseg/evaluation.hpp"
#include "cogseg/snapshot.hpp"

namespace cogseg {

double anneal_alpha(int step, const AnnealSchedule& schedule,
                    bool literal_ln_alpha) {
  if (step < 0) throw ConfigError("negative step");
  double s;
  if (schedule.steps <= 0 || step >= schedule.steps) {
    s = schedule.s_end;
  } else {
    const double t = static_cast<double>(step) / schedule.steps;
    s = schedule.s_begin + t * (schedule.s_end - schedule.s_begin);
  }
  return literal_ln_alpha ? std::exp(s) : std::exp(-s);
}

StepMetrics train_step(const std::vector<const Chunk*>& batch,
                       const Vocabulary& vocab, ModelParams& params,
                       const ModelContext& ctx, const TrainConfig& cfg,
                       const AnnealSchedule& schedule, int step,
                       std::uint64_t run_seed) {
  ObjectiveConfig ocfg = cfg.objective;
  ocfg.alpha = anneal_alpha(step, schedule, cfg.literal_ln_alpha);

  DropoutMask mask;
  const DropoutMask* mask_ptr = nullptr;
  if (cfg.dropout > 0.0) {
    mask = DropoutMask::sample(
        ctx.known.size(), params.known_dim(), cfg.dropout,
        derive_stream(run_seed, "dropout-step-" + std::to_string(step)));
    mask_ptr = &mask;
  }

  ParamGrads grads;
  grads.init_like(params);
  ObjectiveBreakdown b = objective_gradient(batch, vocab, params, ctx, ocfg,
                                            mask_ptr, grads, cfg.workers);
  if (cfg.grad_clip > 0.0) {
    const double norm = std::sqrt(grads.squared_norm());
    if (norm > cfg.grad_clip) grads.scale(cfg.grad_clip / norm);
  }
  if (cfg.learning_rate != 0.0) grads.axpy_into(params, cfg.learning_rate);

  StepMetrics m;
  m.objective = b.total;
  m.coverage_ratio = b.coverage_ratio;
  m.omega_loss = b.omega_loss;
  m.alpha = ocfg.alpha;
  return m;
}

namespace {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SingleRun train_single_run(const Corpus& corpus, const Vocabulary& vocab,
                           const ModelContext& ctx, const TrainConfig& cfg,
                           const AnnealSchedule& schedule,
                           std::uint64_t run_seed,
                           const std::string& metrics_path) {
  SingleRun run;
  run.params = init_params(ctx, cfg.dim, cfg.feature_based, cfg.dropout,
                           run_seed);
  const auto chunks = corpus.all_chunks();
  if (chunks.empty()) throw DataError("corpus has no chunks");
  const int total = cfg.total_steps();

  std::ofstream metrics;
  if (!metrics_path.empty()) {
    metrics.open(metrics_path);
    if (!metrics)
      throw DataError("cannot write metrics file: " + metrics_path);
    metrics << "step\tobjective\tcoverage\tomega_loss\talpha\n";
  }

  const bool full_batch = cfg.batch_size <= 0 ||
                          cfg.batch_size >= static_cast<int>(chunks.size());
  std::vector<std::size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = 0;
  int epoch = 0;

  std::vector<const Chunk*> batch;
  for (int step = 0; step < total; ++step) {
    const std::vector<const Chunk*>* batch_ptr = &chunks;
    if (!full_batch) {
      if (cursor + cfg.batch_size > order.size()) {
        auto rng =
            make_rng(run_seed, "shuffle-epoch-" + std::to_string(epoch++));
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.clear();
      for (int i = 0; i < cfg.batch_size; ++i)
        batch.push_back(chunks[order[cursor + i]]);
      cursor += cfg.batch_size;
      batch_ptr = &batch;
    }
    StepMetrics m = train_step(*batch_ptr, vocab, run.params, ctx, cfg,
                               schedule, step, run_seed);
    run.objective_trace.push_back(m.objective);
    if (metrics.is_open())
      metrics << step << '\t' << fmt_g17(m.objective) << '\t'
              << fmt_g17(m.coverage_ratio) << '\t' << fmt_g17(m.omega_loss)
              << '\t' << fmt_g17(m.alpha) << '\n';
  }
  run.final_alpha = anneal_alpha(std::max(total - 1, 0), schedule,
                                 cfg.literal_ln_alpha);
  if (total == 0)
    run.final_alpha = anneal_alpha(0, schedule, cfg.literal_ln_alpha);
  return run;
}

ExperimentResult run_experiment(
    const Corpus& corpus, const Vocabulary& vocab, const ModelContext& ctx,
    const TrainConfig& cfg, const std::vector<std::uint64_t>& seeds,
    const std::vector<AnnealSchedule>& schedules, const std::string& out_dir,
    const std::vector<GoldSpan>* gold,
    const std::function<void(const RunReport&)>& progress) {
  if (seeds.empty() || schedules.empty())
    throw ConfigError("experiment grid is empty");
  std::filesystem::create_directories(out_dir);

  ExperimentResult result;
  double best_value = kNegInf;
  for (std::size_t hi = 0; hi < schedules.size(); ++hi) {
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      RunReport report;
      report.run_seed = seeds[si];
      report.schedule = schedules[hi];
      report.tag =
          "seed" + std::to_string(seeds[si]) + "-sched" + std::to_string(hi);
      report.metrics_path = out_dir + "/metrics_" + report.tag + ".tsv";
      report.snapshot_path = out_dir + "/snapshot_" + report.tag + ".bin";
      try {
        SingleRun run = train_single_run(corpus, vocab, ctx, cfg,
                                         schedules[hi], seeds[si],
                                         report.metrics_path);
        SnapshotMeta meta{cfg.objective.temperature, run.final_alpha,
                          cfg.objective.range};
        save_snapshot(report.snapshot_path, run.params, ctx, meta);
        report.objective_trace = std::move(run.objective_trace);
        report.final_objective = report.objective_trace.empty()
                                     ? 0.0
                                     : report.objective_trace.back();
        if (gold != nullptr && !gold->empty()) {
          const MappingMatrix m =
              mapping_matrix(run.params, ctx, cfg.objective.temperature);
          const SegmentationParams sp = SegmentationParams::uniform(
              cfg.objective.range, 1.0 / ctx.lost.size(), run.final_alpha);
          const auto preds =
              predict_corpus(corpus, vocab, m, sp, cfg.eval_k);
          report.selection_value = precision_at_k(preds, *gold, cfg.eval_k);
        } else {
          report.selection_value = report.final_objective;
        }
      } catch (const Error& e) {
        report.failed = true;
        report.error = e.what();
      }
      if (!report.failed && report.selection_value > best_value) {
        best_value = report.selection_value;
        result.best = static_cast<int>(result.runs.size());
      }
      if (progress) progress(report);
      result.runs.push_back(std::move(report));
    }
  }
  return result;
}

GradCheckReport gradient_check(const ModelParams& params,
                               const ModelContext& ctx,
                               const std::vector<const Chunk*>& batch,
                               const Vocabulary& vocab,
                               const ObjectiveConfig& cfg, double eps,
                               int num_coords, std::uint64_t seed) {
  ParamGrads grads;
  grads.init_like(params);
  objective_gradient(batch, vocab, params, ctx, cfg, nullptr, grads, 1);

  const std::size_t n = params.num_parameters();
  std::vector<std::size_t> coords(n);
  std::iota(coords.begin(), coords.end(), 0);
  if (num_coords > 0 && static_cast<std::size_t>(num_coords) < n) {
    auto rng = make_rng(seed, "gradcheck");
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(num_coords);
  }

  auto eval = [&](const ModelParams& p) {
    const MappingMatrix m = mapping_matrix(p, ctx, cfg.temperature);
    return total_objective(batch, vocab, m, cfg, ctx.lost.size()).total;
  };

  GradCheckReport report;
  report.coords_checked = static_cast<int>(coords.size());
  for (std::size_t c : coords) {
    ModelParams perturbed = params;
    perturbed.add_to_parameter(c, eps);
    const double hi = eval(perturbed);
    perturbed.add_to_parameter(c, -2.0 * eps);
    const double lo = eval(perturbed);
    const double fd = (hi - lo) / (2.0 * eps);
    const double analytic = grads.get_parameter(c);
    const double denom = std::max(std::fabs(analytic), std::fabs(fd));
    const double rel = denom < 1e-7 ? 0.0 : std::fabs(analytic - fd) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_coordinate = c;
    }
  }
  return report;
}

std::vector<int> argmax_mapping(const MappingMatrix& m) {
  std::vector<int> out(m.num_known());
  for (int i = 0; i < m.num_known(); ++i) {
    Eigen::Index arg;
    m.probs.row(i).maxCoeff(&arg);
    out[i] = static_cast<int>(arg);
  }
  return out;
}

}  // namespace cogseg
