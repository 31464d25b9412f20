// cogseg/training.hpp
//
// One-step SGD training on the full objective, insertion-penalty annealing,
// multi-restart experiment orchestration and the finite-difference gradient
// harness.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cogseg/corpus.hpp"
#include "cogseg/objective.hpp"

namespace cogseg {

// The insertion penalty s = -ln(alpha) is interpolated linearly over the
// first `steps` steps and held constant afterwards.
struct AnnealSchedule {
  double s_begin = 10.0;
  double s_end = 3.5;
  int steps = 2000;
};

// literal_ln_alpha treats the schedule values as ln(alpha) directly instead
// of as the penalty magnitude.
double anneal_alpha(int step, const AnnealSchedule& schedule,
                    bool literal_ln_alpha = false);

struct TrainConfig {
  double learning_rate = 0.2;
  double grad_clip = 0.0;  // max gradient L2 norm; 0 disables clipping
  double dropout = 0.5;
  AnnealSchedule schedule;
  bool literal_ln_alpha = false;
  int extra_steps = 1000;
  int steps = -1;  // total steps; -1 = schedule.steps + extra_steps
  int restarts = 5;
  std::uint64_t seed = 0;
  int batch_size = 0;  // 0 = full corpus every step
  int dim = 100;
  bool feature_based = true;
  int workers = 1;
  int snapshot_every = 0;  // 0 = final snapshot only
  int eval_k = 10;
  ObjectiveConfig objective;

  int total_steps() const {
    return steps >= 0 ? steps : schedule.steps + extra_steps;
  }
};

struct StepMetrics {
  double objective = 0.0;
  double coverage_ratio = 0.0;
  double omega_loss = 0.0;
  double alpha = 1.0;
};

// One gradient-ascent step at the given global step index. The dropout mask
// (when dropout > 0) is derived from (run_seed, step).
StepMetrics train_step(const std::vector<const Chunk*>& batch,
                       const Vocabulary& vocab, ModelParams& params,
                       const ModelContext& ctx, const TrainConfig& cfg,
                       const AnnealSchedule& schedule, int step,
                       std::uint64_t run_seed);

struct RunReport {
  std::string tag;
  std::uint64_t run_seed = 0;
  AnnealSchedule schedule;
  std::vector<double> objective_trace;
  std::string snapshot_path;
  std::string metrics_path;
  double selection_value = kNegInf;
  double final_objective = kNegInf;
  bool failed = false;
  std::string error;
};

struct ExperimentResult {
  std::vector<RunReport> runs;
  int best = -1;  // index into runs, -1 if all failed
};

// Runs the full (seeds x schedules) grid. Selection is by P@eval_k against
// `gold` when provided, otherwise by final objective value. Per-run metrics
// and snapshots are written under out_dir. `progress`, when set, is invoked
// after every run.
ExperimentResult run_experiment(
    const Corpus& corpus, const Vocabulary& vocab, const ModelContext& ctx,
    const TrainConfig& cfg, const std::vector<std::uint64_t>& seeds,
    const std::vector<AnnealSchedule>& schedules, const std::string& out_dir,
    const std::vector<GoldSpan>* gold,
    const std::function<void(const RunReport&)>& progress = nullptr);

// Trains a single run in memory and returns (params, trace).
struct SingleRun {
  ModelParams params;
  std::vector<double> objective_trace;
  double final_alpha = 1.0;
};
SingleRun train_single_run(const Corpus& corpus, const Vocabulary& vocab,
                           const ModelContext& ctx, const TrainConfig& cfg,
                           const AnnealSchedule& schedule,
                           std::uint64_t run_seed,
                           const std::string& metrics_path = "");

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_coordinate = 0;
  int coords_checked = 0;
};

// Central finite differences on a random subset of parameter coordinates
// (dropout disabled). eps is the FD step.
GradCheckReport gradient_check(const ModelParams& params,
                               const ModelContext& ctx,
                               const std::vector<const Chunk*>& batch,
                               const Vocabulary& vocab,
                               const ObjectiveConfig& cfg, double eps,
                               int num_coords, std::uint64_t seed);

// Per-phone argmax outcome of the mapping rows (may be the deletion column).
std::vector<int> argmax_mapping(const MappingMatrix& m);

}  // namespace cogseg
