// cogseg/objective.hpp
//
// Training objective: summed expected span quality minus the coverage
// hinge, the sound-preservation penalty and (optionally) the mapping
// supervision term. The objective is maximized; penalty terms subtract.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <vector>

#include "cogseg/segmentation.hpp"

namespace cogseg {

struct ObjectiveConfig {
  double r_cov = 0.2;
  double lambda_cov = 10.0;
  double lambda_loss = 100.0;
  double lambda_sup = 0.0;
  double alpha = 1.0;
  double temperature = 0.2;
  LengthRange range{4, 10};
  // Coverage ratio over the batch: matched chars / total chars by default;
  // the per-text variant divides the summed expectations by the number of
  // distinct inscriptions instead.
  bool coverage_per_text = false;
  std::map<int, int> supervision;  // phone id -> lost char id
  int chunk_cap = 100;             // chunks longer than this are skipped

  SegmentationParams segmentation_params(int lost_alphabet_size) const {
    return SegmentationParams::uniform(range, 1.0 / lost_alphabet_size, alpha);
  }
};

double coverage_penalty(double achieved_ratio, double r_cov);

// Sum over lost characters of the squared deviation of the column mass from
// one; the deletion column is excluded.
double sound_loss(const MappingMatrix& m);
double sound_loss_grad(const MappingMatrix& m, Eigen::MatrixXd& g_probs);

struct ObjectiveBreakdown {
  double total = 0.0;
  double quality_sum = 0.0;
  double coverage_sum = 0.0;
  double coverage_ratio = 0.0;
  double omega_cov = 0.0;
  double omega_loss = 0.0;
  double sup_loss = 0.0;
  std::int64_t total_chars = 0;
  int chunks_used = 0;
  int chunks_skipped = 0;
};

// Forward evaluation with a precomputed mapping matrix.
ObjectiveBreakdown total_objective(const std::vector<const Chunk*>& batch,
                                   const Vocabulary& vocab,
                                   const MappingMatrix& m,
                                   const ObjectiveConfig& cfg,
                                   int lost_alphabet_size);

// Forward plus full parameter gradient (ascent direction). Chunk work is
// spread over `workers` threads with a fixed-stride assignment and combined
// in worker order, so results are deterministic for a fixed worker count.
ObjectiveBreakdown objective_gradient(const std::vector<const Chunk*>& batch,
                                      const Vocabulary& vocab,
                                      const ModelParams& params,
                                      const ModelContext& ctx,
                                      const ObjectiveConfig& cfg,
                                      const DropoutMask* mask, ParamGrads& out,
                                      int workers = 1);

}  // namespace cogseg
