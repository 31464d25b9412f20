// cogseg/objective.cpp

#include "cogseg/objective.hpp"

#include <algorithm>
#include <set>
#include <thread>

namespace cogseg {

double coverage_penalty(double achieved_ratio, double r_cov) {
  return std::max(r_cov - achieved_ratio, 0.0);
}

double sound_loss(const MappingMatrix& m) {
  double loss = 0.0;
  for (int j = 0; j < m.epsilon_col(); ++j) {
    const double d = m.probs.col(j).sum() - 1.0;
    loss += d * d;
  }
  return loss;
}

double sound_loss_grad(const MappingMatrix& m, Eigen::MatrixXd& g_probs) {
  double loss = 0.0;
  for (int j = 0; j < m.epsilon_col(); ++j) {
    const double d = m.probs.col(j).sum() - 1.0;
    loss += d * d;
    g_probs.col(j).array() += 2.0 * d;
  }
  return loss;
}

namespace {

struct BatchAccumulator {
  double quality_sum = 0.0;
  double coverage_sum = 0.0;
  std::int64_t total_chars = 0;
  int chunks_used = 0;
  int chunks_skipped = 0;
  Eigen::MatrixXd g_quality;
  Eigen::MatrixXd g_coverage;
};

// Runs forward (and optionally backward) chunk DPs over a stride-partitioned
// slice of the batch.
void process_slice(const std::vector<const Chunk*>& batch, int worker,
                   int stride, const Vocabulary& vocab, const MappingMatrix& m,
                   const SegmentationParams& sp, int chunk_cap, bool backward,
                   BatchAccumulator& acc) {
  SegmentationEngine engine(vocab, m, sp);
  for (std::size_t i = worker; i < batch.size();
       i += static_cast<std::size_t>(stride)) {
    const Chunk& chunk = *batch[i];
    if (chunk.size() > chunk_cap) {
      ++acc.chunks_skipped;
      continue;
    }
    ChunkStats st = backward
                        ? engine.forward_backward(chunk, acc.g_quality,
                                                  acc.g_coverage)
                        : engine.forward(chunk);
    if (!is_finite(st.quality) || !is_finite(st.coverage))
      throw NonFiniteError("chunk " + std::to_string(i) + " of inscription " +
                           std::to_string(chunk.inscription_index));
    acc.quality_sum += st.quality;
    acc.coverage_sum += st.coverage;
    acc.total_chars += chunk.size();
    ++acc.chunks_used;
  }
}

int count_texts(const std::vector<const Chunk*>& batch, int chunk_cap) {
  std::set<int> ids;
  for (const Chunk* c : batch)
    if (c->size() <= chunk_cap) ids.insert(c->inscription_index);
  return static_cast<int>(ids.size());
}

ObjectiveBreakdown finish(const ObjectiveConfig& cfg, BatchAccumulator& acc,
                          int num_texts, double omega_loss, double sup_loss) {
  ObjectiveBreakdown b;
  b.quality_sum = acc.quality_sum;
  b.coverage_sum = acc.coverage_sum;
  b.total_chars = acc.total_chars;
  b.chunks_used = acc.chunks_used;
  b.chunks_skipped = acc.chunks_skipped;
  if (acc.total_chars <= 0)
    throw DataError("coverage ratio undefined: batch has no characters");
  const double denom = cfg.coverage_per_text
                           ? static_cast<double>(num_texts)
                           : static_cast<double>(acc.total_chars);
  b.coverage_ratio = acc.coverage_sum / denom;
  b.omega_cov = coverage_penalty(b.coverage_ratio, cfg.r_cov);
  b.omega_loss = omega_loss;
  b.sup_loss = sup_loss;
  b.total = b.quality_sum - cfg.lambda_cov * b.omega_cov -
            cfg.lambda_loss * b.omega_loss - cfg.lambda_sup * b.sup_loss;
  return b;
}

}  // namespace

ObjectiveBreakdown total_objective(const std::vector<const Chunk*>& batch,
                                   const Vocabulary& vocab,
                                   const MappingMatrix& m,
                                   const ObjectiveConfig& cfg,
                                   int lost_alphabet_size) {
  if (batch.empty()) throw DataError("empty batch");
  const SegmentationParams sp = cfg.segmentation_params(lost_alphabet_size);
  BatchAccumulator acc;
  process_slice(batch, 0, 1, vocab, m, sp, cfg.chunk_cap, false, acc);
  const double omega_loss = sound_loss(m);
  const double sup = mapping_supervision_loss(m, cfg.supervision);
  return finish(cfg, acc, count_texts(batch, cfg.chunk_cap), omega_loss, sup);
}

ObjectiveBreakdown objective_gradient(const std::vector<const Chunk*>& batch,
                                      const Vocabulary& vocab,
                                      const ModelParams& params,
                                      const ModelContext& ctx,
                                      const ObjectiveConfig& cfg,
                                      const DropoutMask* mask, ParamGrads& out,
                                      int workers) {
  if (batch.empty()) throw DataError("empty batch");
  const int K = ctx.known.size();
  const int C = ctx.lost.num_outcomes();
  MappingForward fwd = mapping_forward(params, ctx, cfg.temperature, mask);
  const SegmentationParams sp = cfg.segmentation_params(ctx.lost.size());

  workers = std::max(1, workers);
  std::vector<BatchAccumulator> accs(workers);
  for (auto& a : accs) {
    a.g_quality.setZero(K, C);
    a.g_coverage.setZero(K, C);
  }
  if (workers == 1) {
    process_slice(batch, 0, 1, vocab, fwd.matrix, sp, cfg.chunk_cap, true,
                  accs[0]);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        try {
          process_slice(batch, w, workers, vocab, fwd.matrix, sp,
                        cfg.chunk_cap, true, accs[w]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  // Ordered reduction keeps results bit-identical for a fixed worker count.
  BatchAccumulator total = std::move(accs[0]);
  for (int w = 1; w < workers; ++w) {
    total.quality_sum += accs[w].quality_sum;
    total.coverage_sum += accs[w].coverage_sum;
    total.total_chars += accs[w].total_chars;
    total.chunks_used += accs[w].chunks_used;
    total.chunks_skipped += accs[w].chunks_skipped;
    total.g_quality += accs[w].g_quality;
    total.g_coverage += accs[w].g_coverage;
  }

  Eigen::MatrixXd g_log = Eigen::MatrixXd::Zero(K, C);
  Eigen::MatrixXd g_sup = Eigen::MatrixXd::Zero(K, C);
  const double sup =
      mapping_supervision_loss_grad(fwd.matrix, cfg.supervision, g_sup);
  Eigen::MatrixXd g_omega = Eigen::MatrixXd::Zero(K, C);
  const double omega_loss = sound_loss_grad(fwd.matrix, g_omega);

  ObjectiveBreakdown b =
      finish(cfg, total, count_texts(batch, cfg.chunk_cap), omega_loss, sup);

  g_log += total.g_quality;
  if (b.omega_cov > 0.0) {
    const double denom =
        cfg.coverage_per_text
            ? static_cast<double>(count_texts(batch, cfg.chunk_cap))
            : static_cast<double>(total.total_chars);
    g_log += (cfg.lambda_cov / denom) * total.g_coverage;
  }
  g_log -= cfg.lambda_sup * g_sup;
  Eigen::MatrixXd g_probs = -cfg.lambda_loss * g_omega;

  mapping_backward(fwd, params, ctx, g_log, g_probs, out);
  if (!is_finite(b.total)) throw NonFiniteError("objective value");
  if (!out.all_finite()) throw NonFiniteError("objective gradient");
  return b;
}

}  // namespace cogseg
