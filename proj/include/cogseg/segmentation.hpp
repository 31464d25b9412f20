// cogseg/segmentation.hpp
//
// Word-boundary dynamic programs over a chunk: the marginal likelihood of
// the tag-sequence model, posterior expectations of span quality and
// coverage, the Viterbi segmentation decode, and span-prediction
// extraction. All forward passes run in log space; backward passes use
// signed log arithmetic.

#pragma once

#include <Eigen/Core>
#include <vector>

#include "cogseg/alignment.hpp"
#include "cogseg/corpus.hpp"

namespace cogseg {

struct LengthRange {
  int min_len = 4;
  int max_len = 10;

  int num_lengths() const { return max_len - min_len + 1; }
};

// Prior over per-character tags: O (unmatched) and span-end tags, one per
// length in the range. Linear probabilities; zeros are allowed (tests use
// them to force segmentations).
struct TagPrior {
  double other = 0.0;
  double end = 0.0;

  static TagPrior uniform(const LengthRange& range) {
    const double p = 1.0 / (1.0 + range.num_lengths());
    return TagPrior{p, p};
  }
};

struct SegmentationParams {
  double alpha = 1.0;
  TagPrior prior;
  double p0 = 0.0;  // uniform unmatched-character probability
  LengthRange range;

  static SegmentationParams uniform(const LengthRange& range, double p0,
                                    double alpha) {
    return SegmentationParams{alpha, TagPrior::uniform(range), p0, range};
  }
};

struct DecodedSpan {
  int start = 0;  // chunk-local indices
  int end = 0;
  int best_stem = -1;
};

struct SegmentationDecode {
  std::vector<DecodedSpan> spans;
  double log_score = kNegInf;
};

struct ChunkStats {
  double log_px = kNegInf;
  double quality = 0.0;
  double coverage = 0.0;  // expected matched character count
};

// Differentiation target of the boundary DPs.
enum class BackwardMode { kMarginal, kQuality, kCoverage };

// Engine holding read-only model inputs plus reusable scratch. One instance
// per worker; chunks are processed one at a time.
class SegmentationEngine {
 public:
  SegmentationEngine(const Vocabulary& vocab, const MappingMatrix& m,
                     const SegmentationParams& params);

  // Forward DPs only.
  ChunkStats forward(const Chunk& chunk);

  // Forward plus reverse-mode accumulation of d(quality) and d(coverage)
  // w.r.t. the mapping log-probabilities, added into g_quality / g_coverage
  // (each K x (L+1)).
  ChunkStats forward_backward(const Chunk& chunk, Eigen::MatrixXd& g_quality,
                              Eigen::MatrixXd& g_coverage);

  // Forward plus the gradient of one target (marginal log-likelihood,
  // quality or coverage) w.r.t. the mapping log-probabilities.
  ChunkStats forward_backward_target(const Chunk& chunk, BackwardMode mode,
                                     Eigen::MatrixXd& g);

  SegmentationDecode decode(const Chunk& chunk);

  // Top-k stems for every decoded span.
  std::vector<SpanPrediction> predictions(const Corpus& corpus,
                                          const Chunk& chunk, int k);

 private:
  void score_spans(const Chunk& chunk);
  void run_forward(int n);
  // Adjoint pass for one target; fills w (indexed [l * (n+1) + end]) with
  // d(target)/d log span-likelihood.
  void run_backward(int n, BackwardMode mode, std::vector<double>& w);
  // Walks argmax paths of every span, adding w1/w2-weighted counts into
  // g1/g2 (either pair may be null).
  void accumulate_path_grads(const Chunk& chunk, const std::vector<double>* w1,
                             Eigen::MatrixXd* g1,
                             const std::vector<double>* w2,
                             Eigen::MatrixXd* g2);

  const Vocabulary& vocab_;
  const MappingMatrix& m_;
  SegmentationParams params_;

  double log_po_ = kNegInf;
  double log_pe_ = kNegInf;
  double log_p0_ = kNegInf;
  double log_alpha_ = kNegInf;
  double log_vocab_ = 0.0;
  int max_stem_len_ = 0;

  // Per-chunk scratch (sized in score_spans).
  int n_ = 0;
  int max_span_ = 0;
  std::vector<double> char_lp_;   // K x n
  std::vector<double> del_lp_;    // K
  std::vector<double> planes_;    // per (start, stem) alignment planes
  std::vector<int> plane_max_i_;  // fill extent per (start, stem)
  std::vector<double> span_lse_;  // [l][end]: log span likelihood (with prior)
  std::vector<double> lp_, lq_, lr_;  // boundary DP arrays
  std::vector<double> w_quality_, w_coverage_;
  std::vector<double> cand_;  // logsumexp scratch

  std::size_t plane_stride_ = 0;
  int pair_cols_ = 0;

  double plane_score(int start, int stem, int len) const;
  const double* plane_ptr(int start, int stem) const;
};

// --- spec-shaped single-chunk operations -----------------------------------

double marginal_log_likelihood(const Chunk& chunk, const Vocabulary& vocab,
                               const MappingMatrix& m,
                               const SegmentationParams& params);

double expected_quality(const Chunk& chunk, const Vocabulary& vocab,
                        const MappingMatrix& m,
                        const SegmentationParams& params);

double expected_coverage(const Chunk& chunk, const Vocabulary& vocab,
                         const MappingMatrix& m,
                         const SegmentationParams& params);

SegmentationDecode viterbi_segmentation(const Chunk& chunk,
                                        const Vocabulary& vocab,
                                        const MappingMatrix& m,
                                        const SegmentationParams& params);

std::vector<SpanPrediction> extract_predictions(const Corpus& corpus,
                                                const Chunk& chunk,
                                                const Vocabulary& vocab,
                                                const MappingMatrix& m,
                                                const SegmentationParams& params,
                                                int k);

// Value plus full parameter gradient of one boundary-DP target, for the
// gradient-correctness checks. Dropout is not applied.
double boundary_target_with_grad(const Chunk& chunk, const Vocabulary& vocab,
                                 const ModelParams& params,
                                 const ModelContext& ctx, double temperature,
                                 const SegmentationParams& sp,
                                 BackwardMode mode, ParamGrads& out);

// All predictions for a corpus, sorted by (inscription, start, -confidence).
std::vector<SpanPrediction> predict_corpus(const Corpus& corpus,
                                           const Vocabulary& vocab,
                                           const MappingMatrix& m,
                                           const SegmentationParams& params,
                                           int k);

}  // namespace cogseg
