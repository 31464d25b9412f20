// cogseg/alignment.hpp
//
// Monotonic span-to-stem alignment: Viterbi max over edit-distance style
// alignments (substitute / delete / insert) on the (stem position, consumed
// text) lattice, in log space. Insertions emit two adjacent text characters
// from one stem position and pay a multiplicative penalty alpha.

#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "cogseg/corpus.hpp"
#include "cogseg/phonetics.hpp"

namespace cogseg {

struct AlignmentOp {
  enum Kind { kSubstitute, kDelete, kInsert };
  Kind kind;
  int stem_pos;    // 0-based position in the stem
  int text_begin;  // first text index covered (unused for deletions)
  int text_len;    // 0, 1, or 2
};

struct Alignment {
  std::vector<AlignmentOp> ops;  // one per stem position, in order
};

struct ViterbiResult {
  double log_prob = kNegInf;
  Alignment alignment;
};

// Best alignment of text x to stem y. Returns -inf log_prob (and an empty
// alignment) when no valid alignment exists.
ViterbiResult align_viterbi(std::span<const int> x, std::span<const int> y,
                            const MappingMatrix& m, double alpha);

// Mean over stems of exp(align_viterbi): Pr(x | matched span) under a
// uniform stem prior. Linear-domain probability in [0, 1].
double span_likelihood(std::span<const int> x, const Vocabulary& vocab,
                       const MappingMatrix& m, double alpha, int min_len,
                       int max_len);

struct ScoredStem {
  int stem_index;
  double score;  // exp(log_prob / |x|), length-normalized
};

// Top-k stems by length-normalized alignment score, ties broken by
// vocabulary order; stems with no valid alignment are omitted.
std::vector<ScoredStem> align_topk_stems(std::span<const int> x,
                                         const Vocabulary& vocab,
                                         const MappingMatrix& m, double alpha,
                                         int k);

// True iff the op sequence is a valid alignment of |x| = text_len characters:
// monotone, covering every index exactly once, one op per stem position.
bool alignment_is_valid(const Alignment& a, int stem_len, int text_len);

// ---------------------------------------------------------------------------
// Low-level kernel shared with the boundary DPs. Scores all span lengths
// from one start position against one stem in a single plane fill.
// ---------------------------------------------------------------------------

// plane has (stem_len + 1) rows and (max_i + 1) columns, row-major.
// char_lp[pos] = log Pr(chunk char at pos | phone), per stem position row
// selected via phone_lp below. After the fill, plane[stem_len][l] is the best
// log alignment score of the span [start, start + l).
struct PlaneSpec {
  const int* stem = nullptr;      // stem phone ids
  int stem_len = 0;
  const double* char_lp = nullptr;  // K x n row-major table for the chunk
  int n = 0;                        // chunk length (row stride of char_lp)
  const double* del_lp = nullptr;   // per phone log Pr(deletion | phone)
  int start = 0;
  int max_i = 0;  // widest span length to score
  double log_alpha = kNegInf;
};

void fill_alignment_plane(const PlaneSpec& spec, double* plane);

// Walks the argmax path for the span of length `len`, invoking
// visit(stem_pos, op_kind, text_index_0based_into_chunk) per op, from the
// last stem position to the first.
template <typename Visitor>
void walk_alignment_path(const PlaneSpec& spec, const double* plane, int len,
                         Visitor&& visit) {
  const int cols = spec.max_i + 1;
  int tau = spec.stem_len;
  int i = len;
  while (tau > 0) {
    const double v = plane[tau * cols + i];
    const int phone = spec.stem[tau - 1];
    const double* lp = spec.char_lp + static_cast<std::size_t>(phone) * spec.n;
    const double del = plane[(tau - 1) * cols + i] + spec.del_lp[phone];
    if (i >= 1) {
      const double sub = plane[(tau - 1) * cols + (i - 1)] + lp[spec.start + i - 1];
      if (sub == v) {
        visit(tau - 1, AlignmentOp::kSubstitute, spec.start + i - 1);
        --tau;
        --i;
        continue;
      }
    }
    if (del == v) {
      visit(tau - 1, AlignmentOp::kDelete, -1);
      --tau;
      continue;
    }
    visit(tau - 1, AlignmentOp::kInsert, spec.start + i - 2);
    --tau;
    i -= 2;
  }
}

}  // namespace cogseg
