// cogseg/alignment.cpp

#include "cogseg/alignment.hpp"

#include <algorithm>
#include <cmath>

namespace cogseg {

void fill_alignment_plane(const PlaneSpec& spec, double* plane) {
  const int cols = spec.max_i + 1;
  plane[0] = 0.0;
  for (int i = 1; i <= spec.max_i; ++i) plane[i] = kNegInf;

  for (int tau = 1; tau <= spec.stem_len; ++tau) {
    const double* prev = plane + (tau - 1) * cols;
    double* cur = plane + tau * cols;
    const int phone = spec.stem[tau - 1];
    const double* lp =
        spec.char_lp + static_cast<std::size_t>(phone) * spec.n + spec.start;
    const double del = spec.del_lp[phone];
    const double la = spec.log_alpha;

    cur[0] = prev[0] + del;
    if (spec.max_i >= 1) {
      const double sub = prev[0] + lp[0];
      const double dl = prev[1] + del;
      cur[1] = dl > sub ? dl : sub;
    }
    for (int i = 2; i <= spec.max_i; ++i) {
      double best = prev[i - 1] + lp[i - 1];       // substitute
      const double dl = prev[i] + del;             // delete
      if (dl > best) best = dl;
      const double ins = prev[i - 2] + lp[i - 2] + la + lp[i - 1];
      if (ins > best) best = ins;
      cur[i] = best;
    }
  }
}

ViterbiResult align_viterbi(std::span<const int> x, std::span<const int> y,
                            const MappingMatrix& m, double alpha) {
  if (x.empty() || y.empty())
    throw InvalidInput("align_viterbi: empty text or stem");
  if (alpha < 0.0 || alpha > 1.0)
    throw ConfigError("alpha must lie in [0, 1]");

  const int n = static_cast<int>(x.size());
  const int s = static_cast<int>(y.size());
  const int K = m.num_known();
  const int eps = m.epsilon_col();

  // Per-phone log prob rows restricted to the characters of x.
  std::vector<double> char_lp(static_cast<std::size_t>(K) * n);
  std::vector<double> del_lp(K);
  for (int k = 0; k < K; ++k) {
    del_lp[k] = m.log_probs(k, eps);
    for (int i = 0; i < n; ++i)
      char_lp[static_cast<std::size_t>(k) * n + i] = m.log_probs(k, x[i]);
  }

  PlaneSpec spec;
  spec.stem = y.data();
  spec.stem_len = s;
  spec.char_lp = char_lp.data();
  spec.n = n;
  spec.del_lp = del_lp.data();
  spec.start = 0;
  spec.max_i = n;
  spec.log_alpha = alpha > 0.0 ? std::log(alpha) : kNegInf;

  std::vector<double> plane(static_cast<std::size_t>(s + 1) * (n + 1));
  fill_alignment_plane(spec, plane.data());

  ViterbiResult r;
  r.log_prob = plane[static_cast<std::size_t>(s) * (n + 1) + n];
  if (r.log_prob == kNegInf) return r;

  r.alignment.ops.resize(s);
  walk_alignment_path(spec, plane.data(), n,
                      [&](int stem_pos, AlignmentOp::Kind kind, int text_idx) {
                        AlignmentOp op;
                        op.kind = kind;
                        op.stem_pos = stem_pos;
                        op.text_begin = kind == AlignmentOp::kDelete ? -1 : text_idx;
                        op.text_len = kind == AlignmentOp::kDelete     ? 0
                                      : kind == AlignmentOp::kSubstitute ? 1
                                                                         : 2;
                        r.alignment.ops[stem_pos] = op;
                      });
  return r;
}

double span_likelihood(std::span<const int> x, const Vocabulary& vocab,
                       const MappingMatrix& m, double alpha, int min_len,
                       int max_len) {
  if (vocab.stems.empty()) throw EmptyVocabulary();
  const int n = static_cast<int>(x.size());
  if (n < min_len || n > max_len)
    throw SpanLengthOutOfRange(n, min_len, max_len);
  double sum = 0.0;
  for (const auto& stem : vocab.stems) {
    const double lp = align_viterbi(x, stem.phones, m, alpha).log_prob;
    if (lp != kNegInf) sum += std::exp(lp);
  }
  return sum / static_cast<double>(vocab.stems.size());
}

std::vector<ScoredStem> align_topk_stems(std::span<const int> x,
                                         const Vocabulary& vocab,
                                         const MappingMatrix& m, double alpha,
                                         int k) {
  if (k < 1) throw InvalidK(k);
  if (vocab.stems.empty()) throw EmptyVocabulary();
  const double n = static_cast<double>(x.size());
  std::vector<ScoredStem> scored;
  for (int v = 0; v < vocab.size(); ++v) {
    const double lp = align_viterbi(x, vocab.stems[v].phones, m, alpha).log_prob;
    if (lp != kNegInf) scored.push_back({v, std::exp(lp / n)});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredStem& a, const ScoredStem& b) {
                     return a.score > b.score;
                   });
  if (static_cast<int>(scored.size()) > k) scored.resize(k);
  return scored;
}

bool alignment_is_valid(const Alignment& a, int stem_len, int text_len) {
  if (static_cast<int>(a.ops.size()) != stem_len) return false;
  int next = 0;  // next uncovered text index
  for (int tau = 0; tau < stem_len; ++tau) {
    const AlignmentOp& op = a.ops[tau];
    if (op.stem_pos != tau) return false;
    switch (op.kind) {
      case AlignmentOp::kDelete:
        if (op.text_len != 0) return false;
        break;
      case AlignmentOp::kSubstitute:
        if (op.text_len != 1 || op.text_begin != next) return false;
        next += 1;
        break;
      case AlignmentOp::kInsert:
        if (op.text_len != 2 || op.text_begin != next) return false;
        next += 2;
        break;
    }
  }
  return next == text_len;
}

}  // namespace cogseg
