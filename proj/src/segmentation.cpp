// cogseg/segmentation.cpp

#include "cogseg/segmentation.hpp"

#include <algorithm>
#include <cmath>

namespace cogseg {

namespace {

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

}  // namespace

SegmentationEngine::SegmentationEngine(const Vocabulary& vocab,
                                       const MappingMatrix& m,
                                       const SegmentationParams& params)
    : vocab_(vocab), m_(m), params_(params) {
  if (params.range.min_len < 1 || params.range.max_len < params.range.min_len)
    throw ConfigError("invalid span length range");
  if (params.alpha < 0.0 || params.alpha > 1.0)
    throw ConfigError("alpha must lie in [0, 1]");
  log_po_ = safe_log(params.prior.other);
  log_pe_ = safe_log(params.prior.end);
  log_p0_ = safe_log(params.p0);
  log_alpha_ = safe_log(params.alpha);
  log_vocab_ = std::log(static_cast<double>(std::max(1, vocab.size())));
  max_stem_len_ = vocab.max_stem_len();
}

const double* SegmentationEngine::plane_ptr(int start, int stem) const {
  return planes_.data() +
         (static_cast<std::size_t>(start) * vocab_.size() + stem) *
             plane_stride_;
}

double SegmentationEngine::plane_score(int start, int stem, int len) const {
  const int max_i =
      plane_max_i_[static_cast<std::size_t>(start) * vocab_.size() + stem];
  if (len > max_i) return kNegInf;
  const int s = static_cast<int>(vocab_.stems[stem].phones.size());
  return plane_ptr(start, stem)[static_cast<std::size_t>(s) * (max_i + 1) + len];
}

void SegmentationEngine::score_spans(const Chunk& chunk) {
  const int n = chunk.size();
  if (n < 1) throw InvalidInput("empty chunk");
  n_ = n;
  max_span_ = std::min(params_.range.max_len, n);
  const int K = m_.num_known();
  const int V = vocab_.size();
  const int eps = m_.epsilon_col();
  const int min_len = params_.range.min_len;

  char_lp_.resize(static_cast<std::size_t>(K) * n);
  del_lp_.resize(K);
  for (int k = 0; k < K; ++k) {
    del_lp_[k] = m_.log_probs(k, eps);
    double* row = char_lp_.data() + static_cast<std::size_t>(k) * n;
    for (int i = 0; i < n; ++i) row[i] = m_.log_probs(k, chunk.chars[i]);
  }

  plane_stride_ =
      static_cast<std::size_t>(max_stem_len_ + 1) * (max_span_ + 1);
  planes_.resize(static_cast<std::size_t>(n) * V * plane_stride_);
  plane_max_i_.assign(static_cast<std::size_t>(n) * V, -1);

  const std::size_t lse_size = static_cast<std::size_t>(max_span_ + 1) * (n + 1);
  span_lse_.assign(lse_size, kNegInf);

  PlaneSpec spec;
  spec.char_lp = char_lp_.data();
  spec.n = n;
  spec.del_lp = del_lp_.data();
  spec.log_alpha = log_alpha_;

  for (int start = 0; start + min_len <= n; ++start) {
    for (int v = 0; v < V; ++v) {
      const Stem& stem = vocab_.stems[v];
      const int s = static_cast<int>(stem.phones.size());
      const int max_i = std::min({max_span_, n - start, 2 * s});
      if (max_i < min_len) continue;
      plane_max_i_[static_cast<std::size_t>(start) * V + v] = max_i;
      spec.stem = stem.phones.data();
      spec.stem_len = s;
      spec.start = start;
      spec.max_i = max_i;
      fill_alignment_plane(
          spec, planes_.data() +
                    (static_cast<std::size_t>(start) * V + v) * plane_stride_);
    }
    // Log span likelihood per length (uniform stem prior folded in).
    for (int l = min_len; l <= std::min(max_span_, n - start); ++l) {
      double hi = kNegInf;
      for (int v = 0; v < V; ++v) {
        const double sc = plane_score(start, v, l);
        if (sc > hi) hi = sc;
      }
      double lse = kNegInf;
      if (hi != kNegInf) {
        double sum = 0.0;
        for (int v = 0; v < V; ++v) {
          const double sc = plane_score(start, v, l);
          if (sc - hi > -40.0) sum += std::exp(sc - hi);
        }
        lse = hi + std::log(sum);
      }
      span_lse_[static_cast<std::size_t>(l) * (n + 1) + (start + l)] =
          lse - log_vocab_;
    }
  }
}

void SegmentationEngine::run_forward(int n) {
  const int min_len = params_.range.min_len;
  lp_.assign(n + 1, kNegInf);
  lq_.assign(n + 1, kNegInf);
  lr_.assign(n + 1, kNegInf);
  lp_[0] = 0.0;
  const double lo = log_po_ + log_p0_;

  cand_.clear();
  for (int i = 1; i <= n; ++i) {
    double p = lo == kNegInf ? kNegInf : lo + lp_[i - 1];
    double q = lo == kNegInf ? kNegInf : lo + lq_[i - 1];
    double r = lo == kNegInf ? kNegInf : lo + lr_[i - 1];
    for (int l = min_len; l <= std::min(max_span_, i); ++l) {
      const double ls = span_lse_[static_cast<std::size_t>(l) * (n + 1) + i];
      if (ls == kNegInf || log_pe_ == kNegInf) continue;
      const double edge = log_pe_ + ls;
      p = log_add(p, edge + lp_[i - l]);
      // Quality adds phi = S^(1/l); coverage adds l.
      const double inj_q = ls / l + lp_[i - l];
      q = log_add(q, edge + log_add(lq_[i - l], inj_q));
      const double inj_r = std::log(static_cast<double>(l)) + lp_[i - l];
      r = log_add(r, edge + log_add(lr_[i - l], inj_r));
    }
    lp_[i] = p;
    lq_[i] = q;
    lr_[i] = r;
  }
}

ChunkStats SegmentationEngine::forward(const Chunk& chunk) {
  score_spans(chunk);
  run_forward(n_);
  ChunkStats st;
  st.log_px = lp_[n_];
  if (st.log_px != kNegInf) {
    st.quality = lq_[n_] == kNegInf ? 0.0 : std::exp(lq_[n_] - lp_[n_]);
    st.coverage = lr_[n_] == kNegInf ? 0.0 : std::exp(lr_[n_] - lp_[n_]);
  }
  return st;
}

void SegmentationEngine::run_backward(int n, BackwardMode mode,
                                      std::vector<double>& w) {
  const int min_len = params_.range.min_len;
  const bool quality_mode = mode == BackwardMode::kQuality;
  const bool marginal_mode = mode == BackwardMode::kMarginal;
  const std::vector<double>& lf = quality_mode ? lq_ : lr_;
  w.assign(static_cast<std::size_t>(max_span_ + 1) * (n + 1), 0.0);

  // Adjoints of the expectation DP (f = q or r) and of the partition DP p.
  // For the marginal target (G = log p_n) only the p system is seeded.
  std::vector<SLog> pbar(n + 1), fbar(n + 1);
  if (marginal_mode) {
    pbar[n] = SLog::from_log(-lp_[n]);
  } else {
    fbar[n] = SLog::from_log(-lp_[n]);
    if (lf[n] != kNegInf) pbar[n] = SLog::from_log(lf[n] - 2.0 * lp_[n], -1.0);
  }

  const double lo = log_po_ + log_p0_;
  for (int i = n; i >= 1; --i) {
    if (fbar[i].is_zero() && pbar[i].is_zero()) continue;
    if (lo != kNegInf) {
      fbar[i - 1] = sl_add(fbar[i - 1], sl_mul_log(fbar[i], lo));
      pbar[i - 1] = sl_add(pbar[i - 1], sl_mul_log(pbar[i], lo));
    }
    for (int l = min_len; l <= std::min(max_span_, i); ++l) {
      const double ls = span_lse_[static_cast<std::size_t>(l) * (n + 1) + i];
      if (ls == kNegInf || log_pe_ == kNegInf) continue;
      const double edge = log_pe_ + ls;

      SLog grad = sl_mul_log(pbar[i], edge + lp_[i - l]);
      if (!marginal_mode) {
        const double log_g =
            quality_mode ? ls / l : std::log(static_cast<double>(l));
        pbar[i - l] =
            sl_add(pbar[i - l], sl_mul_log(fbar[i], edge + log_g));
        // d(target)/d log S_l(i); quality picks up the phi' = phi/l term.
        const double coeff =
            quality_mode ? std::log1p(1.0 / l) + ls / l
                         : std::log(static_cast<double>(l));
        const double t1 = edge + log_add(lf[i - l], coeff + lp_[i - l]);
        grad = sl_add(grad, sl_mul_log(fbar[i], t1));
        fbar[i - l] = sl_add(fbar[i - l], sl_mul_log(fbar[i], edge));
      }
      pbar[i - l] = sl_add(pbar[i - l], sl_mul_log(pbar[i], edge));
      w[static_cast<std::size_t>(l) * (n + 1) + i] = grad.to_double();
    }
  }
}

ChunkStats SegmentationEngine::forward_backward(const Chunk& chunk,
                                                Eigen::MatrixXd& g_quality,
                                                Eigen::MatrixXd& g_coverage) {
  ChunkStats st = forward(chunk);
  if (st.log_px == kNegInf) return st;
  run_backward(n_, BackwardMode::kQuality, w_quality_);
  run_backward(n_, BackwardMode::kCoverage, w_coverage_);
  accumulate_path_grads(chunk, &w_quality_, &g_quality, &w_coverage_,
                        &g_coverage);
  return st;
}

ChunkStats SegmentationEngine::forward_backward_target(const Chunk& chunk,
                                                       BackwardMode mode,
                                                       Eigen::MatrixXd& g) {
  ChunkStats st = forward(chunk);
  if (st.log_px == kNegInf) return st;
  run_backward(n_, mode, w_quality_);
  accumulate_path_grads(chunk, &w_quality_, &g, nullptr, nullptr);
  return st;
}

void SegmentationEngine::accumulate_path_grads(const Chunk& chunk,
                                               const std::vector<double>* w1,
                                               Eigen::MatrixXd* g1,
                                               const std::vector<double>* w2,
                                               Eigen::MatrixXd* g2) {
  const int n = n_;
  const int V = vocab_.size();
  const int min_len = params_.range.min_len;

  PlaneSpec spec;
  spec.char_lp = char_lp_.data();
  spec.n = n;
  spec.del_lp = del_lp_.data();
  spec.log_alpha = log_alpha_;

  const int eps = m_.epsilon_col();
  for (int start = 0; start + min_len <= n; ++start) {
    for (int v = 0; v < V; ++v) {
      const int max_i = plane_max_i_[static_cast<std::size_t>(start) * V + v];
      if (max_i < min_len) continue;
      const Stem& stem = vocab_.stems[v];
      spec.stem = stem.phones.data();
      spec.stem_len = static_cast<int>(stem.phones.size());
      spec.start = start;
      spec.max_i = max_i;
      const double* plane = plane_ptr(start, v);
      for (int l = min_len; l <= std::min(max_i, n - start); ++l) {
        const int end = start + l;
        const std::size_t widx = static_cast<std::size_t>(l) * (n + 1) + end;
        const double wa = w1 != nullptr ? (*w1)[widx] : 0.0;
        const double wb = w2 != nullptr ? (*w2)[widx] : 0.0;
        if (wa == 0.0 && wb == 0.0) continue;
        const double sc =
            plane[static_cast<std::size_t>(spec.stem_len) * (max_i + 1) + l];
        if (sc == kNegInf) continue;
        // d logS / d L(x,y) is the stem softmax weight; the uniform prior is
        // a constant factor of S and cancels.
        const double lse =
            span_lse_[static_cast<std::size_t>(l) * (n + 1) + end] +
            log_vocab_;
        const double u = std::exp(sc - lse);
        const double uwa = wa * u;
        const double uwb = wb * u;
        if (uwa == 0.0 && uwb == 0.0) continue;
        auto add = [&](int phone, int col) {
          if (g1 != nullptr) (*g1)(phone, col) += uwa;
          if (g2 != nullptr) (*g2)(phone, col) += uwb;
        };
        walk_alignment_path(
            spec, plane, l,
            [&](int stem_pos, AlignmentOp::Kind kind, int text_idx) {
              const int phone = stem.phones[stem_pos];
              switch (kind) {
                case AlignmentOp::kDelete:
                  add(phone, eps);
                  break;
                case AlignmentOp::kSubstitute:
                  add(phone, chunk.chars[text_idx]);
                  break;
                case AlignmentOp::kInsert:
                  add(phone, chunk.chars[text_idx]);
                  add(phone, chunk.chars[text_idx + 1]);
                  break;
              }
            });
      }
    }
  }
}

SegmentationDecode SegmentationEngine::decode(const Chunk& chunk) {
  score_spans(chunk);
  const int n = n_;
  const int V = vocab_.size();
  const int min_len = params_.range.min_len;

  // Max-stem span term per (length, end), with the uniform stem prior.
  std::vector<double> span_max(
      static_cast<std::size_t>(max_span_ + 1) * (n + 1), kNegInf);
  std::vector<int> span_arg(span_max.size(), -1);
  for (int start = 0; start + min_len <= n; ++start) {
    for (int l = min_len; l <= std::min(max_span_, n - start); ++l) {
      double best = kNegInf;
      int arg = -1;
      for (int v = 0; v < V; ++v) {
        const double sc = plane_score(start, v, l);
        if (sc > best) {
          best = sc;
          arg = v;
        }
      }
      const std::size_t idx = static_cast<std::size_t>(l) * (n + 1) + start + l;
      if (arg >= 0) {
        span_max[idx] = best - log_vocab_;
        span_arg[idx] = arg;
      }
    }
  }

  std::vector<double> best(n + 1, kNegInf);
  std::vector<int> choice(n + 1, 0);  // 0 = O tag, otherwise span length
  best[0] = 0.0;
  const double lo = log_po_ + log_p0_;
  for (int i = 1; i <= n; ++i) {
    double b = kNegInf;
    int ch = -1;
    // Longer spans first; the unmatched tag loses ties.
    for (int l = std::min(max_span_, i); l >= min_len; --l) {
      const std::size_t idx = static_cast<std::size_t>(l) * (n + 1) + i;
      if (span_max[idx] == kNegInf || log_pe_ == kNegInf) continue;
      const double val = log_pe_ + span_max[idx] + best[i - l];
      if (val > b) {
        b = val;
        ch = l;
      }
    }
    if (lo != kNegInf) {
      const double val = lo + best[i - 1];
      if (val > b) {
        b = val;
        ch = 0;
      }
    }
    best[i] = b;
    choice[i] = ch;
  }

  SegmentationDecode out;
  out.log_score = best[n];
  if (best[n] == kNegInf) return out;
  int i = n;
  while (i > 0) {
    const int ch = choice[i];
    if (ch == 0) {
      --i;
    } else {
      DecodedSpan span;
      span.start = i - ch;
      span.end = i;
      span.best_stem =
          span_arg[static_cast<std::size_t>(ch) * (n + 1) + i];
      out.spans.push_back(span);
      i -= ch;
    }
  }
  std::reverse(out.spans.begin(), out.spans.end());
  return out;
}

std::vector<SpanPrediction> SegmentationEngine::predictions(
    const Corpus& corpus, const Chunk& chunk, int k) {
  if (k < 1) throw InvalidK(k);
  SegmentationDecode dec = decode(chunk);
  const Inscription& ins = corpus.inscriptions[chunk.inscription_index];
  std::vector<SpanPrediction> out;
  for (const DecodedSpan& span : dec.spans) {
    const int l = span.end - span.start;
    std::vector<ScoredStem> scored;
    for (int v = 0; v < vocab_.size(); ++v) {
      const double sc = plane_score(span.start, v, l);
      if (sc != kNegInf) scored.push_back({v, std::exp(sc / l)});
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const ScoredStem& a, const ScoredStem& b) {
                       return a.score > b.score;
                     });
    if (static_cast<int>(scored.size()) > k) scored.resize(k);
    std::string surface;
    for (int i = span.start; i < span.end; ++i)
      surface += corpus.alphabet.symbol(chunk.chars[i]);
    for (const ScoredStem& s : scored) {
      SpanPrediction p;
      p.inscription_id = ins.id;
      p.chunk_offset = chunk.offset;
      p.start = chunk.offset + span.start;
      p.end = chunk.offset + span.end;
      p.span_surface = surface;
      p.stem = vocab_.stems[s.stem_index].surface;
      p.confidence = s.score;
      out.push_back(std::move(p));
    }
  }
  return out;
}

// --- spec-shaped wrappers ---------------------------------------------------

double marginal_log_likelihood(const Chunk& chunk, const Vocabulary& vocab,
                               const MappingMatrix& m,
                               const SegmentationParams& params) {
  SegmentationEngine engine(vocab, m, params);
  return engine.forward(chunk).log_px;
}

double expected_quality(const Chunk& chunk, const Vocabulary& vocab,
                        const MappingMatrix& m,
                        const SegmentationParams& params) {
  SegmentationEngine engine(vocab, m, params);
  return engine.forward(chunk).quality;
}

double expected_coverage(const Chunk& chunk, const Vocabulary& vocab,
                         const MappingMatrix& m,
                         const SegmentationParams& params) {
  SegmentationEngine engine(vocab, m, params);
  return engine.forward(chunk).coverage;
}

SegmentationDecode viterbi_segmentation(const Chunk& chunk,
                                        const Vocabulary& vocab,
                                        const MappingMatrix& m,
                                        const SegmentationParams& params) {
  SegmentationEngine engine(vocab, m, params);
  return engine.decode(chunk);
}

std::vector<SpanPrediction> extract_predictions(const Corpus& corpus,
                                                const Chunk& chunk,
                                                const Vocabulary& vocab,
                                                const MappingMatrix& m,
                                                const SegmentationParams& params,
                                                int k) {
  SegmentationEngine engine(vocab, m, params);
  return engine.predictions(corpus, chunk, k);
}

double boundary_target_with_grad(const Chunk& chunk, const Vocabulary& vocab,
                                 const ModelParams& params,
                                 const ModelContext& ctx, double temperature,
                                 const SegmentationParams& sp,
                                 BackwardMode mode, ParamGrads& out) {
  MappingForward fwd = mapping_forward(params, ctx, temperature, nullptr);
  SegmentationEngine engine(vocab, fwd.matrix, sp);
  Eigen::MatrixXd g_log =
      Eigen::MatrixXd::Zero(ctx.known.size(), ctx.lost.num_outcomes());
  ChunkStats st = engine.forward_backward_target(chunk, mode, g_log);
  mapping_backward(fwd, params, ctx, g_log,
                   Eigen::MatrixXd::Zero(0, 0), out);
  switch (mode) {
    case BackwardMode::kMarginal:
      return st.log_px;
    case BackwardMode::kQuality:
      return st.quality;
    case BackwardMode::kCoverage:
      return st.coverage;
  }
  return st.log_px;
}

std::vector<SpanPrediction> predict_corpus(const Corpus& corpus,
                                           const Vocabulary& vocab,
                                           const MappingMatrix& m,
                                           const SegmentationParams& params,
                                           int k) {
  SegmentationEngine engine(vocab, m, params);
  std::vector<SpanPrediction> out;
  for (const auto& ins : corpus.inscriptions) {
    for (const auto& chunk : ins.chunks) {
      auto preds = engine.predictions(corpus, chunk, k);
      out.insert(out.end(), preds.begin(), preds.end());
    }
  }
  return out;
}

}  // namespace cogseg
