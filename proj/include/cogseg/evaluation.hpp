// cogseg/evaluation.hpp
//
// P@K scoring against gold cognate annotations and the unsupervised
// language-closeness metric (character coverage vs prediction confidence,
// summarized by a normalized area under the curve).

#pragma once

#include <string>
#include <vector>

#include "cogseg/corpus.hpp"

namespace cogseg {

// A gold token scores a hit when, among the top-k predictions starting at
// its start index, one has the gold stem and a span inside the gold prefix.
double precision_at_k(const std::vector<SpanPrediction>& predictions,
                      const std::vector<GoldSpan>& gold, int k);

struct ClosenessCurve {
  std::vector<double> thresholds;  // descending
  std::vector<double> coverage;    // fraction of corpus characters matched
};

std::vector<double> default_closeness_thresholds();

// Coverage at each threshold: characters inside retained spans (confidence
// >= threshold, closed comparison), counted once, over total corpus chars.
ClosenessCurve closeness_curve(const std::vector<SpanPrediction>& predictions,
                               const Corpus& corpus,
                               std::vector<double> thresholds);

// Trapezoidal area of coverage over the threshold axis, divided by 0.7 (the
// width of the standard [0.3, 1.0] threshold window).
double closeness_auc(const ClosenessCurve& curve);

void save_closeness_curve(const ClosenessCurve& curve, double auc,
                          const std::string& label, const std::string& path);

}  // namespace cogseg
