// cogseg/evaluation.cpp

#include "cogseg/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_map>

namespace cogseg {

double precision_at_k(const std::vector<SpanPrediction>& predictions,
                      const std::vector<GoldSpan>& gold, int k) {
  if (k < 1) throw InvalidK(k);
  if (gold.empty()) throw DataError("gold annotation list is empty");

  // Predictions grouped by (inscription, start), best confidence first.
  std::map<std::pair<std::string, int>, std::vector<const SpanPrediction*>>
      by_start;
  for (const auto& p : predictions)
    by_start[{p.inscription_id, p.start}].push_back(&p);
  for (auto& [_, v] : by_start)
    std::stable_sort(v.begin(), v.end(),
                     [](const SpanPrediction* a, const SpanPrediction* b) {
                       return a->confidence > b->confidence;
                     });

  int hits = 0;
  for (const auto& g : gold) {
    auto it = by_start.find({g.inscription_id, g.start});
    if (it == by_start.end()) continue;
    const auto& cands = it->second;
    const int limit = std::min<int>(k, static_cast<int>(cands.size()));
    for (int i = 0; i < limit; ++i) {
      if (cands[i]->end <= g.end && cands[i]->stem == g.stem) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

std::vector<double> default_closeness_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 14; ++i) t.push_back(0.30 + 0.05 * i);
  return t;
}

ClosenessCurve closeness_curve(const std::vector<SpanPrediction>& predictions,
                               const Corpus& corpus,
                               std::vector<double> thresholds) {
  for (double t : thresholds)
    if (t < 0.0 || t > 1.0)
      throw ConfigError("closeness thresholds must lie in [0, 1]");
  if (corpus.total_chars <= 0) throw DataError("corpus has no characters");

  std::sort(thresholds.begin(), thresholds.end(), std::greater<double>());

  std::unordered_map<std::string, int> ins_index;
  for (int i = 0; i < static_cast<int>(corpus.inscriptions.size()); ++i)
    ins_index.emplace(corpus.inscriptions[i].id, i);

  // Sweep predictions from the most confident down, marking covered chars.
  std::vector<const SpanPrediction*> sorted;
  sorted.reserve(predictions.size());
  for (const auto& p : predictions) sorted.push_back(&p);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SpanPrediction* a, const SpanPrediction* b) {
                     return a->confidence > b->confidence;
                   });

  std::vector<std::vector<char>> covered(corpus.inscriptions.size());
  for (std::size_t i = 0; i < covered.size(); ++i)
    covered[i].assign(corpus.inscriptions[i].total_chars, 0);

  ClosenessCurve curve;
  curve.thresholds = thresholds;
  curve.coverage.resize(thresholds.size());
  std::int64_t count = 0;
  std::size_t next = 0;
  for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
    const double t = thresholds[ti];
    while (next < sorted.size() && sorted[next]->confidence >= t) {
      const SpanPrediction& p = *sorted[next++];
      auto it = ins_index.find(p.inscription_id);
      if (it == ins_index.end())
        throw DataError("prediction references unknown inscription '" +
                        p.inscription_id + "'");
      auto& mask = covered[it->second];
      for (int c = p.start; c < p.end && c < static_cast<int>(mask.size());
           ++c) {
        if (!mask[c]) {
          mask[c] = 1;
          ++count;
        }
      }
    }
    curve.coverage[ti] =
        static_cast<double>(count) / static_cast<double>(corpus.total_chars);
  }
  return curve;
}

double closeness_auc(const ClosenessCurve& curve) {
  if (curve.thresholds.size() != curve.coverage.size())
    throw ConfigError("malformed closeness curve");
  if (curve.thresholds.size() < 2) return 0.0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
    pts.emplace_back(curve.thresholds[i], curve.coverage[i]);
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].first - pts[i - 1].first) *
            0.5 * (pts[i].second + pts[i - 1].second);
  return area / 0.7;
}

void save_closeness_curve(const ClosenessCurve& curve, double auc,
                          const std::string& label, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write closeness curve file: " + path);
  char buf[64];
  out << "#language\tthreshold\tcoverage\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6g\t%.12g", curve.thresholds[i],
                  curve.coverage[i]);
    out << label << '\t' << buf << '\n';
  }
  std::snprintf(buf, sizeof(buf), "%.12g", auc);
  out << label << "\tAUC\t" << buf << '\n';
}

}  // namespace cogseg
