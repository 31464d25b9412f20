// python/bindings.cpp
//
// pybind11 module exposing the main operations: the synthetic generator,
// the training/prediction/evaluation pipeline, and the low-level alignment
// and boundary DPs on explicit inputs.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cogseg/config.hpp"
#include "cogseg/evaluation.hpp"
#include "cogseg/snapshot.hpp"
#include "cogseg/synth.hpp"

namespace py = pybind11;
using namespace cogseg;

namespace {

MappingMatrix matrix_from_probs(const Eigen::MatrixXd& probs) {
  MappingMatrix m;
  m.probs = probs;
  m.log_probs = probs.array().max(1e-300).log();
  return m;
}

std::vector<int> intern_chars(const std::vector<std::string>& chars,
                              const LostAlphabet& alphabet) {
  std::vector<int> out;
  out.reserve(chars.size());
  for (const auto& c : chars) out.push_back(alphabet.id(c));
  return out;
}

Vocabulary vocab_from_lists(const std::vector<std::vector<std::string>>& stems,
                            const KnownAlphabet& alphabet) {
  Vocabulary v;
  v.alphabet = alphabet;
  for (const auto& phones : stems) {
    Stem s;
    for (const auto& p : phones) {
      s.phones.push_back(alphabet.id(p));
      s.surface += p;
    }
    v.stems.push_back(std::move(s));
  }
  return v;
}

SegmentationParams seg_params(const LostAlphabet& lost, int min_len,
                              int max_len, double alpha) {
  return SegmentationParams::uniform({min_len, max_len}, 1.0 / lost.size(),
                                     alpha);
}

py::dict run_report_to_dict(const ExperimentResult& result) {
  py::dict out;
  py::list runs;
  for (const auto& r : result.runs) {
    py::dict jr;
    jr["tag"] = r.tag;
    jr["seed"] = r.run_seed;
    jr["failed"] = r.failed;
    if (r.failed) {
      jr["error"] = r.error;
    } else {
      jr["final_objective"] = r.final_objective;
      jr["selection_value"] = r.selection_value;
      jr["snapshot"] = r.snapshot_path;
      jr["metrics"] = r.metrics_path;
    }
    runs.append(jr);
  }
  out["runs"] = runs;
  out["best"] = result.best;
  if (result.best >= 0) {
    out["best_tag"] = result.runs[result.best].tag;
    out["best_selection_value"] = result.runs[result.best].selection_value;
    out["best_snapshot"] = result.runs[result.best].snapshot_path;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Cognate span identification in undersegmented texts: phonetics-aware "
      "generative segmentation and alignment.";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<NumericError>(m, "NumericError");

  m.def(
      "generate_synthetic",
      [](const std::string& spec_json, const std::string& out_dir) {
        // Reuse the strict file parser via a round-trip through text.
        SynthSpec spec;
        {
          const std::string tmp = out_dir + ".spec.json";
          {
            std::ofstream f(tmp);
            f << spec_json;
          }
          spec = load_synth_spec(tmp);
          std::remove(tmp.c_str());
        }
        const SynthBundle bundle = generate_synthetic(spec);
        save_bundle(bundle, out_dir);
        py::dict out;
        out["total_chars"] = bundle.corpus.total_chars;
        out["num_gold_spans"] = bundle.gold.size();
        out["gold_span_min_len"] = bundle.gold_span_min_len;
        out["gold_span_max_len"] = bundle.gold_span_max_len;
        return out;
      },
      py::arg("spec_json"), py::arg("out_dir"),
      "Generate a synthetic bundle from a JSON spec string.");

  m.def(
      "train",
      [](const std::string& config_json,
         const std::vector<std::string>& overrides) {
        TrainRunSpec spec = load_train_spec_text(config_json, overrides);
        LoadedInputs in = load_inputs(spec);
        spec.train.objective.supervision = in.supervision;
        std::filesystem::create_directories(spec.out_dir);
        {
          std::ofstream f(std::filesystem::path(spec.out_dir) /
                          "effective_config.json");
          f << train_spec_to_json(spec);
        }
        const ExperimentResult result = run_experiment(
            in.corpus, in.vocab, in.ctx, spec.train, spec.seeds,
            spec.schedules, spec.out_dir,
            in.gold.empty() ? nullptr : &in.gold);
        return run_report_to_dict(result);
      },
      py::arg("config_json"), py::arg("overrides") = std::vector<std::string>{},
      "Run the training grid described by a JSON config string.");

  m.def(
      "predict",
      [](const std::string& snapshot_path, const std::string& corpus_path,
         const std::string& vocab_path, const std::string& features_path,
         const std::string& out_path, int k) {
        const Snapshot snap = load_snapshot(snapshot_path);
        const Corpus corpus = load_corpus(corpus_path);
        const FeatureTable features = FeatureTable::load(features_path);
        const Vocabulary vocab = load_vocab(vocab_path, features, 1);
        Corpus reindexed = corpus;
        for (auto& ins : reindexed.inscriptions)
          for (auto& chunk : ins.chunks)
            for (auto& ch : chunk.chars)
              ch = snap.ctx.lost.id(corpus.alphabet.symbol(ch));
        reindexed.alphabet = snap.ctx.lost;
        const MappingMatrix mm =
            mapping_matrix(snap.params, snap.ctx, snap.meta.temperature);
        const SegmentationParams sp = SegmentationParams::uniform(
            snap.meta.range, 1.0 / snap.ctx.lost.size(), snap.meta.alpha);
        const auto preds = predict_corpus(reindexed, vocab, mm, sp, k);
        save_predictions(preds, out_path);
        return preds.size();
      },
      py::arg("snapshot"), py::arg("corpus"), py::arg("vocab"),
      py::arg("features"), py::arg("out"), py::arg("k") = 10,
      "Decode a corpus with a snapshot; writes a predictions file.");

  m.def(
      "precision_at_k",
      [](const std::string& predictions_path, const std::string& gold_path,
         int k) {
        return precision_at_k(load_predictions(predictions_path),
                              load_gold(gold_path), k);
      },
      py::arg("predictions"), py::arg("gold"), py::arg("k") = 10);

  m.def(
      "closeness_auc_from_files",
      [](const std::string& predictions_path, const std::string& corpus_path) {
        const auto preds = load_predictions(predictions_path);
        const Corpus corpus = load_corpus(corpus_path);
        const auto curve =
            closeness_curve(preds, corpus, default_closeness_thresholds());
        return closeness_auc(curve);
      },
      py::arg("predictions"), py::arg("corpus"));

  m.def(
      "mapping_from_snapshot",
      [](const std::string& path) {
        const Snapshot snap = load_snapshot(path);
        const MappingMatrix mm =
            mapping_matrix(snap.params, snap.ctx, snap.meta.temperature);
        py::dict out;
        out["phones"] = snap.ctx.known.phones();
        out["lost_chars"] = snap.ctx.lost.chars();
        out["probs"] = mm.probs;
        return out;
      },
      py::arg("snapshot"),
      "Phones, lost characters and the row-stochastic mapping matrix.");

  // --- low-level operations on explicit inputs ----------------------------

  m.def(
      "align_viterbi",
      [](const std::vector<std::string>& x, const std::vector<std::string>& y,
         const std::vector<std::string>& lost_chars,
         const std::vector<std::string>& phones, const Eigen::MatrixXd& probs,
         double alpha) {
        const LostAlphabet lost(lost_chars);
        const KnownAlphabet known(phones);
        const MappingMatrix mm = matrix_from_probs(probs);
        std::vector<int> xi = intern_chars(x, lost), yi;
        for (const auto& p : y) yi.push_back(known.id(p));
        const ViterbiResult r = align_viterbi(xi, yi, mm, alpha);
        py::list ops;
        for (const auto& op : r.alignment.ops) {
          py::dict d;
          d["kind"] = op.kind == AlignmentOp::kSubstitute ? "substitute"
                      : op.kind == AlignmentOp::kDelete   ? "delete"
                                                          : "insert";
          d["stem_pos"] = op.stem_pos;
          d["text_begin"] = op.text_begin;
          d["text_len"] = op.text_len;
          ops.append(d);
        }
        return py::make_tuple(r.log_prob, ops);
      },
      py::arg("x"), py::arg("y"), py::arg("lost_chars"), py::arg("phones"),
      py::arg("probs"), py::arg("alpha"),
      "Best alignment log-probability and operations. probs is a "
      "K x (L+1) row-stochastic matrix; the last column is deletion.");

  m.def(
      "span_likelihood",
      [](const std::vector<std::string>& x,
         const std::vector<std::vector<std::string>>& stems,
         const std::vector<std::string>& lost_chars,
         const std::vector<std::string>& phones, const Eigen::MatrixXd& probs,
         double alpha, int min_len, int max_len) {
        const LostAlphabet lost(lost_chars);
        const KnownAlphabet known(phones);
        return span_likelihood(intern_chars(x, lost),
                               vocab_from_lists(stems, known),
                               matrix_from_probs(probs), alpha, min_len,
                               max_len);
      },
      py::arg("x"), py::arg("stems"), py::arg("lost_chars"), py::arg("phones"),
      py::arg("probs"), py::arg("alpha"), py::arg("min_len") = 1,
      py::arg("max_len") = 10);

  const auto boundary_op = [](const std::vector<std::string>& chars,
                              const std::vector<std::vector<std::string>>& stems,
                              const std::vector<std::string>& lost_chars,
                              const std::vector<std::string>& phones,
                              const Eigen::MatrixXd& probs, double alpha,
                              int min_len, int max_len, int which) {
    const LostAlphabet lost(lost_chars);
    const KnownAlphabet known(phones);
    Chunk chunk;
    chunk.chars = intern_chars(chars, lost);
    const Vocabulary vocab = vocab_from_lists(stems, known);
    const MappingMatrix mm = matrix_from_probs(probs);
    const SegmentationParams sp = seg_params(lost, min_len, max_len, alpha);
    switch (which) {
      case 0:
        return marginal_log_likelihood(chunk, vocab, mm, sp);
      case 1:
        return expected_quality(chunk, vocab, mm, sp);
      default:
        return expected_coverage(chunk, vocab, mm, sp);
    }
  };
  m.def(
      "marginal_log_likelihood",
      [boundary_op](const std::vector<std::string>& chars,
                    const std::vector<std::vector<std::string>>& stems,
                    const std::vector<std::string>& lost_chars,
                    const std::vector<std::string>& phones,
                    const Eigen::MatrixXd& probs, double alpha, int min_len,
                    int max_len) {
        return boundary_op(chars, stems, lost_chars, phones, probs, alpha,
                           min_len, max_len, 0);
      },
      py::arg("chars"), py::arg("stems"), py::arg("lost_chars"),
      py::arg("phones"), py::arg("probs"), py::arg("alpha") = 1.0,
      py::arg("min_len") = 1, py::arg("max_len") = 10);
  m.def(
      "expected_quality",
      [boundary_op](const std::vector<std::string>& chars,
                    const std::vector<std::vector<std::string>>& stems,
                    const std::vector<std::string>& lost_chars,
                    const std::vector<std::string>& phones,
                    const Eigen::MatrixXd& probs, double alpha, int min_len,
                    int max_len) {
        return boundary_op(chars, stems, lost_chars, phones, probs, alpha,
                           min_len, max_len, 1);
      },
      py::arg("chars"), py::arg("stems"), py::arg("lost_chars"),
      py::arg("phones"), py::arg("probs"), py::arg("alpha") = 1.0,
      py::arg("min_len") = 1, py::arg("max_len") = 10);
  m.def(
      "expected_coverage",
      [boundary_op](const std::vector<std::string>& chars,
                    const std::vector<std::vector<std::string>>& stems,
                    const std::vector<std::string>& lost_chars,
                    const std::vector<std::string>& phones,
                    const Eigen::MatrixXd& probs, double alpha, int min_len,
                    int max_len) {
        return boundary_op(chars, stems, lost_chars, phones, probs, alpha,
                           min_len, max_len, 2);
      },
      py::arg("chars"), py::arg("stems"), py::arg("lost_chars"),
      py::arg("phones"), py::arg("probs"), py::arg("alpha") = 1.0,
      py::arg("min_len") = 1, py::arg("max_len") = 10);

  m.def("apply_whitespace_ratio", &apply_whitespace_ratio, py::arg("text"),
        py::arg("keep_prob"), py::arg("seed"));

  m.attr("__version__") = "0.1.0";
}
