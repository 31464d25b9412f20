// tools/main.cpp
//
// cogseg command-line front end: synth, train, predict, eval, closeness,
// gradcheck, inspect.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "cogseg/config.hpp"
#include "cogseg/evaluation.hpp"
#include "cogseg/snapshot.hpp"
#include "cogseg/synth.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace cogseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitGradCheck = 5;

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              std::int64_t seed_override) {
  SynthSpec spec = load_synth_spec(spec_path);
  if (seed_override >= 0) spec.seed = static_cast<std::uint64_t>(seed_override);
  const SynthBundle bundle = generate_synthetic(spec);
  save_bundle(bundle, out_dir);
  std::printf("wrote synthetic bundle to %s: %lld chars, %zu gold spans\n",
              out_dir.c_str(), static_cast<long long>(bundle.corpus.total_chars),
              bundle.gold.size());
  return kExitOk;
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides, bool quiet) {
  TrainRunSpec spec = load_train_spec(config_path, overrides);
  LoadedInputs in = load_inputs(spec);
  spec.train.objective.supervision = in.supervision;
  if (spec.knowledge != Knowledge::kBase &&
      spec.train.objective.lambda_sup <= 0.0)
    throw ConfigError("partial/full knowledge needs objective.lambda_sup > 0");

  fs::create_directories(spec.out_dir);
  {
    std::ofstream out(fs::path(spec.out_dir) / "effective_config.json");
    out << train_spec_to_json(spec);
  }

  const auto progress = [&](const RunReport& r) {
    if (quiet) return;
    if (r.failed) {
      std::printf("run %-18s FAILED: %s\n", r.tag.c_str(), r.error.c_str());
    } else {
      std::printf("run %-18s final objective %.4f selection %.4f\n",
                  r.tag.c_str(), r.final_objective, r.selection_value);
    }
    std::fflush(stdout);
  };

  const ExperimentResult result = run_experiment(
      in.corpus, in.vocab, in.ctx, spec.train, spec.seeds, spec.schedules,
      spec.out_dir, in.gold.empty() ? nullptr : &in.gold, progress);

  nlohmann::json report;
  report["runs"] = nlohmann::json::array();
  for (const auto& r : result.runs) {
    nlohmann::json jr;
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
    report["runs"].push_back(jr);
  }
  if (result.best >= 0) {
    const RunReport& best = result.runs[result.best];
    report["best"] = best.tag;
    report["best_selection_value"] = best.selection_value;
    fs::copy_file(best.snapshot_path,
                  fs::path(spec.out_dir) / "best_snapshot.bin",
                  fs::copy_options::overwrite_existing);
  }
  {
    std::ofstream out(fs::path(spec.out_dir) / "report.json");
    out << report.dump(2) << '\n';
  }
  if (result.best < 0) throw NonFiniteError("all training runs failed");
  std::printf("best run: %s (selection %.4f)\n",
              result.runs[result.best].tag.c_str(),
              result.runs[result.best].selection_value);
  return kExitOk;
}

int cmd_predict(const std::string& snapshot_path, const std::string& corpus_path,
                const std::string& vocab_path, const std::string& features_path,
                const std::string& out_path, int k, double alpha_override,
                int min_stem_len) {
  const Snapshot snap = load_snapshot(snapshot_path);
  const Corpus corpus = load_corpus(corpus_path);
  const FeatureTable features = FeatureTable::load(features_path);
  const Vocabulary vocab = load_vocab(vocab_path, features, min_stem_len);

  // Re-intern the corpus against the snapshot's lost alphabet.
  Corpus reindexed = corpus;
  for (auto& ins : reindexed.inscriptions)
    for (auto& chunk : ins.chunks)
      for (auto& ch : chunk.chars) {
        const auto id = snap.ctx.lost.find(corpus.alphabet.symbol(ch));
        if (!id)
          throw DataError("corpus character '" +
                          corpus.alphabet.symbol(ch) +
                          "' unknown to the model snapshot");
        ch = *id;
      }
  reindexed.alphabet = snap.ctx.lost;

  const MappingMatrix m =
      mapping_matrix(snap.params, snap.ctx, snap.meta.temperature);
  const double alpha = alpha_override >= 0.0 ? alpha_override : snap.meta.alpha;
  const SegmentationParams sp = SegmentationParams::uniform(
      snap.meta.range, 1.0 / snap.ctx.lost.size(), alpha);
  const auto preds = predict_corpus(reindexed, vocab, m, sp, k);
  save_predictions(preds, out_path);
  std::printf("wrote %zu predictions to %s\n", preds.size(), out_path.c_str());
  return kExitOk;
}

int cmd_eval(const std::string& predictions_path, const std::string& gold_path,
             const std::vector<int>& ks, const std::string& out_path) {
  const auto preds = load_predictions(predictions_path);
  const auto gold = load_gold(gold_path);
  std::string lines;
  for (int k : ks) {
    const double pk = precision_at_k(preds, gold, k);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "P@%d %.3f\n", k, pk);
    lines += buf;
  }
  std::fputs(lines.c_str(), stdout);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << lines;
  }
  return kExitOk;
}

int cmd_closeness(const std::string& config_path,
                  const std::vector<std::string>& overrides) {
  const ClosenessSpec spec = load_closeness_spec(config_path, overrides);
  const Corpus corpus = load_corpus(spec.corpus_path);
  fs::create_directories(spec.out_dir);
  const std::vector<double> thresholds = spec.thresholds.empty()
                                             ? default_closeness_thresholds()
                                             : spec.thresholds;

  std::vector<std::pair<std::string, double>> summary;
  for (const auto& cand : spec.candidates) {
    const Snapshot snap = load_snapshot(cand.snapshot_path);
    const FeatureTable features = FeatureTable::load(cand.features_path);
    const Vocabulary vocab = load_vocab(cand.vocab_path, features, 1);
    Corpus reindexed = corpus;
    for (auto& ins : reindexed.inscriptions)
      for (auto& chunk : ins.chunks)
        for (auto& ch : chunk.chars) {
          const auto id = snap.ctx.lost.find(corpus.alphabet.symbol(ch));
          if (!id)
            throw DataError("corpus character unknown to candidate " +
                            cand.label);
          ch = *id;
        }
    reindexed.alphabet = snap.ctx.lost;
    const MappingMatrix m =
        mapping_matrix(snap.params, snap.ctx, snap.meta.temperature);
    const SegmentationParams sp = SegmentationParams::uniform(
        snap.meta.range, 1.0 / snap.ctx.lost.size(), snap.meta.alpha);
    const auto preds = predict_corpus(reindexed, vocab, m, sp, spec.k);
    const ClosenessCurve curve = closeness_curve(preds, reindexed, thresholds);
    const double auc = closeness_auc(curve);
    save_closeness_curve(curve, auc, cand.label,
                         (fs::path(spec.out_dir) /
                          ("curve_" + cand.label + ".csv"))
                             .string());
    summary.emplace_back(cand.label, auc);
  }
  std::stable_sort(summary.begin(), summary.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  std::ofstream out(fs::path(spec.out_dir) / "auc_summary.tsv");
  out << "#language\tauc\n";
  for (const auto& [label, auc] : summary) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", auc);
    out << label << '\t' << buf << '\n';
    std::printf("%-16s AUC %.4f\n", label.c_str(), auc);
  }
  return kExitOk;
}

int cmd_gradcheck(const std::string& config_path,
                  const std::vector<std::string>& overrides) {
  const GradCheckSpec spec = load_gradcheck_spec(config_path, overrides);
  const FeatureTable features = FeatureTable::load(spec.features_path);
  const Corpus corpus = load_corpus(spec.corpus_path);
  const Vocabulary vocab =
      load_vocab(spec.vocab_path, features, spec.min_stem_len);
  const ModelContext ctx =
      ModelContext::build(vocab.alphabet, corpus.alphabet, features);
  // Evaluate at a generic point: the zero-logit initialization carries
  // massive alignment ties where the max is not differentiable.
  ModelParams params = init_params(ctx, spec.dim, spec.feature_embeddings,
                                   0.0, spec.seed);
  {
    auto rng = make_rng(spec.seed, "gradcheck-point");
    std::normal_distribution<double> noise(0.0, 0.5);
    for (Eigen::Index r = 0; r < params.mixture_logits.rows(); ++r)
      for (Eigen::Index c = 0; c < params.mixture_logits.cols(); ++c)
        params.mixture_logits(r, c) += noise(rng);
  }
  auto chunks = corpus.all_chunks();
  if (static_cast<int>(chunks.size()) > spec.max_chunks)
    chunks.resize(spec.max_chunks);

  const GradCheckReport report = gradient_check(
      params, ctx, chunks, vocab, spec.objective, spec.eps, spec.coords,
      spec.seed);
  std::printf("gradcheck: %d coordinates, max relative error %.3e "
              "(worst coordinate %zu)\n",
              report.coords_checked, report.max_rel_err,
              report.worst_coordinate);
  return report.max_rel_err > 1e-3 ? kExitGradCheck : kExitOk;
}

int cmd_inspect(const std::string& snapshot_path) {
  const Snapshot snap = load_snapshot(snapshot_path);
  const MappingMatrix m =
      mapping_matrix(snap.params, snap.ctx, snap.meta.temperature);
  std::printf("snapshot: %s\n", snapshot_path.c_str());
  std::printf("  parameterization: %s, dim %d (known embedding %d)\n",
              snap.params.feature_based ? "feature embeddings"
                                        : "per-character embeddings",
              snap.params.dim, snap.params.known_dim());
  std::printf("  known phones: %d, lost characters: %d\n",
              snap.ctx.known.size(), snap.ctx.lost.size());
  std::printf("  temperature %.4g, alpha %.4g, span lengths [%d, %d]\n",
              snap.meta.temperature, snap.meta.alpha,
              snap.meta.range.min_len, snap.meta.range.max_len);
  std::printf("  groups:");
  for (const auto& g : snap.ctx.table.groups) std::printf(" %s", g.c_str());
  std::printf("\n  argmax mapping (phone -> char, probability):\n");
  const auto arg = argmax_mapping(m);
  for (int i = 0; i < snap.ctx.known.size(); ++i) {
    const std::string out = arg[i] == snap.ctx.lost.epsilon_id()
                                ? std::string("(deletion)")
                                : snap.ctx.lost.symbol(arg[i]);
    std::printf("    %-6s -> %-10s %.4f\n", snap.ctx.known.phone(i).c_str(),
                out.c_str(), m.probs(i, arg[i]));
  }
  std::printf("  column mass (lost char <- total incoming probability):\n");
  for (int j = 0; j < snap.ctx.lost.size(); ++j)
    std::printf("    %-6s %.4f\n", snap.ctx.lost.symbol(j).c_str(),
                m.probs.col(j).sum());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cogseg: cognate span identification in undersegmented texts"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic lost-language bundle from a spec file");
  std::string synth_spec, synth_out = "synth_out";
  std::int64_t synth_seed = -1;
  synth->add_option("--spec", synth_spec, "Generator spec JSON")->required();
  synth->add_option("--out", synth_out, "Output bundle directory");
  synth->add_option("--seed", synth_seed, "Override the spec seed");

  auto* train = app.add_subcommand(
      "train", "Train the decipherment model over a (seeds x schedules) grid");
  std::string train_config;
  std::vector<std::string> train_overrides;
  bool train_quiet = false;
  train->add_option("--config", train_config, "Run config JSON")->required();
  train->add_option("--set", train_overrides,
                    "Config override key=value (dotted keys)");
  train->add_flag("--quiet", train_quiet, "Suppress per-run progress lines");

  auto* predict = app.add_subcommand(
      "predict", "Decode a corpus with a snapshot and dump span predictions");
  std::string pr_snapshot, pr_corpus, pr_vocab, pr_features,
      pr_out = "predictions.tsv";
  int pr_k = 10, pr_min_stem = 1;
  double pr_alpha = -1.0;
  predict->add_option("--snapshot", pr_snapshot, "Model snapshot")->required();
  predict->add_option("--corpus", pr_corpus, "Corpus file")->required();
  predict->add_option("--vocab", pr_vocab, "Vocabulary file")->required();
  predict->add_option("--features", pr_features, "Feature table")->required();
  predict->add_option("--out", pr_out, "Output predictions file");
  predict->add_option("--k", pr_k, "Stems per decoded span");
  predict->add_option("--alpha", pr_alpha,
                      "Insertion penalty override (default: snapshot value)");
  predict->add_option("--min-stem-len", pr_min_stem,
                      "Vocabulary stem length filter");

  auto* eval = app.add_subcommand("eval", "Score predictions against gold spans");
  std::string ev_preds, ev_gold, ev_out;
  std::vector<int> ev_ks = {1, 10};
  eval->add_option("--predictions", ev_preds, "Predictions file")->required();
  eval->add_option("--gold", ev_gold, "Gold spans file")->required();
  eval->add_option("--k", ev_ks, "K values for P@K");
  eval->add_option("--out", ev_out, "Also write the table to this file");

  auto* closeness = app.add_subcommand(
      "closeness",
      "Coverage-confidence curves and AUC per candidate known language");
  std::string cl_config;
  std::vector<std::string> cl_overrides;
  closeness->add_option("--config", cl_config, "Closeness config JSON")
      ->required();
  closeness->add_option("--set", cl_overrides,
                        "Config override key=value (dotted keys)");

  auto* gradcheck = app.add_subcommand(
      "gradcheck",
      "Finite-difference check of the analytic gradients (exit 5 on failure)");
  std::string gc_config;
  std::vector<std::string> gc_overrides;
  gradcheck->add_option("--config", gc_config, "Gradcheck config JSON")
      ->required();
  gradcheck->add_option("--set", gc_overrides,
                        "Config override key=value (dotted keys)");

  auto* inspect =
      app.add_subcommand("inspect", "Summarize a model snapshot");
  std::string in_snapshot;
  inspect->add_option("--snapshot", in_snapshot, "Model snapshot")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_spec, synth_out, synth_seed);
    if (train->parsed())
      return cmd_train(train_config, train_overrides, train_quiet);
    if (predict->parsed())
      return cmd_predict(pr_snapshot, pr_corpus, pr_vocab, pr_features, pr_out,
                         pr_k, pr_alpha, pr_min_stem);
    if (eval->parsed()) return cmd_eval(ev_preds, ev_gold, ev_ks, ev_out);
    if (closeness->parsed()) return cmd_closeness(cl_config, cl_overrides);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_config, gc_overrides);
    if (inspect->parsed()) return cmd_inspect(in_snapshot);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << std::endl;
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitData;
  }
  return kExitOk;
}
