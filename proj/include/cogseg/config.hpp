// cogseg/config.hpp
//
// Run configuration files: JSON on disk, strict key validation, dotted-key
// overrides from the command line. Flags and config keys correspond 1:1.

#pragma once

#include <string>
#include <vector>

#include "cogseg/training.hpp"

namespace cogseg {

enum class Knowledge { kBase, kPartial, kFull };

struct TrainRunSpec {
  // Data inputs.
  std::string corpus_path;
  std::string vocab_path;
  std::string features_path;
  std::string gold_path;           // optional; enables P@K selection
  std::string truth_mapping_path;  // required for partial/full knowledge
  std::string out_dir = "run_out";
  int min_stem_len = 1;

  Knowledge knowledge = Knowledge::kBase;
  std::vector<std::string> supervised_phones;  // partial knowledge set

  std::vector<std::uint64_t> seeds;  // explicit; else seed..seed+restarts-1
  std::vector<AnnealSchedule> schedules;

  TrainConfig train;
};

// Parses the JSON file and applies key=value overrides (dotted keys).
// Unknown keys are rejected.
TrainRunSpec load_train_spec(const std::string& path,
                             const std::vector<std::string>& overrides);

// Same, from JSON text instead of a file.
TrainRunSpec load_train_spec_text(const std::string& text,
                                  const std::vector<std::string>& overrides);

// Serializes the effective configuration back to JSON text.
std::string train_spec_to_json(const TrainRunSpec& spec);

struct ClosenessCandidate {
  std::string label;
  std::string snapshot_path;
  std::string vocab_path;
  std::string features_path;
};

struct ClosenessSpec {
  std::string corpus_path;
  std::string out_dir = "closeness_out";
  int k = 10;
  std::vector<double> thresholds;  // default [0.3, 1.0] grid when empty
  std::vector<ClosenessCandidate> candidates;
};

ClosenessSpec load_closeness_spec(const std::string& path,
                                  const std::vector<std::string>& overrides);

struct GradCheckSpec {
  std::string corpus_path;
  std::string vocab_path;
  std::string features_path;
  int min_stem_len = 1;
  int coords = 50;
  double eps = 1e-4;
  int max_chunks = 8;  // keep the finite-difference loop small
  std::uint64_t seed = 0;
  int dim = 4;
  bool feature_embeddings = true;
  ObjectiveConfig objective;
};

GradCheckSpec load_gradcheck_spec(const std::string& path,
                                  const std::vector<std::string>& overrides);

// Loaded data shared by train/gradcheck: feature table, corpus, vocabulary
// and (optionally) supervision targets resolved to ids.
struct LoadedInputs {
  FeatureTable features;
  Corpus corpus;
  Vocabulary vocab;
  ModelContext ctx;
  std::vector<GoldSpan> gold;
  std::map<int, int> supervision;
};

LoadedInputs load_inputs(const TrainRunSpec& spec);

}  // namespace cogseg
