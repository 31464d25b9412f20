// cogseg/synth.hpp
//
// Synthetic lost-language generator: renders inscriptions by transducing
// known-language stems through a ground-truth character mapping with
// substitution/deletion/insertion noise, interleaved filler characters and
// a configurable whitespace ratio. Emits exact gold spans for evaluation.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cogseg/corpus.hpp"

namespace cogseg {

struct SynthSpec {
  int known_alphabet_size = 12;
  int lost_alphabet_size = 12;
  double sub_rate = 0.0;  // per emitted character, replace by a noise char
  double del_rate = 0.0;  // per stem phone, drop the character
  double ins_rate = 0.0;  // per stem phone, append an extra random char
  int vocab_size = 60;
  int stem_len_min = 4;
  int stem_len_max = 7;
  int num_inscriptions = 300;
  int tokens_per_inscription = 4;
  double filler_rate = 0.15;      // target fraction of filler characters
  double whitespace_ratio = 0.5;  // kept gold-boundary probability
  std::uint64_t seed = 0;
  // When set, substitution noise picks the lost character of a
  // feature-adjacent phone instead of a uniform one.
  bool feature_similar_noise = false;
  int decoy_vocab_size = 0;  // 0 = same as vocab_size

  void validate() const;  // throws SpecError
};

struct SynthBundle {
  SynthSpec spec;
  FeatureTable features;
  KnownAlphabet known;
  LostAlphabet lost;
  Vocabulary vocab;
  Vocabulary decoy_vocab;           // match-free control vocabulary
  std::vector<int> true_mapping;    // phone id -> lost char id (bijection)
  std::vector<std::string> segmented_lines;  // "id\ttext", whitespace kept
  Corpus corpus;                    // after whitespace-ratio application
  std::vector<GoldSpan> gold;
  int gold_span_min_len = 0;
  int gold_span_max_len = 0;
};

SynthBundle generate_synthetic(const SynthSpec& spec);

// Writes corpus.txt, corpus_segmented.txt, vocab.tsv, decoy_vocab.tsv,
// features.csv, gold.tsv, truth_mapping.tsv and manifest.json into `dir`.
void save_bundle(const SynthBundle& bundle, const std::string& dir);

// Rebuilds the typed objects from a bundle directory.
struct LoadedBundle {
  FeatureTable features;
  Corpus corpus;
  Vocabulary vocab;
  Vocabulary decoy_vocab;
  std::vector<GoldSpan> gold;
  std::vector<std::pair<std::string, std::string>> truth_mapping;
  int gold_span_min_len = 0;
  int gold_span_max_len = 0;
};
LoadedBundle load_bundle(const std::string& dir);

// Parses a SynthSpec from a JSON file; unknown keys are rejected.
SynthSpec load_synth_spec(const std::string& path);

}  // namespace cogseg
