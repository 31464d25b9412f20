// cogseg/corpus.hpp
//
// Corpus ingestion: inscriptions split into whitespace-delimited chunks,
// known-language stem vocabularies, gold span annotations, and the
// whitespace-ratio simulator.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cogseg/phonetics.hpp"

namespace cogseg {

// A maximal whitespace-free piece of an inscription. Character ids index the
// lost alphabet. `offset` is the chunk's start within the inscription's
// whitespace-stripped character stream.
struct Chunk {
  std::vector<int> chars;
  int inscription_index = 0;
  int offset = 0;

  int size() const { return static_cast<int>(chars.size()); }
};

struct Inscription {
  std::string id;
  std::string raw;  // original text including attested whitespace
  std::vector<Chunk> chunks;
  int total_chars = 0;  // sum of chunk lengths
};

struct Corpus {
  std::vector<Inscription> inscriptions;
  LostAlphabet alphabet;
  std::int64_t total_chars = 0;

  std::vector<const Chunk*> all_chunks() const;
  // Surface string of chars [start, end) of an inscription's char stream.
  std::string surface(int inscription_index, int start, int end) const;
};

struct Stem {
  std::vector<int> phones;  // ids into the known alphabet
  std::string surface;
};

struct Vocabulary {
  std::vector<Stem> stems;
  KnownAlphabet alphabet;
  int min_stem_len = 1;
  int filtered_short = 0;    // rows dropped by the length filter
  int filtered_duplicate = 0;

  int size() const { return static_cast<int>(stems.size()); }
  int max_stem_len() const;
};

struct GoldSpan {
  std::string inscription_id;
  int start = 0;  // indices into the whitespace-stripped char stream
  int end = 0;
  std::string stem;
};

// One scored candidate (chunk span, stem).
struct SpanPrediction {
  std::string inscription_id;
  int chunk_offset = 0;
  int start = 0;  // absolute within the inscription char stream
  int end = 0;
  std::string span_surface;
  std::string stem;
  double confidence = 0.0;
};

// --- loading / saving ------------------------------------------------------

// One inscription per line, optional `id<TAB>` prefix; text is split into
// chunks at whitespace. The lost alphabet is inferred from the text.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

// Lines of `surface<TAB>phone1 phone2 ...`. Phones are checked against the
// feature table; the known alphabet is inferred from the vocabulary.
Vocabulary load_vocab(const std::string& path, const FeatureTable& features,
                      int min_stem_len = 1);
void save_vocab(const Vocabulary& vocab, const std::string& path);

std::vector<GoldSpan> load_gold(const std::string& path);
void save_gold(const std::vector<GoldSpan>& gold, const std::string& path);

void save_predictions(const std::vector<SpanPrediction>& preds,
                      const std::string& path);
std::vector<SpanPrediction> load_predictions(const std::string& path);

// Keeps each whitespace character independently with probability `keep_prob`;
// all other characters pass through unchanged.
std::string apply_whitespace_ratio(const std::string& segmented_text,
                                   double keep_prob, std::uint64_t seed);

}  // namespace cogseg
