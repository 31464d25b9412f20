// tests/test_corpus.cpp

#include "cogseg/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "cogseg/synth.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cogseg;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cogseg_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("corpus loading splits chunks at whitespace and keeps offsets") {
  const auto dir = temp_dir("corpus_load");
  const auto path = (dir / "corpus.txt").string();
  {
    std::ofstream out(path);
    out << "first\tab cd e\n";
    out << "bare line\n";
    out << "\n";
  }
  const Corpus corpus = load_corpus(path);
  REQUIRE(corpus.inscriptions.size() == 2);
  const Inscription& a = corpus.inscriptions[0];
  CHECK(a.id == "first");
  REQUIRE(a.chunks.size() == 3);
  CHECK(a.chunks[0].offset == 0);
  CHECK(a.chunks[1].offset == 2);
  CHECK(a.chunks[2].offset == 4);
  CHECK(a.total_chars == 5);
  CHECK(corpus.surface(0, 2, 4) == "cd");

  const Inscription& b = corpus.inscriptions[1];
  CHECK(b.id == "1");
  CHECK(b.chunks.size() == 2);

  const auto path2 = (dir / "copy.txt").string();
  save_corpus(corpus, path2);
  const Corpus reloaded = load_corpus(path2);
  CHECK(reloaded.inscriptions.size() == corpus.inscriptions.size());
  CHECK(reloaded.total_chars == corpus.total_chars);
  CHECK(reloaded.alphabet.chars() == corpus.alphabet.chars());
}

TEST_CASE("corpus loading is UTF-8 aware") {
  const auto dir = temp_dir("corpus_utf8");
  const auto path = (dir / "corpus.txt").string();
  {
    std::ofstream out(path);
    out << "g1\tþū gard\n";
  }
  const Corpus corpus = load_corpus(path);
  REQUIRE(corpus.inscriptions.size() == 1);
  CHECK(corpus.inscriptions[0].chunks[0].size() == 2);  // þ ū
  CHECK(corpus.inscriptions[0].total_chars == 6);
  CHECK(corpus.alphabet.find("þ").has_value());
  CHECK(corpus.surface(0, 0, 2) == "þū");
}

TEST_CASE("vocabulary loading filters, dedupes and validates phones") {
  const auto dir = temp_dir("vocab_load");
  FeatureTable t = oracle::make_table(4);
  const auto vpath = (dir / "vocab.tsv").string();
  {
    std::ofstream out(vpath);
    out << "ab\tA B\n";
    out << "a\tA\n";          // filtered by min length
    out << "ab\tA B\n";       // duplicate
    out << "cd\tC D\n";
  }
  const Vocabulary v = load_vocab(vpath, t, 2);
  CHECK(v.size() == 2);
  CHECK(v.filtered_short == 1);
  CHECK(v.filtered_duplicate == 1);
  CHECK(v.max_stem_len() == 2);

  {
    std::ofstream out(vpath);
    out << "zz\tZ Z\n";
  }
  CHECK_THROWS_AS(load_vocab(vpath, t, 1), MissingPhone);

  {
    std::ofstream out(vpath);
    out << "only-one-field\n";
  }
  CHECK_THROWS_AS(load_vocab(vpath, t, 1), ParseError);
}

TEST_CASE("gold and prediction files round-trip") {
  const auto dir = temp_dir("gold_preds");
  std::vector<GoldSpan> gold = {{"i0", 0, 4, "gard"}, {"i1", 3, 7, "haiþ"}};
  const auto gpath = (dir / "gold.tsv").string();
  save_gold(gold, gpath);
  const auto gold2 = load_gold(gpath);
  REQUIRE(gold2.size() == 2);
  CHECK(gold2[1].inscription_id == "i1");
  CHECK(gold2[1].start == 3);
  CHECK(gold2[1].stem == "haiþ");

  std::vector<SpanPrediction> preds(2);
  preds[0] = {"i0", 0, 0, 4, "gard", "garð", 0.75};
  preds[1] = {"i0", 0, 0, 3, "gar", "gar", 0.5};
  const auto ppath = (dir / "preds.tsv").string();
  save_predictions(preds, ppath);
  const auto preds2 = load_predictions(ppath);
  REQUIRE(preds2.size() == 2);
  CHECK(preds2[0].stem == "garð");
  CHECK(preds2[0].confidence == doctest::Approx(0.75));

  {
    std::ofstream out(gpath);
    out << "i0\t5\t3\tbad\n";  // end <= start
  }
  CHECK_THROWS_AS(load_gold(gpath), ParseError);
}

TEST_CASE("whitespace ratio limits") {
  const std::string text = "ab cd ef gh";
  CHECK(apply_whitespace_ratio(text, 1.0, 1) == text);
  CHECK(apply_whitespace_ratio(text, 0.0, 1) == "abcdefgh");
  CHECK_THROWS_AS(apply_whitespace_ratio(text, 1.5, 1), ConfigError);
}

TEST_CASE("whitespace ratio never alters non-whitespace characters") {
  auto rng = make_rng(311, "ws-prop");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> ch('a', 'e');
  for (int trial = 0; trial < 20; ++trial) {
    std::string text;
    for (int i = 0; i < 60; ++i)
      text += u(rng) < 0.25 ? ' ' : static_cast<char>(ch(rng));
    const double p = u(rng);
    const std::string out = apply_whitespace_ratio(text, p, trial);
    std::string stripped_in, stripped_out;
    for (char c : text)
      if (c != ' ') stripped_in += c;
    for (char c : out)
      if (c != ' ') stripped_out += c;
    CHECK(stripped_in == stripped_out);
  }
}

TEST_CASE("noiseless generator produces one gold span per token") {
  SynthSpec spec;
  spec.known_alphabet_size = 6;
  spec.lost_alphabet_size = 6;
  spec.vocab_size = 10;
  spec.stem_len_min = 3;
  spec.stem_len_max = 5;
  spec.num_inscriptions = 20;
  spec.tokens_per_inscription = 3;
  spec.sub_rate = spec.del_rate = spec.ins_rate = 0.0;
  spec.filler_rate = 0.0;
  spec.whitespace_ratio = 1.0;
  spec.seed = 5;
  const SynthBundle b = generate_synthetic(spec);

  CHECK(b.gold.size() == 60);
  std::int64_t covered = 0;
  for (const auto& g : b.gold) covered += g.end - g.start;
  CHECK(covered == b.corpus.total_chars);

  // Every chunk is exactly one transduced stem.
  for (const auto& ins : b.corpus.inscriptions)
    for (const auto& chunk : ins.chunks) {
      bool matched = false;
      for (const auto& stem : b.vocab.stems) {
        if (static_cast<int>(stem.phones.size()) != chunk.size()) continue;
        bool same = true;
        for (int i = 0; i < chunk.size(); ++i)
          if (b.true_mapping[stem.phones[i]] != chunk.chars[i]) same = false;
        matched |= same;
      }
      CHECK(matched);
    }
}

TEST_CASE("generator output is byte-identical for a fixed seed") {
  SynthSpec spec;
  spec.known_alphabet_size = 5;
  spec.lost_alphabet_size = 5;
  spec.vocab_size = 8;
  spec.stem_len_min = 3;
  spec.stem_len_max = 4;
  spec.num_inscriptions = 10;
  spec.tokens_per_inscription = 2;
  spec.sub_rate = 0.1;
  spec.del_rate = 0.05;
  spec.ins_rate = 0.05;
  spec.filler_rate = 0.2;
  spec.whitespace_ratio = 0.5;
  spec.seed = 77;

  const auto d1 = temp_dir("synth_a");
  const auto d2 = temp_dir("synth_b");
  save_bundle(generate_synthetic(spec), d1.string());
  save_bundle(generate_synthetic(spec), d2.string());
  for (const char* name :
       {"corpus.txt", "corpus_segmented.txt", "vocab.tsv", "decoy_vocab.tsv",
        "features.csv", "gold.tsv", "truth_mapping.tsv", "manifest.json"}) {
    CHECK(slurp(d1 / name) == slurp(d2 / name));
    CHECK(!slurp(d1 / name).empty());
  }

  const LoadedBundle lb = load_bundle(d1.string());
  CHECK(lb.corpus.total_chars > 0);
  CHECK(lb.vocab.size() == 8);
  CHECK(lb.decoy_vocab.size() == 8);
  CHECK(lb.gold.size() <= 20);
  CHECK(lb.truth_mapping.size() == 5);
  CHECK(lb.gold_span_min_len >= 1);

  // Decoy stems never coincide with true stems.
  std::set<std::string> true_surfaces;
  for (const auto& s : lb.vocab.stems) true_surfaces.insert(s.surface);
  for (const auto& s : lb.decoy_vocab.stems)
    CHECK(!true_surfaces.count(s.surface));
}

TEST_CASE("mean chunk length tracks the noise rates") {
  SynthSpec spec;
  spec.known_alphabet_size = 8;
  spec.lost_alphabet_size = 8;
  spec.vocab_size = 30;
  spec.stem_len_min = 4;
  spec.stem_len_max = 6;
  spec.num_inscriptions = 1000;
  spec.tokens_per_inscription = 5;
  spec.sub_rate = 0.0;
  spec.del_rate = 0.1;
  spec.ins_rate = 0.05;
  spec.filler_rate = 0.0;
  spec.whitespace_ratio = 0.0;
  spec.seed = 13;
  const SynthBundle b = generate_synthetic(spec);

  double mean_stem = 0.0;
  for (const auto& s : b.vocab.stems) mean_stem += s.phones.size();
  mean_stem /= b.vocab.size();

  double total = 0.0;
  int count = 0;
  for (const auto& ins : b.corpus.inscriptions)
    for (const auto& chunk : ins.chunks) {
      total += chunk.size();
      ++count;
    }
  const double observed = total / count;
  const double expected =
      5.0 * mean_stem * (1.0 - spec.del_rate + spec.ins_rate);
  CHECK(observed == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("gold spans always fit the generating length range") {
  SynthSpec spec;
  spec.known_alphabet_size = 6;
  spec.lost_alphabet_size = 6;
  spec.vocab_size = 12;
  spec.stem_len_min = 3;
  spec.stem_len_max = 5;
  spec.num_inscriptions = 50;
  spec.tokens_per_inscription = 3;
  spec.sub_rate = 0.1;
  spec.del_rate = 0.1;
  spec.ins_rate = 0.1;
  spec.filler_rate = 0.1;
  spec.whitespace_ratio = 0.5;
  spec.seed = 21;
  const SynthBundle b = generate_synthetic(spec);
  for (const auto& g : b.gold) {
    const int len = g.end - g.start;
    CHECK(len >= b.gold_span_min_len);
    CHECK(len <= b.gold_span_max_len);
  }
  CHECK(b.gold_span_max_len <= 2 * spec.stem_len_max);
}

TEST_CASE("infeasible specs are rejected") {
  SynthSpec spec;
  spec.known_alphabet_size = 8;
  spec.lost_alphabet_size = 4;  // smaller than the bijection needs
  CHECK_THROWS_AS(spec.validate(), SpecError);

  SynthSpec bad;
  bad.sub_rate = 1.5;
  CHECK_THROWS_AS(bad.validate(), SpecError);
}

}  // TEST_SUITE
