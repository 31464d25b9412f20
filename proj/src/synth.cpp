// cogseg/synth.cpp

#include "cogseg/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"

namespace cogseg {

namespace {

using nlohmann::json;

std::string phone_symbol(int i) { return std::string(1, static_cast<char>('A' + i)); }
std::string lost_symbol(int i) { return std::string(1, static_cast<char>('a' + i)); }

// Hierarchical feature assignment: group g buckets phone ids by i >> g, so
// phones with nearby ids share the values of the coarse groups.
FeatureTable make_feature_table(int known_size) {
  FeatureTable t;
  t.groups.resize(kFeatureGroups);
  for (int g = 0; g < kFeatureGroups; ++g) t.groups[g] = "g" + std::to_string(g);
  for (int g = 0; g < kFeatureGroups; ++g) {
    const int values = std::max(1, (known_size + (1 << g) - 1) >> g);
    for (int v = 0; v < values; ++v)
      t.value_names[g].push_back("g" + std::to_string(g) + "v" +
                                 std::to_string(v));
  }
  for (int i = 0; i < known_size; ++i) {
    std::array<int, kFeatureGroups> vals{};
    for (int g = 0; g < kFeatureGroups; ++g) vals[g] = i >> g;
    t.entries.emplace(phone_symbol(i), vals);
  }
  return t;
}

Vocabulary sample_vocab(const SynthSpec& spec, const KnownAlphabet& alphabet,
                        int size, std::uint64_t stream,
                        const std::set<std::vector<int>>* exclude) {
  auto rng = make_rng(spec.seed, "vocab-" + std::to_string(stream));
  std::uniform_int_distribution<int> len_dist(spec.stem_len_min,
                                              spec.stem_len_max);
  std::uniform_int_distribution<int> phone_dist(0, alphabet.size() - 1);
  Vocabulary vocab;
  vocab.alphabet = alphabet;
  vocab.min_stem_len = spec.stem_len_min;
  std::set<std::vector<int>> seen;
  int guard = 0;
  while (static_cast<int>(vocab.stems.size()) < size) {
    if (++guard > size * 1000)
      throw SpecError("cannot sample enough distinct stems for the spec");
    const int len = len_dist(rng);
    std::vector<int> phones(len);
    for (int& p : phones) p = phone_dist(rng);
    if (seen.count(phones)) continue;
    if (exclude != nullptr && exclude->count(phones)) continue;
    seen.insert(phones);
    Stem s;
    s.phones = phones;
    for (int p : phones) s.surface += alphabet.phone(p);
    vocab.stems.push_back(std::move(s));
  }
  return vocab;
}

}  // namespace

void SynthSpec::validate() const {
  if (known_alphabet_size < 2 || lost_alphabet_size < 2)
    throw SpecError("alphabet sizes must be >= 2");
  if (known_alphabet_size > 26 || lost_alphabet_size > 26)
    throw SpecError("synthetic alphabets support at most 26 symbols");
  if (lost_alphabet_size < known_alphabet_size)
    throw SpecError("lost alphabet smaller than needed bijection");
  for (double r : {sub_rate, del_rate, ins_rate, filler_rate, whitespace_ratio})
    if (r < 0.0 || r > 1.0) throw SpecError("rates must lie in [0, 1]");
  if (stem_len_min < 1 || stem_len_max < stem_len_min)
    throw SpecError("invalid stem length range");
  if (vocab_size < 1 || num_inscriptions < 1 || tokens_per_inscription < 1)
    throw SpecError("sizes must be >= 1");
  if (filler_rate >= 1.0) throw SpecError("filler rate must be < 1");
}

SynthBundle generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  SynthBundle b;
  b.spec = spec;
  b.features = make_feature_table(spec.known_alphabet_size);

  std::vector<std::string> phones, lost_chars;
  for (int i = 0; i < spec.known_alphabet_size; ++i)
    phones.push_back(phone_symbol(i));
  for (int i = 0; i < spec.lost_alphabet_size; ++i)
    lost_chars.push_back(lost_symbol(i));
  b.known = KnownAlphabet(phones);
  b.lost = LostAlphabet(lost_chars);

  // Ground-truth bijection onto a subset of the lost alphabet.
  auto map_rng = make_rng(spec.seed, "mapping");
  b.true_mapping.resize(spec.known_alphabet_size);
  std::vector<int> lost_ids(spec.lost_alphabet_size);
  std::iota(lost_ids.begin(), lost_ids.end(), 0);
  std::shuffle(lost_ids.begin(), lost_ids.end(), map_rng);
  for (int i = 0; i < spec.known_alphabet_size; ++i)
    b.true_mapping[i] = lost_ids[i];

  b.vocab = sample_vocab(spec, b.known, spec.vocab_size, 0, nullptr);
  std::set<std::vector<int>> true_stems;
  for (const auto& s : b.vocab.stems) true_stems.insert(s.phones);
  const int decoy_size =
      spec.decoy_vocab_size > 0 ? spec.decoy_vocab_size : spec.vocab_size;
  b.decoy_vocab = sample_vocab(spec, b.known, decoy_size, 1, &true_stems);

  auto render_rng = make_rng(spec.seed, "render");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> stem_dist(0, b.vocab.size() - 1);
  std::uniform_int_distribution<int> char_dist(0, spec.lost_alphabet_size - 1);

  // Expected filler run length per slot, tuned so that the filler fraction of
  // all characters is approximately filler_rate.
  const double mean_stem_len = 0.5 * (spec.stem_len_min + spec.stem_len_max);
  const double expected_token_chars = spec.tokens_per_inscription *
                                      mean_stem_len *
                                      (1.0 - spec.del_rate + spec.ins_rate);
  const int slots = spec.tokens_per_inscription + 1;
  const double mu = spec.filler_rate <= 0.0
                        ? 0.0
                        : (spec.filler_rate / (1.0 - spec.filler_rate)) *
                              expected_token_chars / slots;
  const double filler_continue = mu / (1.0 + mu);

  auto noise_char = [&](int true_char, std::mt19937_64& rng) -> int {
    if (!spec.feature_similar_noise) return char_dist(rng);
    // Pick the lost character of a phone with an adjacent id, which shares
    // most feature values with the phone that produced true_char.
    int phone = 0;
    for (int i = 0; i < spec.known_alphabet_size; ++i)
      if (b.true_mapping[i] == true_char) phone = i;
    int neighbor = phone + (u(rng) < 0.5 ? 1 : -1);
    if (neighbor < 0) neighbor = 1;
    if (neighbor >= spec.known_alphabet_size)
      neighbor = spec.known_alphabet_size - 2;
    return b.true_mapping[neighbor];
  };

  b.gold_span_min_len = 0;
  b.gold_span_max_len = 0;

  std::vector<std::pair<std::string, std::string>> lines;  // id, ratio-applied
  for (int n = 0; n < spec.num_inscriptions; ++n) {
    const std::string id = "ins" + std::to_string(n);
    std::string segmented;
    int char_pos = 0;  // position in the whitespace-stripped stream
    bool first_word = true;
    auto append_word = [&](const std::string& w) {
      if (w.empty()) return;
      if (!first_word) segmented += ' ';
      first_word = false;
      segmented += w;
    };
    auto filler_run = [&]() {
      std::string w;
      while (filler_continue > 0.0 && u(render_rng) < filler_continue) {
        w += b.lost.symbol(char_dist(render_rng));
        ++char_pos;
      }
      append_word(w);
    };

    for (int t = 0; t < spec.tokens_per_inscription; ++t) {
      filler_run();
      const Stem& stem = b.vocab.stems[stem_dist(render_rng)];
      std::string w;
      const int start = char_pos;
      for (int phone : stem.phones) {
        const bool deleted = u(render_rng) < spec.del_rate;
        if (!deleted) {
          int c = b.true_mapping[phone];
          if (u(render_rng) < spec.sub_rate) c = noise_char(c, render_rng);
          w += b.lost.symbol(c);
          ++char_pos;
        }
        if (u(render_rng) < spec.ins_rate) {
          w += b.lost.symbol(char_dist(render_rng));
          ++char_pos;
        }
      }
      append_word(w);
      const int len = char_pos - start;
      if (len > 0) {
        b.gold.push_back(GoldSpan{id, start, char_pos, stem.surface});
        if (b.gold_span_min_len == 0 || len < b.gold_span_min_len)
          b.gold_span_min_len = len;
        b.gold_span_max_len = std::max(b.gold_span_max_len, len);
      }
    }
    filler_run();

    b.segmented_lines.push_back(id + "\t" + segmented);
    const std::string applied = apply_whitespace_ratio(
        segmented, spec.whitespace_ratio, derive_stream(spec.seed, "ws-" + id));
    lines.emplace_back(id, applied);
  }

  // Assemble the corpus object directly; equivalent to saving and reloading.
  b.corpus.alphabet = b.lost;
  for (const auto& [id, text] : lines) {
    Inscription ins;
    ins.id = id;
    ins.raw = text;
    const int index = static_cast<int>(b.corpus.inscriptions.size());
    int offset = 0;
    Chunk cur;
    cur.inscription_index = index;
    cur.offset = 0;
    auto flush = [&]() {
      if (!cur.chars.empty()) {
        ins.chunks.push_back(cur);
        cur.chars.clear();
      }
      cur.offset = offset;
    };
    for (const auto& cp : utf8_split(text)) {
      if (cp == " ") {
        flush();
      } else {
        cur.chars.push_back(b.lost.id(cp));
        ++offset;
      }
    }
    flush();
    ins.total_chars = offset;
    b.corpus.total_chars += offset;
    b.corpus.inscriptions.push_back(std::move(ins));
  }
  return b;
}

void save_bundle(const SynthBundle& b, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);

  save_corpus(b.corpus, (root / "corpus.txt").string());
  {
    std::ofstream out(root / "corpus_segmented.txt");
    if (!out) throw DataError("cannot write corpus_segmented.txt");
    for (const auto& line : b.segmented_lines) out << line << '\n';
  }
  save_vocab(b.vocab, (root / "vocab.tsv").string());
  save_vocab(b.decoy_vocab, (root / "decoy_vocab.tsv").string());
  b.features.save((root / "features.csv").string());
  save_gold(b.gold, (root / "gold.tsv").string());
  {
    std::ofstream out(root / "truth_mapping.tsv");
    if (!out) throw DataError("cannot write truth_mapping.tsv");
    for (int i = 0; i < b.known.size(); ++i)
      out << b.known.phone(i) << '\t' << b.lost.symbol(b.true_mapping[i])
          << '\n';
  }

  json manifest;
  manifest["known_alphabet_size"] = b.spec.known_alphabet_size;
  manifest["lost_alphabet_size"] = b.spec.lost_alphabet_size;
  manifest["sub_rate"] = b.spec.sub_rate;
  manifest["del_rate"] = b.spec.del_rate;
  manifest["ins_rate"] = b.spec.ins_rate;
  manifest["vocab_size"] = b.spec.vocab_size;
  manifest["stem_len_min"] = b.spec.stem_len_min;
  manifest["stem_len_max"] = b.spec.stem_len_max;
  manifest["num_inscriptions"] = b.spec.num_inscriptions;
  manifest["tokens_per_inscription"] = b.spec.tokens_per_inscription;
  manifest["filler_rate"] = b.spec.filler_rate;
  manifest["whitespace_ratio"] = b.spec.whitespace_ratio;
  manifest["seed"] = b.spec.seed;
  manifest["feature_similar_noise"] = b.spec.feature_similar_noise;
  manifest["decoy_vocab_size"] = b.spec.decoy_vocab_size;
  manifest["gold_span_min_len"] = b.gold_span_min_len;
  manifest["gold_span_max_len"] = b.gold_span_max_len;
  manifest["num_gold_spans"] = b.gold.size();
  manifest["total_chars"] = b.corpus.total_chars;
  std::ofstream out(root / "manifest.json");
  if (!out) throw DataError("cannot write manifest.json");
  out << manifest.dump(2) << '\n';
}

LoadedBundle load_bundle(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  LoadedBundle lb;
  lb.features = FeatureTable::load((root / "features.csv").string());
  lb.corpus = load_corpus((root / "corpus.txt").string());
  lb.vocab = load_vocab((root / "vocab.tsv").string(), lb.features);
  if (fs::exists(root / "decoy_vocab.tsv"))
    lb.decoy_vocab =
        load_vocab((root / "decoy_vocab.tsv").string(), lb.features);
  lb.gold = load_gold((root / "gold.tsv").string());
  {
    std::ifstream in(root / "truth_mapping.tsv");
    std::string line;
    while (std::getline(in, line)) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      lb.truth_mapping.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
  }
  std::ifstream mf(root / "manifest.json");
  if (mf) {
    json manifest = json::parse(mf);
    lb.gold_span_min_len = manifest.value("gold_span_min_len", 0);
    lb.gold_span_max_len = manifest.value("gold_span_max_len", 0);
  }
  return lb;
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open synth spec file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path, 0, e.what());
  }
  SynthSpec spec;
  const std::set<std::string> known_keys = {
      "known_alphabet_size", "lost_alphabet_size",
      "sub_rate",            "del_rate",
      "ins_rate",            "vocab_size",
      "stem_len_min",        "stem_len_max",
      "num_inscriptions",    "tokens_per_inscription",
      "filler_rate",         "whitespace_ratio",
      "seed",                "feature_similar_noise",
      "decoy_vocab_size"};
  for (const auto& [key, _] : j.items())
    if (!known_keys.count(key))
      throw ConfigError("unknown synth spec key: " + key);
  spec.known_alphabet_size = j.value("known_alphabet_size", spec.known_alphabet_size);
  spec.lost_alphabet_size = j.value("lost_alphabet_size", spec.lost_alphabet_size);
  spec.sub_rate = j.value("sub_rate", spec.sub_rate);
  spec.del_rate = j.value("del_rate", spec.del_rate);
  spec.ins_rate = j.value("ins_rate", spec.ins_rate);
  spec.vocab_size = j.value("vocab_size", spec.vocab_size);
  spec.stem_len_min = j.value("stem_len_min", spec.stem_len_min);
  spec.stem_len_max = j.value("stem_len_max", spec.stem_len_max);
  spec.num_inscriptions = j.value("num_inscriptions", spec.num_inscriptions);
  spec.tokens_per_inscription =
      j.value("tokens_per_inscription", spec.tokens_per_inscription);
  spec.filler_rate = j.value("filler_rate", spec.filler_rate);
  spec.whitespace_ratio = j.value("whitespace_ratio", spec.whitespace_ratio);
  spec.seed = j.value("seed", spec.seed);
  spec.feature_similar_noise =
      j.value("feature_similar_noise", spec.feature_similar_noise);
  spec.decoy_vocab_size = j.value("decoy_vocab_size", spec.decoy_vocab_size);
  spec.validate();
  return spec;
}

}  // namespace cogseg
