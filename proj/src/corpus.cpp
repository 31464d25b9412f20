// cogseg/corpus.cpp

#include "cogseg/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace cogseg {

namespace {

bool is_space_char(char c) { return c == ' ' || c == '\t'; }

std::string strip_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<const Chunk*> Corpus::all_chunks() const {
  std::vector<const Chunk*> out;
  for (const auto& ins : inscriptions)
    for (const auto& c : ins.chunks) out.push_back(&c);
  return out;
}

std::string Corpus::surface(int inscription_index, int start, int end) const {
  const Inscription& ins = inscriptions.at(inscription_index);
  std::string out;
  for (const auto& chunk : ins.chunks) {
    for (int i = 0; i < chunk.size(); ++i) {
      const int pos = chunk.offset + i;
      if (pos >= start && pos < end) out += alphabet.symbol(chunk.chars[i]);
    }
  }
  return out;
}

int Vocabulary::max_stem_len() const {
  int m = 0;
  for (const auto& s : stems) m = std::max(m, static_cast<int>(s.phones.size()));
  return m;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);

  struct RawInscription {
    std::string id;
    std::string text;
  };
  std::vector<RawInscription> raws;
  std::set<std::string> alphabet_set;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    std::string id, text;
    const auto tab = line.find('\t');
    if (tab != std::string::npos) {
      id = line.substr(0, tab);
      text = line.substr(tab + 1);
      if (id.empty()) throw ParseError(path, line_no, "empty inscription id");
    } else {
      id = std::to_string(raws.size());
      text = line;
    }
    raws.push_back({id, text});
    for (const auto& cp : utf8_split(text))
      if (!is_space_char(cp[0]) || cp.size() > 1) alphabet_set.insert(cp);
  }

  Corpus corpus;
  corpus.alphabet = LostAlphabet(
      std::vector<std::string>(alphabet_set.begin(), alphabet_set.end()));

  if (raws.empty())
    std::cerr << "warning: corpus file " << path << " contains no inscriptions"
              << std::endl;

  for (const auto& raw : raws) {
    Inscription ins;
    ins.id = raw.id;
    ins.raw = raw.text;
    const int index = static_cast<int>(corpus.inscriptions.size());
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
    for (const auto& cp : utf8_split(raw.text)) {
      if (cp.size() == 1 && is_space_char(cp[0])) {
        flush();
      } else {
        cur.chars.push_back(corpus.alphabet.id(cp));
        ++offset;
        }
    }
    flush();
    ins.total_chars = offset;
    corpus.total_chars += offset;
    corpus.inscriptions.push_back(std::move(ins));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path);
  for (const auto& ins : corpus.inscriptions)
    out << ins.id << '\t' << ins.raw << '\n';
}

Vocabulary load_vocab(const std::string& path, const FeatureTable& features,
                      int min_stem_len) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file: " + path);

  Vocabulary vocab;
  vocab.min_stem_len = min_stem_len;

  // First pass: collect phones to build the alphabet in first-seen order.
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  std::vector<std::string> phone_order;
  std::set<std::string> phone_seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2)
      throw ParseError(path, line_no,
                       "expected 'surface<TAB>phones', got " +
                           std::to_string(fields.size()) + " fields");
    std::istringstream ps(fields[1]);
    std::vector<std::string> phones;
    std::string p;
    while (ps >> p) phones.push_back(p);
    if (phones.empty())
      throw ParseError(path, line_no, "stem has no phones: " + fields[0]);
    for (const auto& ph : phones) {
      if (!features.has_phone(ph)) throw MissingPhone(ph);
      if (phone_seen.insert(ph).second) phone_order.push_back(ph);
    }
    rows.emplace_back(fields[0], std::move(phones));
  }
  vocab.alphabet = KnownAlphabet(phone_order);

  std::set<std::pair<std::string, std::vector<int>>> dedupe;
  for (auto& [surface, phones] : rows) {
    if (static_cast<int>(phones.size()) < min_stem_len) {
      ++vocab.filtered_short;
      continue;
    }
    Stem s;
    s.surface = surface;
    for (const auto& ph : phones) s.phones.push_back(vocab.alphabet.id(ph));
    if (!dedupe.emplace(s.surface, s.phones).second) {
      ++vocab.filtered_duplicate;
      continue;
    }
    vocab.stems.push_back(std::move(s));
  }
  return vocab;
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file: " + path);
  for (const auto& s : vocab.stems) {
    out << s.surface << '\t';
    for (std::size_t i = 0; i < s.phones.size(); ++i) {
      if (i) out << ' ';
      out << vocab.alphabet.phone(s.phones[i]);
    }
    out << '\n';
  }
}

std::vector<GoldSpan> load_gold(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open gold file: " + path);
  std::vector<GoldSpan> gold;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw ParseError(path, line_no, "expected 4 tab-separated fields");
    GoldSpan g;
    g.inscription_id = fields[0];
    try {
      g.start = std::stoi(fields[1]);
      g.end = std::stoi(fields[2]);
    } catch (const std::exception&) {
      throw ParseError(path, line_no, "non-numeric span indices");
    }
    if (g.end <= g.start)
      throw ParseError(path, line_no, "span end must exceed start");
    g.stem = fields[3];
    gold.push_back(std::move(g));
  }
  return gold;
}

void save_gold(const std::vector<GoldSpan>& gold, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write gold file: " + path);
  for (const auto& g : gold)
    out << g.inscription_id << '\t' << g.start << '\t' << g.end << '\t'
        << g.stem << '\n';
}

namespace {

std::string format_confidence(double c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", c);
  return buf;
}

}  // namespace

void save_predictions(const std::vector<SpanPrediction>& preds,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write predictions file: " + path);
  out << "#inscription\tchunk_offset\tstart\tend\tspan\tstem\tconfidence\n";
  for (const auto& p : preds)
    out << p.inscription_id << '\t' << p.chunk_offset << '\t' << p.start
        << '\t' << p.end << '\t' << p.span_surface << '\t' << p.stem << '\t'
        << format_confidence(p.confidence) << '\n';
}

std::vector<SpanPrediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions file: " + path);
  std::vector<SpanPrediction> preds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 7)
      throw ParseError(path, line_no, "expected 7 tab-separated fields");
    SpanPrediction p;
    p.inscription_id = fields[0];
    try {
      p.chunk_offset = std::stoi(fields[1]);
      p.start = std::stoi(fields[2]);
      p.end = std::stoi(fields[3]);
      p.confidence = std::stod(fields[6]);
    } catch (const std::exception&) {
      throw ParseError(path, line_no, "malformed numeric field");
    }
    p.span_surface = fields[4];
    p.stem = fields[5];
    preds.push_back(std::move(p));
  }
  return preds;
}

std::string apply_whitespace_ratio(const std::string& segmented_text,
                                   double keep_prob, std::uint64_t seed) {
  if (keep_prob < 0.0 || keep_prob > 1.0)
    throw ConfigError("whitespace keep probability must be in [0, 1]");
  auto rng = make_rng(seed, "whitespace");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::string out;
  out.reserve(segmented_text.size());
  for (char c : segmented_text) {
    if (is_space_char(c)) {
      if (u(rng) < keep_prob) out += c;
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace cogseg
