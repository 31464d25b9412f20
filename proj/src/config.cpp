// cogseg/config.cpp

#include "cogseg/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace cogseg {

namespace {

using nlohmann::json;

json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

// Applies "a.b.c=value" assignments onto a JSON tree.
void apply_overrides(json& j, const std::vector<std::string>& overrides) {
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must look like key=value: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    json* node = &j;
    std::size_t pos = 0;
    while (true) {
      const auto dot = key.find('.', pos);
      const std::string part = key.substr(pos, dot - pos);
      if (part.empty()) throw ConfigError("bad override key: " + key);
      if (dot == std::string::npos) {
        try {
          (*node)[part] = json::parse(value);
        } catch (const json::parse_error&) {
          (*node)[part] = value;  // bare string
        }
        break;
      }
      node = &(*node)[part];
      pos = dot + 1;
    }
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown config key '" + key + "' in " + where);
}

ObjectiveConfig parse_objective(const json& j) {
  check_keys(j,
             {"r_cov", "lambda_cov", "lambda_loss", "lambda_sup", "alpha",
              "temperature", "length_min", "length_max", "coverage_per_text",
              "chunk_cap"},
             "objective");
  ObjectiveConfig o;
  o.r_cov = j.value("r_cov", o.r_cov);
  o.alpha = j.value("alpha", o.alpha);
  if (o.alpha < 0 || o.alpha > 1)
    throw ConfigError("alpha must lie in [0, 1]");
  o.lambda_cov = j.value("lambda_cov", o.lambda_cov);
  o.lambda_loss = j.value("lambda_loss", o.lambda_loss);
  o.lambda_sup = j.value("lambda_sup", o.lambda_sup);
  o.temperature = j.value("temperature", o.temperature);
  o.range.min_len = j.value("length_min", o.range.min_len);
  o.range.max_len = j.value("length_max", o.range.max_len);
  o.coverage_per_text = j.value("coverage_per_text", o.coverage_per_text);
  o.chunk_cap = j.value("chunk_cap", o.chunk_cap);
  if (o.lambda_cov < 0 || o.lambda_loss < 0 || o.lambda_sup < 0)
    throw ConfigError("penalty weights must be nonnegative");
  if (o.r_cov < 0 || o.r_cov > 1)
    throw ConfigError("r_cov must lie in [0, 1]");
  if (!(o.temperature > 0)) throw InvalidTemperature(o.temperature);
  if (o.range.min_len < 1 || o.range.max_len < o.range.min_len)
    throw ConfigError("invalid length range");
  return o;
}

AnnealSchedule parse_schedule(const json& j) {
  check_keys(j, {"s_begin", "s_end", "steps"}, "schedule");
  AnnealSchedule s;
  s.s_begin = j.value("s_begin", s.s_begin);
  s.s_end = j.value("s_end", s.s_end);
  s.steps = j.value("steps", s.steps);
  if (s.steps < 0) throw ConfigError("schedule steps must be nonnegative");
  return s;
}

json schedule_to_json(const AnnealSchedule& s) {
  return json{{"s_begin", s.s_begin}, {"s_end", s.s_end}, {"steps", s.steps}};
}

}  // namespace

TrainRunSpec train_spec_from_json(json j,
                                  const std::vector<std::string>& overrides);

TrainRunSpec load_train_spec(const std::string& path,
                             const std::vector<std::string>& overrides) {
  return train_spec_from_json(parse_json_file(path), overrides);
}

TrainRunSpec load_train_spec_text(const std::string& text,
                                  const std::vector<std::string>& overrides) {
  try {
    return train_spec_from_json(json::parse(text), overrides);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config text: ") + e.what());
  }
}

TrainRunSpec train_spec_from_json(json j,
                                  const std::vector<std::string>& overrides) {
  apply_overrides(j, overrides);
  check_keys(j,
             {"corpus", "vocab", "features", "gold", "truth_mapping",
              "out_dir", "min_stem_len", "knowledge", "supervised_phones",
              "seed", "restarts", "seeds", "schedules", "learning_rate",
              "grad_clip", "dropout", "literal_ln_alpha", "extra_steps",
              "steps", "batch_size", "dim", "feature_embeddings", "workers",
              "snapshot_every", "eval_k", "objective"},
             "train config");

  TrainRunSpec spec;
  spec.corpus_path = j.value("corpus", "");
  spec.vocab_path = j.value("vocab", "");
  spec.features_path = j.value("features", "");
  spec.gold_path = j.value("gold", "");
  spec.truth_mapping_path = j.value("truth_mapping", "");
  spec.out_dir = j.value("out_dir", spec.out_dir);
  spec.min_stem_len = j.value("min_stem_len", spec.min_stem_len);
  if (spec.corpus_path.empty() || spec.vocab_path.empty() ||
      spec.features_path.empty())
    throw ConfigError("train config needs corpus, vocab and features paths");

  const std::string knowledge = j.value("knowledge", "base");
  if (knowledge == "base") {
    spec.knowledge = Knowledge::kBase;
  } else if (knowledge == "partial") {
    spec.knowledge = Knowledge::kPartial;
  } else if (knowledge == "full") {
    spec.knowledge = Knowledge::kFull;
  } else {
    throw ConfigError("knowledge must be base, partial or full");
  }
  if (j.contains("supervised_phones"))
    spec.supervised_phones =
        j["supervised_phones"].get<std::vector<std::string>>();

  TrainConfig& t = spec.train;
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.grad_clip = j.value("grad_clip", t.grad_clip);
  t.dropout = j.value("dropout", t.dropout);
  t.literal_ln_alpha = j.value("literal_ln_alpha", t.literal_ln_alpha);
  t.extra_steps = j.value("extra_steps", t.extra_steps);
  t.steps = j.value("steps", t.steps);
  t.restarts = j.value("restarts", t.restarts);
  t.seed = j.value("seed", t.seed);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.dim = j.value("dim", t.dim);
  t.feature_based = j.value("feature_embeddings", t.feature_based);
  t.workers = j.value("workers", t.workers);
  t.snapshot_every = j.value("snapshot_every", t.snapshot_every);
  t.eval_k = j.value("eval_k", t.eval_k);
  if (j.contains("objective")) t.objective = parse_objective(j["objective"]);
  if (t.learning_rate < 0) throw ConfigError("learning_rate must be >= 0");
  if (t.restarts < 1) throw ConfigError("restarts must be >= 1");
  if (t.eval_k < 1) throw InvalidK(t.eval_k);

  if (j.contains("seeds")) {
    spec.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  } else {
    for (int r = 0; r < t.restarts; ++r) spec.seeds.push_back(t.seed + r);
  }
  if (j.contains("schedules")) {
    for (const auto& js : j["schedules"])
      spec.schedules.push_back(parse_schedule(js));
  } else {
    spec.schedules.push_back(t.schedule);
  }
  if (spec.seeds.empty() || spec.schedules.empty())
    throw ConfigError("seeds and schedules must be non-empty");
  return spec;
}

std::string train_spec_to_json(const TrainRunSpec& spec) {
  json j;
  j["corpus"] = spec.corpus_path;
  j["vocab"] = spec.vocab_path;
  j["features"] = spec.features_path;
  if (!spec.gold_path.empty()) j["gold"] = spec.gold_path;
  if (!spec.truth_mapping_path.empty())
    j["truth_mapping"] = spec.truth_mapping_path;
  j["out_dir"] = spec.out_dir;
  j["min_stem_len"] = spec.min_stem_len;
  j["knowledge"] = spec.knowledge == Knowledge::kBase      ? "base"
                   : spec.knowledge == Knowledge::kPartial ? "partial"
                                                           : "full";
  if (!spec.supervised_phones.empty())
    j["supervised_phones"] = spec.supervised_phones;
  j["seeds"] = spec.seeds;
  j["schedules"] = json::array();
  for (const auto& s : spec.schedules)
    j["schedules"].push_back(schedule_to_json(s));
  const TrainConfig& t = spec.train;
  j["learning_rate"] = t.learning_rate;
  j["grad_clip"] = t.grad_clip;
  j["dropout"] = t.dropout;
  j["literal_ln_alpha"] = t.literal_ln_alpha;
  j["extra_steps"] = t.extra_steps;
  j["steps"] = t.steps;
  j["batch_size"] = t.batch_size;
  j["dim"] = t.dim;
  j["feature_embeddings"] = t.feature_based;
  j["workers"] = t.workers;
  j["snapshot_every"] = t.snapshot_every;
  j["eval_k"] = t.eval_k;
  j["objective"] = {{"r_cov", t.objective.r_cov},
                    {"lambda_cov", t.objective.lambda_cov},
                    {"lambda_loss", t.objective.lambda_loss},
                    {"lambda_sup", t.objective.lambda_sup},
                    {"temperature", t.objective.temperature},
                    {"length_min", t.objective.range.min_len},
                    {"length_max", t.objective.range.max_len},
                    {"coverage_per_text", t.objective.coverage_per_text},
                    {"chunk_cap", t.objective.chunk_cap}};
  return j.dump(2) + "\n";
}

ClosenessSpec load_closeness_spec(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  json j = parse_json_file(path);
  apply_overrides(j, overrides);
  check_keys(j, {"corpus", "out_dir", "k", "thresholds", "candidates"},
             "closeness config");
  ClosenessSpec spec;
  spec.corpus_path = j.value("corpus", "");
  spec.out_dir = j.value("out_dir", spec.out_dir);
  spec.k = j.value("k", spec.k);
  if (j.contains("thresholds"))
    spec.thresholds = j["thresholds"].get<std::vector<double>>();
  if (spec.corpus_path.empty())
    throw ConfigError("closeness config needs a corpus path");
  if (!j.contains("candidates") || !j["candidates"].is_array() ||
      j["candidates"].empty())
    throw ConfigError("closeness config needs a non-empty candidates array");
  for (const auto& jc : j["candidates"]) {
    check_keys(jc, {"label", "snapshot", "vocab", "features"}, "candidate");
    ClosenessCandidate c;
    c.label = jc.value("label", "");
    c.snapshot_path = jc.value("snapshot", "");
    c.vocab_path = jc.value("vocab", "");
    c.features_path = jc.value("features", "");
    if (c.label.empty() || c.snapshot_path.empty() || c.vocab_path.empty() ||
        c.features_path.empty())
      throw ConfigError(
          "each candidate needs label, snapshot, vocab and features");
    spec.candidates.push_back(std::move(c));
  }
  return spec;
}

GradCheckSpec load_gradcheck_spec(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  json j = parse_json_file(path);
  apply_overrides(j, overrides);
  check_keys(j,
             {"corpus", "vocab", "features", "min_stem_len", "coords", "eps",
              "max_chunks", "seed", "dim", "feature_embeddings", "objective"},
             "gradcheck config");
  GradCheckSpec spec;
  spec.corpus_path = j.value("corpus", "");
  spec.vocab_path = j.value("vocab", "");
  spec.features_path = j.value("features", "");
  spec.min_stem_len = j.value("min_stem_len", spec.min_stem_len);
  spec.coords = j.value("coords", spec.coords);
  spec.eps = j.value("eps", spec.eps);
  spec.max_chunks = j.value("max_chunks", spec.max_chunks);
  spec.seed = j.value("seed", spec.seed);
  spec.dim = j.value("dim", spec.dim);
  spec.feature_embeddings = j.value("feature_embeddings", true);
  if (j.contains("objective")) spec.objective = parse_objective(j["objective"]);
  if (spec.corpus_path.empty() || spec.vocab_path.empty() ||
      spec.features_path.empty())
    throw ConfigError("gradcheck config needs corpus, vocab and features");
  return spec;
}

LoadedInputs load_inputs(const TrainRunSpec& spec) {
  LoadedInputs in;
  in.features = FeatureTable::load(spec.features_path);
  in.corpus = load_corpus(spec.corpus_path);
  in.vocab = load_vocab(spec.vocab_path, in.features, spec.min_stem_len);
  in.ctx = ModelContext::build(in.vocab.alphabet, in.corpus.alphabet,
                               in.features);
  if (!spec.gold_path.empty()) in.gold = load_gold(spec.gold_path);

  if (spec.knowledge != Knowledge::kBase) {
    if (spec.truth_mapping_path.empty())
      throw ConfigError(
          "partial/full knowledge needs a truth_mapping file");
    std::ifstream mf(spec.truth_mapping_path);
    if (!mf)
      throw DataError("cannot open truth mapping: " + spec.truth_mapping_path);
    std::map<std::string, std::string> mapping;
    std::string line;
    int line_no = 0;
    while (std::getline(mf, line)) {
      ++line_no;
      while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
        line.pop_back();
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw ParseError(spec.truth_mapping_path, line_no,
                         "expected phone<TAB>char");
      mapping[line.substr(0, tab)] = line.substr(tab + 1);
    }
    std::vector<std::string> phones;
    if (spec.knowledge == Knowledge::kFull) {
      for (const auto& [p, _] : mapping) phones.push_back(p);
    } else {
      phones = spec.supervised_phones;
      if (phones.empty())
        throw ConfigError("partial knowledge needs supervised_phones");
    }
    for (const auto& p : phones) {
      auto it = mapping.find(p);
      if (it == mapping.end()) throw MissingPhone(p);
      const auto pid = in.ctx.known.find(p);
      if (!pid) throw MissingPhone(p);
      const auto cid = in.ctx.lost.find(it->second);
      if (!cid) throw MissingChar(it->second);
      in.supervision[*pid] = *cid;
    }
  }
  return in;
}

}  // namespace cogseg
