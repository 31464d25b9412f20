// cogseg/phonetics.cpp

#include "cogseg/phonetics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace cogseg {

// ---------------------------------------------------------------------------
// Alphabets
// ---------------------------------------------------------------------------

KnownAlphabet::KnownAlphabet(std::vector<std::string> phones)
    : phones_(std::move(phones)) {
  for (int i = 0; i < static_cast<int>(phones_.size()); ++i) {
    if (phones_[i].empty()) throw DataError("empty phone symbol in alphabet");
    if (!index_.emplace(phones_[i], i).second)
      throw DataError("duplicate phone '" + phones_[i] + "' in alphabet");
  }
}

int KnownAlphabet::id(const std::string& phone) const {
  auto it = index_.find(phone);
  if (it == index_.end()) throw MissingPhone(phone);
  return it->second;
}

std::optional<int> KnownAlphabet::find(const std::string& phone) const {
  auto it = index_.find(phone);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LostAlphabet::LostAlphabet(std::vector<std::string> chars)
    : chars_(std::move(chars)) {
  for (int i = 0; i < static_cast<int>(chars_.size()); ++i) {
    if (chars_[i].empty()) throw DataError("empty lost character in alphabet");
    if (!index_.emplace(chars_[i], i).second)
      throw DataError("duplicate lost character '" + chars_[i] +
                      "' in alphabet");
  }
}

int LostAlphabet::id(const std::string& c) const {
  auto it = index_.find(c);
  if (it == index_.end()) throw MissingChar(c);
  return it->second;
}

std::optional<int> LostAlphabet::find(const std::string& c) const {
  auto it = index_.find(c);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// FeatureTable
// ---------------------------------------------------------------------------

int FeatureTable::total_values() const {
  int n = 0;
  for (int g = 0; g < kFeatureGroups; ++g) n += num_values(g);
  return n;
}

const std::array<int, kFeatureGroups>& FeatureTable::features(
    const std::string& phone) const {
  auto it = entries.find(phone);
  if (it == entries.end()) throw MissingPhone(phone);
  return it->second;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

FeatureTable FeatureTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature table file: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw ParseError(path, 1, "empty feature table file");
  auto header = split_csv_line(line);
  if (static_cast<int>(header.size()) != kFeatureGroups + 1)
    throw ParseError(path, 1,
                     "expected 'phone' plus " + std::to_string(kFeatureGroups) +
                         " group columns, got " +
                         std::to_string(header.size()));

  // Canonical group order is lexicographic by group name; remember where each
  // canonical group lives in the file.
  std::vector<std::string> file_groups(header.begin() + 1, header.end());
  std::vector<int> order(kFeatureGroups);
  for (int g = 0; g < kFeatureGroups; ++g) order[g] = g;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return file_groups[a] < file_groups[b];
  });

  FeatureTable t;
  t.groups.resize(kFeatureGroups);
  for (int g = 0; g < kFeatureGroups; ++g) t.groups[g] = file_groups[order[g]];

  std::array<std::unordered_map<std::string, int>, kFeatureGroups> value_ids;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto row = split_csv_line(line);
    if (static_cast<int>(row.size()) != kFeatureGroups + 1)
      throw ParseError(path, line_no,
                       "expected " + std::to_string(kFeatureGroups + 1) +
                           " columns, got " + std::to_string(row.size()));
    const std::string& phone = row[0];
    if (phone.empty()) throw ParseError(path, line_no, "empty phone symbol");
    if (t.entries.count(phone))
      throw ParseError(path, line_no, "duplicate phone '" + phone + "'");
    std::array<int, kFeatureGroups> vals{};
    for (int g = 0; g < kFeatureGroups; ++g) {
      const std::string& v = row[1 + order[g]];
      if (v.empty()) throw ParseError(path, line_no, "empty feature value");
      auto [it, inserted] =
          value_ids[g].emplace(v, static_cast<int>(t.value_names[g].size()));
      if (inserted) t.value_names[g].push_back(v);
      vals[g] = it->second;
    }
    t.entries.emplace(phone, vals);
  }
  if (t.entries.empty()) throw ParseError(path, line_no, "no phones in table");
  return t;
}

void FeatureTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feature table file: " + path);
  out << "phone";
  for (const auto& g : groups) out << ',' << g;
  out << '\n';
  // Stable phone order for byte-identical output.
  std::vector<std::string> phones;
  phones.reserve(entries.size());
  for (const auto& [p, _] : entries) phones.push_back(p);
  std::sort(phones.begin(), phones.end());
  for (const auto& p : phones) {
    out << p;
    const auto& vals = entries.at(p);
    for (int g = 0; g < kFeatureGroups; ++g)
      out << ',' << value_names[g][vals[g]];
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// ModelParams
// ---------------------------------------------------------------------------

std::size_t ModelParams::num_parameters() const {
  const std::size_t emb = feature_based ? feature_emb.size() : char_emb.size();
  return emb + mixture_logits.size();
}

namespace {

// Row-major flat indexing over an Eigen matrix (Eigen default storage is
// column-major; we index explicitly to keep the flat order stable).
double flat_get(const Eigen::MatrixXd& m, std::size_t i) {
  const std::size_t cols = static_cast<std::size_t>(m.cols());
  return m(static_cast<Eigen::Index>(i / cols),
           static_cast<Eigen::Index>(i % cols));
}

void flat_add(Eigen::MatrixXd& m, std::size_t i, double delta) {
  const std::size_t cols = static_cast<std::size_t>(m.cols());
  m(static_cast<Eigen::Index>(i / cols), static_cast<Eigen::Index>(i % cols)) +=
      delta;
}

}  // namespace

double ModelParams::get_parameter(std::size_t i) const {
  const Eigen::MatrixXd& emb = feature_based ? feature_emb : char_emb;
  const std::size_t emb_n = static_cast<std::size_t>(emb.size());
  if (i < emb_n) return flat_get(emb, i);
  return flat_get(mixture_logits, i - emb_n);
}

void ModelParams::add_to_parameter(std::size_t i, double delta) {
  Eigen::MatrixXd& emb = feature_based ? feature_emb : char_emb;
  const std::size_t emb_n = static_cast<std::size_t>(emb.size());
  if (i < emb_n) {
    flat_add(emb, i, delta);
  } else {
    flat_add(mixture_logits, i - emb_n, delta);
  }
}

void ParamGrads::init_like(const ModelParams& p) {
  feature_emb.setZero(p.feature_emb.rows(), p.feature_emb.cols());
  char_emb.setZero(p.char_emb.rows(), p.char_emb.cols());
  mixture_logits.setZero(p.mixture_logits.rows(), p.mixture_logits.cols());
}

void ParamGrads::set_zero() {
  feature_emb.setZero();
  char_emb.setZero();
  mixture_logits.setZero();
}

void ParamGrads::axpy_into(ModelParams& p, double step) const {
  if (p.feature_based)
    p.feature_emb += step * feature_emb;
  else
    p.char_emb += step * char_emb;
  p.mixture_logits += step * mixture_logits;
}

double ParamGrads::squared_norm() const {
  return feature_emb.squaredNorm() + char_emb.squaredNorm() +
         mixture_logits.squaredNorm();
}

void ParamGrads::scale(double factor) {
  feature_emb *= factor;
  char_emb *= factor;
  mixture_logits *= factor;
}

bool ParamGrads::all_finite() const {
  return feature_emb.allFinite() && char_emb.allFinite() &&
         mixture_logits.allFinite();
}

std::size_t ParamGrads::num_parameters() const {
  const std::size_t emb =
      feature_emb.size() > 0 ? feature_emb.size() : char_emb.size();
  return emb + mixture_logits.size();
}

double ParamGrads::get_parameter(std::size_t i) const {
  const Eigen::MatrixXd& emb = feature_emb.size() > 0 ? feature_emb : char_emb;
  const std::size_t emb_n = static_cast<std::size_t>(emb.size());
  if (i < emb_n) return flat_get(emb, i);
  return flat_get(mixture_logits, i - emb_n);
}

// ---------------------------------------------------------------------------
// ModelContext / init
// ---------------------------------------------------------------------------

ModelContext ModelContext::build(const KnownAlphabet& known,
                                 const LostAlphabet& lost,
                                 const FeatureTable& table) {
  ModelContext ctx;
  ctx.known = known;
  ctx.lost = lost;
  ctx.table = table;
  ctx.phone_rows.resize(known.size());
  int offset = 0;
  std::array<int, kFeatureGroups> offsets{};
  for (int g = 0; g < kFeatureGroups; ++g) {
    offsets[g] = offset;
    offset += table.num_values(g);
  }
  for (int i = 0; i < known.size(); ++i) {
    const auto& vals = table.features(known.phone(i));
    for (int g = 0; g < kFeatureGroups; ++g)
      ctx.phone_rows[i][g] = offsets[g] + vals[g];
  }
  return ctx;
}

ModelParams init_params(const ModelContext& ctx, int dim, bool feature_based,
                        double dropout_rate, std::uint64_t seed) {
  ModelParams p;
  p.dim = dim;
  p.feature_based = feature_based;
  p.dropout_rate = dropout_rate;
  int offset = 0;
  for (int g = 0; g < kFeatureGroups; ++g) {
    p.group_offsets[g] = offset;
    offset += ctx.table.num_values(g);
  }
  const int total_values = offset;
  const int known_dim = kFeatureGroups * dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(known_dim));

  auto rng = make_rng(seed, "param-init");
  std::normal_distribution<double> normal(0.0, scale);

  if (feature_based) {
    p.feature_emb.resize(total_values, dim);
    for (Eigen::Index r = 0; r < p.feature_emb.rows(); ++r)
      for (Eigen::Index c = 0; c < p.feature_emb.cols(); ++c)
        p.feature_emb(r, c) = normal(rng);
    p.char_emb.resize(0, 0);
  } else {
    p.char_emb.resize(ctx.known.size(), known_dim);
    for (Eigen::Index r = 0; r < p.char_emb.rows(); ++r)
      for (Eigen::Index c = 0; c < p.char_emb.cols(); ++c)
        p.char_emb(r, c) = normal(rng);
    p.feature_emb.resize(0, 0);
  }
  p.mixture_logits.setZero(ctx.lost.num_outcomes(), ctx.known.size());
  return p;
}

// ---------------------------------------------------------------------------
// Embeddings and mapping
// ---------------------------------------------------------------------------

Eigen::VectorXd embed_known(const ModelParams& params, const ModelContext& ctx,
                            int phone_id) {
  if (phone_id < 0 || phone_id >= ctx.known.size())
    throw MissingPhone("#" + std::to_string(phone_id));
  if (!params.feature_based) return params.char_emb.row(phone_id);
  Eigen::VectorXd v(params.known_dim());
  const auto& rows = ctx.phone_rows[phone_id];
  for (int g = 0; g < kFeatureGroups; ++g) {
    if (rows[g] < 0 || rows[g] >= params.feature_emb.rows())
      throw MissingFeature("group " + ctx.table.groups[g] + " of phone " +
                           ctx.known.phone(phone_id));
    v.segment(g * params.dim, params.dim) = params.feature_emb.row(rows[g]);
  }
  return v;
}

Eigen::VectorXd embed_known(const ModelParams& params, const ModelContext& ctx,
                            const std::string& phone) {
  return embed_known(params, ctx, ctx.known.id(phone));
}

Eigen::VectorXd embed_lost(const ModelParams& params,
                           const Eigen::MatrixXd& known_embeddings,
                           int lost_id) {
  if (lost_id < 0 || lost_id >= params.mixture_logits.rows())
    throw MissingChar("#" + std::to_string(lost_id));
  Eigen::VectorXd logits = params.mixture_logits.row(lost_id);
  const double hi = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - hi).exp();
  w /= w.sum();
  return known_embeddings.transpose() * w;
}

DropoutMask DropoutMask::sample(int rows, int cols, double rate,
                                std::uint64_t seed) {
  DropoutMask m;
  if (rate <= 0.0) return m;
  if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
  m.active = true;
  m.scale.resize(rows, cols);
  const double keep = 1.0 - rate;
  auto rng = make_rng(seed, "dropout");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      m.scale(r, c) = u(rng) < keep ? 1.0 / keep : 0.0;
  return m;
}

MappingForward mapping_forward(const ModelParams& params,
                               const ModelContext& ctx, double temperature,
                               const DropoutMask* mask) {
  if (!(temperature > 0.0)) throw InvalidTemperature(temperature);
  const int K = ctx.known.size();
  const int C = ctx.lost.num_outcomes();
  MappingForward f;

  f.known_emb.resize(K, params.known_dim());
  for (int i = 0; i < K; ++i) f.known_emb.row(i) = embed_known(params, ctx, i);
  if (mask != nullptr && mask->active) {
    f.dropout = *mask;
    f.known_emb = f.known_emb.cwiseProduct(mask->scale);
  }

  // Mixture softmax rows and lost embeddings.
  f.mixture_w.resize(C, K);
  for (int j = 0; j < C; ++j) {
    Eigen::VectorXd logits = params.mixture_logits.row(j);
    const double hi = logits.maxCoeff();
    Eigen::VectorXd w = (logits.array() - hi).exp();
    w /= w.sum();
    f.mixture_w.row(j) = w;
  }
  f.lost_emb = f.mixture_w * f.known_emb;  // C x 7d

  // Row softmax of dot products over lost outcomes.
  Eigen::MatrixXd dots =
      (f.known_emb * f.lost_emb.transpose()) / temperature;  // K x C
  f.matrix.temperature = temperature;
  f.matrix.log_probs.resize(K, C);
  f.matrix.probs.resize(K, C);
  for (int i = 0; i < K; ++i) {
    const double hi = dots.row(i).maxCoeff();
    const double lse =
        hi + std::log((dots.row(i).array() - hi).exp().sum());
    f.matrix.log_probs.row(i) = dots.row(i).array() - lse;
    f.matrix.probs.row(i) = f.matrix.log_probs.row(i).array().exp();
  }
  return f;
}

MappingMatrix mapping_matrix(const ModelParams& params, const ModelContext& ctx,
                             double temperature) {
  return mapping_forward(params, ctx, temperature, nullptr).matrix;
}

void mapping_backward(const MappingForward& fwd, const ModelParams& params,
                      const ModelContext& ctx,
                      const Eigen::MatrixXd& g_log_probs,
                      const Eigen::MatrixXd& g_probs, ParamGrads& out) {
  const int K = ctx.known.size();
  const int C = ctx.lost.num_outcomes();
  const double T = fwd.matrix.temperature;
  const Eigen::MatrixXd& M = fwd.matrix.probs;

  // Adjoint of the pre-softmax dots. For log-softmax consumers:
  //   gD = g_log - M * rowsum(g_log); for linear consumers:
  //   gD = M .* (g_prob - rowsum(g_prob .* M)).
  Eigen::MatrixXd gD = Eigen::MatrixXd::Zero(K, C);
  if (g_log_probs.size() > 0) {
    Eigen::VectorXd row_sums = g_log_probs.rowwise().sum();
    gD += g_log_probs - row_sums.asDiagonal() * M;
  }
  if (g_probs.size() > 0) {
    Eigen::VectorXd weighted = (g_probs.cwiseProduct(M)).rowwise().sum();
    gD += M.cwiseProduct(g_probs - weighted.replicate(1, C));
  }
  gD /= T;

  // dots = known_emb * lost_emb^T (pre division by T, folded into gD).
  Eigen::MatrixXd g_lost = gD.transpose() * fwd.known_emb;   // C x 7d
  Eigen::MatrixXd g_known = gD * fwd.lost_emb;               // K x 7d

  // lost_emb = mixture_w * known_emb
  Eigen::MatrixXd gU = g_lost * fwd.known_emb.transpose();   // C x K
  g_known += fwd.mixture_w.transpose() * g_lost;

  // Softmax rows of the mixture.
  for (int j = 0; j < C; ++j) {
    const Eigen::RowVectorXd w = fwd.mixture_w.row(j);
    const double dot = gU.row(j).dot(w);
    out.mixture_logits.row(j).array() +=
        w.array() * (gU.row(j).array() - dot);
  }

  if (fwd.dropout.active) g_known = g_known.cwiseProduct(fwd.dropout.scale);

  if (params.feature_based) {
    for (int i = 0; i < K; ++i) {
      const auto& rows = ctx.phone_rows[i];
      for (int g = 0; g < kFeatureGroups; ++g)
        out.feature_emb.row(rows[g]) +=
            g_known.row(i).segment(g * params.dim, params.dim);
    }
  } else {
    out.char_emb += g_known;
  }
}

double mapping_supervision_loss(const MappingMatrix& m,
                                const std::map<int, int>& known_targets) {
  double loss = 0.0;
  for (const auto& [phone, target] : known_targets) {
    if (phone < 0 || phone >= m.num_known())
      throw MissingPhone("#" + std::to_string(phone));
    if (target < 0 || target >= m.num_outcomes() - 1)
      throw MissingChar("#" + std::to_string(target));
    loss -= m.log_probs(phone, target);
  }
  return loss;
}

double mapping_supervision_loss_grad(const MappingMatrix& m,
                                     const std::map<int, int>& known_targets,
                                     Eigen::MatrixXd& g_log_probs) {
  double loss = 0.0;
  for (const auto& [phone, target] : known_targets) {
    if (phone < 0 || phone >= m.num_known())
      throw MissingPhone("#" + std::to_string(phone));
    if (target < 0 || target >= m.num_outcomes() - 1)
      throw MissingChar("#" + std::to_string(target));
    loss -= m.log_probs(phone, target);
    g_log_probs(phone, target) -= 1.0;
  }
  return loss;
}

}  // namespace cogseg
