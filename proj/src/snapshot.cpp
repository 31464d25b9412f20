// cogseg/snapshot.cpp

#include "cogseg/snapshot.hpp"

#include <cstring>
#include <fstream>

namespace cogseg {

namespace {

constexpr char kMagic[8] = {'C', 'G', 'S', 'N', 'A', 'P', '0', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(out, m(r, c));
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  const std::uint32_t rows = read_u32(in);
  const std::uint32_t cols = read_u32(in);
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = read_f64(in);
  return m;
}

}  // namespace

void save_snapshot(const std::string& path, const ModelParams& params,
                   const ModelContext& ctx, const SnapshotMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write snapshot file: " + path);
  out.write(kMagic, sizeof(kMagic));
  out.put(params.feature_based ? 1 : 0);
  write_u32(out, static_cast<std::uint32_t>(params.dim));
  write_f64(out, params.dropout_rate);

  const int K = ctx.known.size();
  const int L = ctx.lost.size();
  write_u32(out, static_cast<std::uint32_t>(K));
  write_u32(out, static_cast<std::uint32_t>(L));
  for (int i = 0; i < K; ++i) write_string(out, ctx.known.phone(i));
  for (int i = 0; i < L; ++i) write_string(out, ctx.lost.symbol(i));
  for (int g = 0; g < kFeatureGroups; ++g) {
    write_string(out, ctx.table.groups[g]);
    write_u32(out, static_cast<std::uint32_t>(ctx.table.num_values(g)));
    for (const auto& v : ctx.table.value_names[g]) write_string(out, v);
  }
  for (int i = 0; i < K; ++i) {
    const auto& vals = ctx.table.features(ctx.known.phone(i));
    for (int g = 0; g < kFeatureGroups; ++g)
      write_u32(out, static_cast<std::uint32_t>(vals[g]));
  }
  write_matrix(out, params.feature_emb);
  write_matrix(out, params.char_emb);
  write_matrix(out, params.mixture_logits);
  write_f64(out, meta.temperature);
  write_f64(out, meta.alpha);
  write_u32(out, static_cast<std::uint32_t>(meta.range.min_len));
  write_u32(out, static_cast<std::uint32_t>(meta.range.max_len));
  if (!out) throw DataError("failed while writing snapshot: " + path);
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open snapshot file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("not a model snapshot: " + path);

  Snapshot s;
  s.params.feature_based = in.get() == 1;
  s.params.dim = static_cast<int>(read_u32(in));
  s.params.dropout_rate = read_f64(in);

  const int K = static_cast<int>(read_u32(in));
  const int L = static_cast<int>(read_u32(in));
  std::vector<std::string> phones(K), lost(L);
  for (auto& p : phones) p = read_string(in);
  for (auto& c : lost) c = read_string(in);

  FeatureTable table;
  table.groups.resize(kFeatureGroups);
  for (int g = 0; g < kFeatureGroups; ++g) {
    table.groups[g] = read_string(in);
    const int nv = static_cast<int>(read_u32(in));
    table.value_names[g].resize(nv);
    for (auto& v : table.value_names[g]) v = read_string(in);
  }
  for (int i = 0; i < K; ++i) {
    std::array<int, kFeatureGroups> vals{};
    for (int g = 0; g < kFeatureGroups; ++g)
      vals[g] = static_cast<int>(read_u32(in));
    table.entries.emplace(phones[i], vals);
  }

  s.ctx = ModelContext::build(KnownAlphabet(phones), LostAlphabet(lost), table);
  s.params.feature_emb = read_matrix(in);
  s.params.char_emb = read_matrix(in);
  s.params.mixture_logits = read_matrix(in);
  int offset = 0;
  for (int g = 0; g < kFeatureGroups; ++g) {
    s.params.group_offsets[g] = offset;
    offset += table.num_values(g);
  }
  s.meta.temperature = read_f64(in);
  s.meta.alpha = read_f64(in);
  s.meta.range.min_len = static_cast<int>(read_u32(in));
  s.meta.range.max_len = static_cast<int>(read_u32(in));
  if (!in) throw DataError("truncated snapshot: " + path);
  return s;
}

}  // namespace cogseg
