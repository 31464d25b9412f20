// cogseg/phonetics.hpp
//
// Phonological feature data, learnable embeddings for both alphabets, and
// the character-mapping distribution between known phones and lost
// characters (plus the deletion outcome).

#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cogseg/common.hpp"

namespace cogseg {

inline constexpr int kFeatureGroups = 7;

// Interned alphabet of known-language IPA phones.
class KnownAlphabet {
 public:
  KnownAlphabet() = default;
  explicit KnownAlphabet(std::vector<std::string> phones);

  int size() const { return static_cast<int>(phones_.size()); }
  const std::string& phone(int id) const { return phones_[id]; }
  const std::vector<std::string>& phones() const { return phones_; }
  int id(const std::string& phone) const;        // throws MissingPhone
  std::optional<int> find(const std::string& phone) const;

 private:
  std::vector<std::string> phones_;
  std::unordered_map<std::string, int> index_;
};

// Interned alphabet of lost-language orthographic characters. The deletion
// symbol is not a member; it occupies the extra trailing column/row in the
// mapping machinery.
class LostAlphabet {
 public:
  LostAlphabet() = default;
  explicit LostAlphabet(std::vector<std::string> chars);

  int size() const { return static_cast<int>(chars_.size()); }
  int epsilon_id() const { return size(); }
  int num_outcomes() const { return size() + 1; }  // chars + deletion
  const std::string& symbol(int id) const { return chars_[id]; }
  const std::vector<std::string>& chars() const { return chars_; }
  int id(const std::string& c) const;  // throws MissingChar
  std::optional<int> find(const std::string& c) const;

 private:
  std::vector<std::string> chars_;
  std::unordered_map<std::string, int> index_;
};

// Phone -> categorical feature values, one value per feature group.
// Group order is canonicalized to lexicographic order of group names and is
// recorded in snapshots.
struct FeatureTable {
  std::vector<std::string> groups;  // size kFeatureGroups, sorted
  // Per group: interned value names in first-seen order.
  std::array<std::vector<std::string>, kFeatureGroups> value_names;
  // phone symbol -> value id per group
  std::unordered_map<std::string, std::array<int, kFeatureGroups>> entries;

  int num_values(int group) const {
    return static_cast<int>(value_names[group].size());
  }
  int total_values() const;
  bool has_phone(const std::string& phone) const {
    return entries.count(phone) != 0;
  }
  const std::array<int, kFeatureGroups>& features(
      const std::string& phone) const;  // throws MissingPhone

  static FeatureTable load(const std::string& path);
  void save(const std::string& path) const;
};

// Learnable parameters. Two parameterizations of the known side are
// supported: feature-composed embeddings (concatenation of per-group value
// embeddings) and free per-phone embeddings (ablation mode).
struct ModelParams {
  int dim = 100;             // d, per feature-group embedding size
  bool feature_based = true;
  double dropout_rate = 0.5;

  // feature mode: one row per (group, value), indexed by
  // group_offsets[g] + value_id. Row width = dim.
  Eigen::MatrixXd feature_emb;
  std::array<int, kFeatureGroups> group_offsets{};

  // per-char mode: one row per known phone, width = kFeatureGroups * dim.
  Eigen::MatrixXd char_emb;

  // (L+1) x K: per lost character (plus the trailing deletion row), logits
  // of a softmax over known phones.
  Eigen::MatrixXd mixture_logits;

  int known_dim() const { return kFeatureGroups * dim; }
  int feature_row(int group, int value) const {
    return group_offsets[group] + value;
  }

  // Flat parameter view used by SGD updates and finite differences.
  // Order: feature_emb (or char_emb) row-major, then mixture_logits.
  std::size_t num_parameters() const;
  double get_parameter(std::size_t i) const;
  void add_to_parameter(std::size_t i, double delta);
};

// Gradients with the same shapes as the parameters.
struct ParamGrads {
  Eigen::MatrixXd feature_emb;
  Eigen::MatrixXd char_emb;
  Eigen::MatrixXd mixture_logits;

  void init_like(const ModelParams& p);
  void set_zero();
  void axpy_into(ModelParams& p, double step) const;  // p += step * g
  double squared_norm() const;
  void scale(double factor);
  bool all_finite() const;
  std::size_t num_parameters() const;
  double get_parameter(std::size_t i) const;
};

// Immutable binding of the alphabets and the feature table: resolves each
// known phone to its feature-embedding rows once.
struct ModelContext {
  KnownAlphabet known;
  LostAlphabet lost;
  FeatureTable table;
  // per phone id: flat rows into ModelParams::feature_emb
  std::vector<std::array<int, kFeatureGroups>> phone_rows;

  static ModelContext build(const KnownAlphabet& known,
                            const LostAlphabet& lost,
                            const FeatureTable& table);
};

ModelParams init_params(const ModelContext& ctx, int dim, bool feature_based,
                        double dropout_rate, std::uint64_t seed);

// Pr(lost char or deletion | known phone) at temperature T.
// probs is K x (L+1); the trailing column is the deletion outcome.
struct MappingMatrix {
  Eigen::MatrixXd probs;
  Eigen::MatrixXd log_probs;
  double temperature = 1.0;

  int num_known() const { return static_cast<int>(probs.rows()); }
  int num_outcomes() const { return static_cast<int>(probs.cols()); }
  int epsilon_col() const { return num_outcomes() - 1; }
};

// Multiplicative dropout mask over the known embedding matrix
// (K x known_dim). Entries are 0 or 1/(1 - rate).
struct DropoutMask {
  Eigen::MatrixXd scale;
  bool active = false;

  static DropoutMask none() { return DropoutMask{}; }
  static DropoutMask sample(int rows, int cols, double rate,
                            std::uint64_t seed);
};

// Forward pass of the mapping computation with the intermediates needed by
// the backward pass.
struct MappingForward {
  MappingMatrix matrix;
  Eigen::MatrixXd known_emb;   // K x 7d, post-dropout
  Eigen::MatrixXd lost_emb;    // (L+1) x 7d
  Eigen::MatrixXd mixture_w;   // (L+1) x K, softmax of mixture_logits rows
  DropoutMask dropout;
};

// Concatenated feature embedding of a known phone (no dropout).
Eigen::VectorXd embed_known(const ModelParams& params, const ModelContext& ctx,
                            int phone_id);
Eigen::VectorXd embed_known(const ModelParams& params, const ModelContext& ctx,
                            const std::string& phone);

// Weighted sum of known-side embeddings for a lost character (or the
// deletion row, id == lost.epsilon_id()).
Eigen::VectorXd embed_lost(const ModelParams& params,
                           const Eigen::MatrixXd& known_embeddings,
                           int lost_id);

MappingForward mapping_forward(const ModelParams& params,
                               const ModelContext& ctx, double temperature,
                               const DropoutMask* mask = nullptr);

// Convenience wrapper returning just the matrix (inference path).
MappingMatrix mapping_matrix(const ModelParams& params, const ModelContext& ctx,
                             double temperature);

// Accumulates parameter gradients from adjoints of the mapping matrix.
// g_log_probs holds dF/d log_probs, g_probs holds dF/d probs; either may be
// zero. Gradients are added into `out`.
void mapping_backward(const MappingForward& fwd, const ModelParams& params,
                      const ModelContext& ctx,
                      const Eigen::MatrixXd& g_log_probs,
                      const Eigen::MatrixXd& g_probs, ParamGrads& out);

// Cross-entropy of the mapping rows against one-hot targets,
// sum over supervised phones of -log Pr(target | phone).
// Targets map phone id -> lost char id.
double mapping_supervision_loss(const MappingMatrix& m,
                                const std::map<int, int>& known_targets);

// Same, also adding d(loss)/d log_probs into g_log_probs.
double mapping_supervision_loss_grad(const MappingMatrix& m,
                                     const std::map<int, int>& known_targets,
                                     Eigen::MatrixXd& g_log_probs);

}  // namespace cogseg
