#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "anon_enigma/features.hpp"
#include "anon_enigma/saturation.hpp"

namespace anon_enigma {

using SparseRow = std::vector<std::pair<std::uint32_t, double>>;

enum class TreeGrowth { kLevel, kLeaf };

std::string_view to_string(TreeGrowth g);
TreeGrowth parse_growth(std::string_view s);

struct GbdtParams {
  TreeGrowth growth = TreeGrowth::kLevel;
  unsigned depth = 9;
  unsigned leaves = 1200;  // only bounds leaf-wise growth
  double eta = 0.2;
  unsigned rounds = 50;
  double min_child_weight = 1.0;
  double lambda = 1.0;
  // Featurizer settings the model was trained with.
  bool anonymize = true;
  std::uint32_t hash_base = kDefaultHashBase;

  void validate() const;
  std::string label() const;  // compact id such as "level,d9,eta0.2"
};

/// Flat binary tree; node 0 is the root. Split nodes send a row left iff its
/// feature value (missing = 0) is below the threshold.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  double evaluate(const SparseRow& row) const;
  unsigned depth() const;
  std::size_t leaf_count() const;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GbdtModel {
 public:
  GbdtModel() = default;
  GbdtModel(GbdtParams params, double base_score, std::size_t num_features)
      : params_(params), base_score_(base_score), num_features_(num_features) {}

  const GbdtParams& params() const { return params_; }
  double base_score() const { return base_score_; }
  std::size_t num_features() const { return num_features_; }
  const std::vector<Tree>& trees() const { return trees_; }
  void add_tree(Tree t) { trees_.push_back(std::move(t)); }

  // Base score plus the first `trees` tree outputs (all when omitted).
  double margin(const SparseRow& row, std::size_t trees = SIZE_MAX) const;
  double predict(const SparseRow& row) const;
  // Throws ModelError if the triple's dimension differs from the model's.
  double predict(const FeatureTriple& v) const;

  std::string to_json() const;
  static GbdtModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static GbdtModel load(const std::filesystem::path& path);

 private:
  GbdtParams params_;
  double base_score_ = 0.0;
  std::size_t num_features_ = 0;
  std::vector<Tree> trees_;
};

inline constexpr int kGbdtFormatVersion = 1;

struct Dataset {
  std::size_t num_features = 0;
  std::vector<SparseRow> rows;
  std::vector<std::uint8_t> labels;

  std::size_t positives() const;
  void add(SparseRow row, bool label);
};

// One row per processed clause; positives are proof clauses.
Dataset build_dataset(std::span<const TrainingSample> samples, bool anonymize,
                      std::uint32_t base = kDefaultHashBase);

struct TrainingReport {
  std::vector<double> loss;  // loss[0] is the prior, loss[k] after k rounds
  std::size_t backtracked_rounds = 0;
};

class TrainingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Binary-logistic boosting with exact greedy splits. Throws TrainingError
/// for single-class or empty data and invalid parameters.
GbdtModel train_gbdt(const Dataset& data, const GbdtParams& params,
                     TrainingReport* report = nullptr);

double sigmoid(double x);
double log_loss(std::span<const double> margins, std::span<const std::uint8_t> labels);

// 1 for predicted-useful clauses (p >= 0.5), 10 otherwise.
double classify_to_weight(double probability);

struct ClassifierRates {
  std::size_t true_pos = 0, false_neg = 0, true_neg = 0, false_pos = 0;
  double tpr() const;
  double tnr() const;
};

ClassifierRates evaluate_classifier(const GbdtModel& model, const Dataset& data);

/// Clause evaluator backed by a GBDT model; weights follow classify_to_weight.
class GbdtEvaluator : public ClauseEvaluator {
 public:
  explicit GbdtEvaluator(std::shared_ptr<const GbdtModel> model);
  std::string name() const override { return "gbdt"; }
  std::unique_ptr<EvaluationSession> open(const Problem& problem) const override;
  const GbdtModel& model() const { return *model_; }

 private:
  std::shared_ptr<const GbdtModel> model_;
};

}  // namespace anon_enigma
