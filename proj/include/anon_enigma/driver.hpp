#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anon_enigma/gbdt.hpp"
#include "anon_enigma/gnn.hpp"
#include "anon_enigma/saturation.hpp"

namespace anon_enigma {

using ProblemPtr = std::shared_ptr<const Problem>;

inline constexpr std::size_t kAbstractTimeCap = 5000;
inline constexpr double kRealTimeSeconds = 10.0;

Limits abstract_limits(std::size_t cap = kAbstractTimeCap);
Limits real_time_limits(double seconds = kRealTimeSeconds);

struct EvalRecord {
  std::string problem;
  std::string strategy;
  std::string status;  // proved | saturated | resource_out | error
  std::size_t processed = 0;
  std::size_t generated = 0;
  double seconds = 0.0;
  std::string error;  // set when status == "error"

  bool solved() const { return status == "proved"; }
};

struct EvalOutput {
  std::vector<EvalRecord> records;       // sorted by problem name
  std::vector<TrainingSample> samples;   // one per proved problem, same order
};

/// Runs every problem independently on `jobs` workers. Per-problem failures
/// become records with status "error". Output order does not depend on jobs.
EvalOutput evaluate_strategy(std::span<const ProblemPtr> problems, const Strategy& strategy,
                             const Limits& limits, std::size_t jobs = 1);

std::vector<ProblemPtr> load_corpus(const std::filesystem::path& dir);

// Files -------------------------------------------------------------------------

void write_records_csv(std::ostream& out, std::span<const EvalRecord> records);
std::vector<EvalRecord> read_records_csv(std::istream& in);

// One JSON object per line: {problem, goal, pos, neg}, clauses as TPTP literals.
void write_samples_jsonl(std::ostream& out, std::span<const TrainingSample> samples);
// Looks problems up by name to recover the signature and problem features.
std::vector<TrainingSample> read_samples_jsonl(
    std::istream& in, const std::function<ProblemPtr(const std::string&)>& lookup);

/// Cumulative training data. Clauses are deduplicated per problem and label
/// by variable-normalized structure.
class SampleArchive {
 public:
  // Returns the number of clauses that were new.
  std::size_t add(const TrainingSample& sample);
  std::vector<TrainingSample> samples() const;
  std::size_t clause_count() const { return clauses_; }

 private:
  struct Entry {
    TrainingSample sample;
    std::set<std::vector<Literal>> pos, neg;
  };
  std::map<std::string, Entry> by_problem_;
  std::size_t clauses_ = 0;
};

// Seeded fixed split; at least one problem when the corpus is non-empty.
std::vector<ProblemPtr> dev_subset(std::span<const ProblemPtr> corpus, std::uint64_t seed,
                                   double fraction = 0.1);

// Grid search ------------------------------------------------------------------------

struct Candidate {
  std::string label;
  std::vector<double> key;  // numeric params, compared lexicographically before the label
  // May throw; failures are recorded and the candidate skipped.
  std::function<std::shared_ptr<const ClauseEvaluator>()> make;
};

struct CandidateResult {
  std::string label;
  bool failed = false;
  std::string error;
  std::size_t solved = 0;
  std::size_t processed = 0;  // summed over all dev problems
};

struct GridResult {
  std::vector<CandidateResult> candidates;
  std::optional<std::size_t> best;
  std::shared_ptr<const ClauseEvaluator> best_evaluator;
};

/// Evaluates S(+)M for every candidate on `dev`. Best = most solved, then
/// fewest processed clauses, then smallest label.
GridResult grid_search(std::span<const Candidate> candidates, std::span<const ProblemPtr> dev,
                       const Strategy& base, const Limits& limits, std::size_t jobs = 1);

std::vector<GbdtParams> gbdt_level_grid();  // depth in {9, 12, 16}
std::vector<GbdtParams> gbdt_leaf_grid();   // {10,20,30,40} x {1200,1500,1800}

struct GnnConfig {
  unsigned epoch = 10;
  std::size_t query = 128;
  std::size_t context = 512;
  std::string label() const;
};

std::vector<GnnConfig> gnn_grid();  // epochs x queries x contexts of the evaluation grid

// Learning loop ---------------------------------------------------------------------

/// Source of candidate models for one loop iteration.
class ModelFamily {
 public:
  virtual ~ModelFamily() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Candidate> candidates(const SampleArchive& archive, std::size_t iteration) = 0;
  // True/negative rates on held-out samples, when the family supports it.
  virtual std::optional<ClassifierRates> rates(const ClauseEvaluator&,
                                               std::span<const TrainingSample>) const {
    return std::nullopt;
  }
};

class GbdtFamily : public ModelFamily {
 public:
  explicit GbdtFamily(std::vector<GbdtParams> grid) : grid_(std::move(grid)) {}
  std::string name() const override { return "gbdt"; }
  std::vector<Candidate> candidates(const SampleArchive& archive, std::size_t iteration) override;
  std::optional<ClassifierRates> rates(const ClauseEvaluator& model,
                                       std::span<const TrainingSample> samples) const override;

 private:
  std::vector<GbdtParams> grid_;
  std::shared_ptr<const Dataset> data_;
};

/// GNN candidates come from per-epoch containers named `epoch-<e>.gnn`
/// produced by an external trainer for each iteration.
class GnnFamily : public ModelFamily {
 public:
  // Trains on the archive and returns the directory holding the containers.
  using Trainer =
      std::function<std::filesystem::path(const SampleArchive&, std::size_t iteration)>;

  GnnFamily(std::vector<GnnConfig> grid, Trainer trainer)
      : grid_(std::move(grid)), trainer_(std::move(trainer)) {}
  std::string name() const override { return "gnn"; }
  std::vector<Candidate> candidates(const SampleArchive& archive, std::size_t iteration) override;

 private:
  std::vector<GnnConfig> grid_;
  Trainer trainer_;
};

struct IterationReport {
  std::size_t index = 0;
  std::string model;  // e.g. "D0" or "N1"
  std::string winner;
  GridResult grid;
  std::shared_ptr<const ClauseEvaluator> evaluator;
  std::vector<EvalRecord> coop;
  std::vector<EvalRecord> solo;
  std::optional<ClassifierRates> rates;
  std::size_t archive_clauses = 0;
};

struct LoopReport {
  std::vector<EvalRecord> base;
  std::vector<IterationReport> iterations;
  std::size_t initial_archive_clauses = 0;

  std::vector<EvalRecord> all_records() const;
};

struct LoopConfig {
  std::size_t iterations = 3;
  Limits limits = abstract_limits();
  std::uint64_t seed = 0;
  double dev_fraction = 0.1;
  std::size_t jobs = 1;
};

class LoopError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// T0 = eval(S); then per iteration: grid-search on the dev subset, evaluate
/// the winner cooperatively and solo on the full corpus, grow the archive.
LoopReport learning_loop(std::span<const ProblemPtr> corpus, const Strategy& base,
                         ModelFamily& family, const LoopConfig& config);

// Portfolio analysis ----------------------------------------------------------------

struct CoverStep {
  std::string strategy;
  std::size_t gain = 0;
  std::size_t covered = 0;
};

/// Greedy cover: repeatedly take the strategy adding the most uncovered
/// problems (ties by smaller strategy id); stops when nothing is gained or
/// after `max_steps`.
std::vector<CoverStep> greedy_cover(const std::map<std::string, std::set<std::string>>& solved,
                                    std::size_t max_steps = SIZE_MAX);

std::map<std::string, std::set<std::string>> solved_sets(std::span<const EvalRecord> records);

struct CollisionReport {
  std::size_t clauses = 0;    // distinct clauses after variable normalization
  std::size_t colliding = 0;  // clauses sharing a clause vector with another clause
  double fraction() const {
    return clauses ? static_cast<double>(colliding) / static_cast<double>(clauses) : 0.0;
  }
};

CollisionReport collision_report(std::span<const TrainingSample> samples, bool anonymize,
                                 std::uint32_t base = kDefaultHashBase);

}  // namespace anon_enigma
