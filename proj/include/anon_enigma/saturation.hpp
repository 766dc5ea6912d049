#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anon_enigma/clause.hpp"

namespace anon_enigma {

enum class ProofStatus { kProved, kSaturated, kResourceOut };
enum class SelectionMode { kBase, kSolo, kCooperative };
enum class WeightFunction { kSymbolCount, kFifo };

std::string_view to_string(ProofStatus s);
std::string_view to_string(SelectionMode m);
std::string_view to_string(WeightFunction w);

/// Per-problem scoring state. Smaller weights are selected earlier.
class EvaluationSession {
 public:
  virtual ~EvaluationSession() = default;

  // Number of pending clauses that triggers one joint evaluation.
  virtual std::size_t query_size() const { return 1; }
  // Most recent given clauses passed along with every evaluation.
  virtual std::size_t context_size() const { return 0; }

  virtual std::vector<double> weigh(std::span<const Clause* const> queries,
                                    std::span<const Clause* const> context) = 0;
};

/// Immutable, shareable clause evaluator (the learned model). Sessions are
/// single-threaded.
class ClauseEvaluator {
 public:
  virtual ~ClauseEvaluator() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<EvaluationSession> open(const Problem& problem) const = 0;
};

struct QueueSpec {
  WeightFunction weight = WeightFunction::kSymbolCount;
  unsigned ratio = 1;
};

struct Strategy {
  std::string id = "S";
  std::vector<QueueSpec> queues = {{WeightFunction::kSymbolCount, 5}, {WeightFunction::kFifo, 1}};
  SelectionMode mode = SelectionMode::kBase;
  std::shared_ptr<const ClauseEvaluator> evaluator;

  // Throws std::invalid_argument when ratios are zero or a guided mode lacks
  // an evaluator.
  void validate() const;
};

struct Limits {
  std::optional<std::size_t> max_generated;
  std::optional<double> wall_seconds;
  // Generated clauses with more symbols are counted but dropped. A run that
  // dropped anything ends in resource_out rather than saturated.
  std::optional<std::size_t> max_clause_symbols = std::nullopt;
};

struct TraceEntry {
  std::size_t iteration = 0;
  ClauseId given = 0;
  std::string queue;
};

struct BatchRecord {
  std::vector<ClauseId> queries;
  std::size_t context = 0;
  bool terminal = false;  // flushed below query size because U ran dry
};

struct ProofResult {
  ProofStatus status = ProofStatus::kSaturated;
  std::vector<Clause> clauses;  // every kept clause, indexed by id
  std::vector<ClauseId> processed;
  std::vector<TraceEntry> trace;
  std::vector<ClauseId> proof;  // ascending ids of the refutation DAG
  std::vector<BatchRecord> batches;
  std::size_t generated = 0;
  std::size_t evaluator_selections = 0;
  double seconds = 0.0;

  std::optional<ClauseId> empty_clause() const;
};

/// Binary resolution and factoring for a given clause against the processed
/// set. Clauses are fresh, variable-normalized, and carry parents and rule;
/// ids start at `next_id`. Tautologies and duplicates of `existing` or of
/// each other are dropped.
std::vector<Clause> generate_inferences(const Clause& given, std::span<const Clause> processed,
                                        std::span<const Clause> existing = {},
                                        ClauseId next_id = 0);

ProofResult given_clause_loop(const Problem& problem, const Strategy& strategy,
                              const Limits& limits = {});

struct TrainingSample {
  std::shared_ptr<const Problem> problem;
  std::vector<Clause> positives;
  std::vector<Clause> negatives;

  std::size_t size() const { return positives.size() + negatives.size(); }
};

class NotProved : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

TrainingSample extract_training_sample(const ProofResult& result,
                                       std::shared_ptr<const Problem> problem);

// `iter <n> given <id> by <queue>` per line.
std::string format_trace(const ProofResult& result);
// `<id>, <rule>, [parents], <clause>` per proof node.
std::string format_proof(const ProofResult& result, const Signature& sig);

}  // namespace anon_enigma
