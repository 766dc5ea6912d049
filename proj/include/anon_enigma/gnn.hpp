#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "anon_enigma/clause.hpp"
#include "anon_enigma/saturation.hpp"

namespace anon_enigma {

// Hypergraph -----------------------------------------------------------------

struct SymbolNode {
  SymbolKind kind = SymbolKind::kFunction;
  std::uint32_t arity = 0;
};

/// Application hyperedge: `result` = head(args...). Literal edges carry
/// polarity +1/-1, term edges 0.
struct AppEdge {
  std::uint32_t result = 0;
  std::uint32_t head = 0;
  std::vector<std::uint32_t> args;
  std::int8_t polarity = 0;
};

enum class ClauseNodeRole : std::uint8_t { kQuery, kContext, kGoal };

struct Hypergraph {
  std::vector<ClauseId> clause_ids;  // clause node -> clause id (ascending)
  std::vector<ClauseNodeRole> clause_roles;
  std::vector<SymbolNode> symbols;
  std::size_t term_count = 0;  // unique subterms and literals
  std::vector<std::pair<std::uint32_t, std::uint32_t>> clause_edges;  // (clause, literal)
  std::vector<AppEdge> app_edges;
};

/**
 * Builds one hypergraph over queries, context and goal clauses. Clause ids
 * must be pairwise distinct across the three sets (std::invalid_argument
 * otherwise). Variables are normalized per clause before sharing, so
 * structurally identical subterms map to one term node. Only kind and arity
 * of symbols enter the graph.
 */
Hypergraph build_hypergraph(std::span<const Clause* const> queries,
                            std::span<const Clause* const> context,
                            std::span<const Clause* const> goal, const Signature& sig);

/// Flat index-array encoding of a hypergraph.
struct TensorGraph {
  std::size_t clause_count = 0;
  std::size_t symbol_count = 0;
  std::size_t term_count = 0;
  std::vector<std::uint32_t> app_result;
  std::vector<std::uint32_t> app_head;
  std::vector<std::int8_t> app_polarity;
  std::vector<std::uint32_t> app_arg_offsets;  // size = edges + 1
  std::vector<std::uint32_t> app_args;
  std::vector<std::uint32_t> clause_edge_clause;
  std::vector<std::uint32_t> clause_edge_literal;
  std::vector<std::uint8_t> goal_mask;
  std::vector<std::uint8_t> query_mask;
  std::vector<ClauseId> clause_ids;

  void validate() const;  // throws std::invalid_argument on bad indices
  bool operator==(const TensorGraph&) const = default;
};

TensorGraph tensorize(const Hypergraph& g);

// Weights ----------------------------------------------------------------------

inline constexpr int kGnnContainerVersion = 1;
inline constexpr std::size_t kDefaultGnnDim = 32;
inline constexpr std::size_t kDefaultGnnRounds = 5;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct RoundWeights {
  Matrix clause_self, clause_literal;
  Vector clause_bias;
  Matrix symbol_self, symbol_app;
  Vector symbol_bias;
  Matrix term_self, term_head, term_arg1, term_arg2, term_arg3, term_parent, term_clause;
  Vector term_bias, positive_bias, negative_bias;
};

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
};

/**
 * Message-passing parameters. Each round updates all nodes from the previous
 * round's embeddings:
 *   clause  <- relu(Ws c + Wl mean(literals) + b)
 *   symbol  <- relu(Ws s + Wa mean(application results) + b)
 *   term    <- relu(Ws u + Wh mean(head) + W1 arg1 + W2 arg2 + W3 mean(args>=3)
 *                   + Wp mean(parents) + Wc mean(clauses) + b + polarity bias)
 * The head scores a clause from [clause ; mean(goal clauses)] through one
 * hidden relu layer of width dim.
 */
struct GnnWeights {
  std::size_t dim = kDefaultGnnDim;
  std::size_t rounds = kDefaultGnnRounds;
  Vector init_clause, init_symbol, init_term;
  std::vector<RoundWeights> round;
  Matrix head_hidden;  // dim x 2 dim
  Vector head_hidden_bias;
  Vector head_out;  // dim
  double head_out_bias = 0.0;

  static GnnWeights zeros(std::size_t dim = kDefaultGnnDim, std::size_t rounds = kDefaultGnnRounds);
  // Uniform in [-scale, scale), rounded to float precision.
  static GnnWeights random(std::uint64_t seed, std::size_t dim = kDefaultGnnDim,
                           std::size_t rounds = kDefaultGnnRounds, double scale = 0.3);

  // Tensor names and shapes in container order.
  static std::vector<TensorSpec> layout(std::size_t dim, std::size_t rounds);
  // Values flattened in container order (row-major).
  std::vector<float> flatten() const;
  static GnnWeights unflatten(std::size_t dim, std::size_t rounds, std::span<const float> values);
};

class ContainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ContainerVersionError : public ContainerError {
 public:
  using ContainerError::ContainerError;
};
class ContainerShapeError : public ContainerError {
 public:
  using ContainerError::ContainerError;
};
class ContainerSizeError : public ContainerError {
 public:
  using ContainerError::ContainerError;
};
class ContainerValueError : public ContainerError {
 public:
  using ContainerError::ContainerError;
};

/**
 * Weight container: one line of JSON manifest
 *   {"format":"anon-enigma-gnn","version":1,"dim":D,"rounds":L,
 *    "tensors":[{"name","shape","offset","length"}...],"payload_floats":N}
 * terminated by '\n', followed by N little-endian float32 values. Offsets
 * and lengths count floats from the start of the payload.
 */
std::string encode_container(const GnnWeights& w);
GnnWeights decode_container(std::string_view bytes);
void save_weights(const GnnWeights& w, const std::filesystem::path& path);
GnnWeights load_weights(const std::filesystem::path& path);

// Inference --------------------------------------------------------------------

class GnnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scores (logits) for the query clause nodes, in clause-node order.
std::vector<double> forward(const GnnWeights& w, const TensorGraph& t);

/// Scores clauses in batches of `query_size` jointly with up to
/// `context_size` recent given clauses and the problem's goal clauses.
/// Weight = -score, so higher predicted usefulness is selected first.
class GnnEvaluator : public ClauseEvaluator {
 public:
  GnnEvaluator(std::shared_ptr<const GnnWeights> weights, std::size_t query_size,
               std::size_t context_size);
  std::string name() const override { return "gnn"; }
  std::unique_ptr<EvaluationSession> open(const Problem& problem) const override;

  std::size_t query_size() const { return query_size_; }
  std::size_t context_size() const { return context_size_; }

 private:
  std::shared_ptr<const GnnWeights> weights_;
  std::size_t query_size_;
  std::size_t context_size_;
};

}  // namespace anon_enigma
