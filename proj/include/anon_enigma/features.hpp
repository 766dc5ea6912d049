#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "anon_enigma/clause.hpp"

namespace anon_enigma {

inline constexpr std::uint32_t kDefaultHashBase = 1u << 15;
inline constexpr std::size_t kStatisticsCount = 20;
inline constexpr std::size_t kProblemFeatureCount = 22;

/// Sparse non-negative vector over [0, base). Entries are kept sorted by
/// index with no explicit zeros.
class SparseVector {
 public:
  SparseVector() = default;
  explicit SparseVector(std::uint32_t base) : base_(base) {}

  std::uint32_t base() const { return base_; }
  // Adds `value` at `index`; throws std::out_of_range when index >= base.
  void add(std::uint32_t index, double value);
  double at(std::uint32_t index) const;
  double total() const;
  const std::vector<std::pair<std::uint32_t, double>>& entries() const { return entries_; }

  bool operator==(const SparseVector&) const = default;

 private:
  std::uint32_t base_ = kDefaultHashBase;
  std::vector<std::pair<std::uint32_t, double>> entries_;
};

/// (clause, goal, problem) feature segments. Flattened layout:
/// [0, base) clause, [base, 2 base) goal, [2 base, 2 base + 22) problem.
struct FeatureTriple {
  SparseVector clause_vec;
  SparseVector goal_vec;
  std::array<double, kProblemFeatureCount> problem_vec{};

  std::uint32_t base() const { return clause_vec.base(); }
  std::size_t dimension() const { return 2 * std::size_t{base()} + kProblemFeatureCount; }
  // Sorted (index, value) pairs of the flattened vector, zeros omitted.
  std::vector<std::pair<std::uint32_t, double>> flatten() const;

  bool operator==(const FeatureTriple&) const = default;
};

// "f<n>" for functions, "p<m>" for predicates.
std::string anonymize_symbol(const Symbol& s);

std::uint64_t fnv1a64(std::string_view data);
// fnv1a64(feature) mod base; base must be a power of two.
std::uint32_t hash_feature(std::string_view feature, std::uint32_t base);

/**
 * Vertical cuts: every node contributes the sign-prefixed, '.'-joined path
 * of the last (up to) three symbol names from the literal root down to it.
 * Horizontal cuts: every application with arguments contributes
 * "head(arg-head,...,arg-head)". Variables render as "*". The multiset is
 * returned sorted.
 */
std::vector<std::string> cut_features(const Clause& c, const Signature& sig, bool anonymize);
std::vector<std::string> cut_features(std::span<const Literal> literals, const Signature& sig,
                                      bool anonymize);

/**
 * Ten variable statistics followed by ten symbol statistics:
 *   0 distinct, 1 occurrences, 2 occurring once, 3 occurring more than once,
 *   4..6 largest three occurrence counts (descending),
 *   7..9 smallest three occurrence counts (ascending);
 * missing ranks are zero. Symbol statistics pool function and predicate
 * symbol occurrences.
 */
std::array<double, kStatisticsCount> clause_statistics(std::span<const Literal> literals);
std::array<double, kStatisticsCount> clause_statistics(const Clause& c);

/**
 * Problem features, in order:
 *   goals, axioms, unit goals, unit axioms, Horn clauses, ground clauses,
 *   clauses, distinct predicates, distinct functions, max function arity,
 *   max predicate arity, max clause length, mean clause length (floor),
 *   max term depth, positive literals, negative literals, purely positive
 *   clauses, purely negative clauses, distinct variables (per clause,
 *   summed), variable occurrences, constants, non-constant functions.
 */
std::array<double, kProblemFeatureCount> problem_features(const Problem& p);

/// Goal and problem segments that every clause of a problem shares.
struct ProblemContext {
  SparseVector goal_vec;
  std::array<double, kProblemFeatureCount> problem_vec{};
};

ProblemContext problem_context(const Problem& p, bool anonymize,
                               std::uint32_t base = kDefaultHashBase);

// Clause segment: hashed cuts below base - 20, statistics in the top 20 slots.
SparseVector clause_vector(std::span<const Literal> literals, const Signature& sig, bool anonymize,
                           std::uint32_t base = kDefaultHashBase);

FeatureTriple feature_triple(const Clause& c, const Problem& p, bool anonymize,
                             std::uint32_t base = kDefaultHashBase);
FeatureTriple feature_triple(const Clause& c, const Signature& sig, const ProblemContext& ctx,
                             bool anonymize);

// `<problem> <clause-id> <label> idx:val ...` with ascending indices.
std::string format_feature_line(const std::string& problem, ClauseId id, const std::string& label,
                                const FeatureTriple& triple);

}  // namespace anon_enigma
