#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace anon_enigma {

using SymbolId = std::uint32_t;
using VarId = std::uint32_t;
using ClauseId = std::uint32_t;

enum class SymbolKind : std::uint8_t { kFunction, kPredicate };

struct Symbol {
  std::string name;
  SymbolKind kind = SymbolKind::kFunction;
  std::uint32_t arity = 0;

  bool operator==(const Symbol&) const = default;
};

// Thrown when a (name, kind) pair is used with two different arities.
class ArityConflict : public std::runtime_error {
 public:
  explicit ArityConflict(const std::string& symbol_name);
  const std::string& symbol_name() const { return symbol_name_; }

 private:
  std::string symbol_name_;
};

/**
 * Rigid signature of a problem. Each (name, kind) pair is registered once
 * with a fixed arity; symbol ids are dense and assigned in registration
 * order.
 */
class Signature {
 public:
  SymbolId intern(const std::string& name, SymbolKind kind, std::uint32_t arity);
  const Symbol& at(SymbolId id) const { return symbols_.at(id); }
  std::size_t size() const { return symbols_.size(); }
  std::span<const Symbol> symbols() const { return symbols_; }
  bool contains(const std::string& name, SymbolKind kind) const;

  bool operator==(const Signature& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<Symbol> symbols_;
  std::map<std::pair<std::string, SymbolKind>, SymbolId> index_;
};

/// Immutable first-order term: a variable or a symbol applied to arguments.
class Term {
 public:
  Term() = default;
  static Term variable(VarId id) { return Term(true, id, {}); }
  static Term apply(SymbolId head, std::vector<Term> args = {}) {
    return Term(false, head, std::move(args));
  }

  bool is_variable() const { return is_var_; }
  VarId var() const { return id_; }
  SymbolId head() const { return id_; }
  const std::vector<Term>& args() const { return args_; }

  bool contains_variable(VarId v) const;
  bool is_ground() const;
  std::size_t size() const;   // symbol + variable occurrences
  std::size_t depth() const;  // leaves have depth 1

  std::strong_ordering operator<=>(const Term& other) const;
  bool operator==(const Term& other) const;

 private:
  Term(bool is_var, std::uint32_t id, std::vector<Term> args)
      : is_var_(is_var), id_(id), args_(std::move(args)) {}

  bool is_var_ = true;
  std::uint32_t id_ = 0;
  std::vector<Term> args_;
};

struct Literal {
  bool positive = true;
  Term atom;

  std::strong_ordering operator<=>(const Literal& other) const;
  bool operator==(const Literal& other) const = default;
};

enum class ClauseRole : std::uint8_t { kAxiom, kNegatedConjecture, kDerived };
enum class InferenceRule : std::uint8_t { kInput, kResolution, kFactoring };

std::string_view to_string(ClauseRole role);
std::string_view to_string(InferenceRule rule);

struct Clause {
  ClauseId id = 0;
  std::vector<Literal> literals;
  ClauseRole role = ClauseRole::kAxiom;
  std::vector<ClauseId> parents;
  InferenceRule rule = InferenceRule::kInput;
  std::string name;  // source name for input clauses

  bool is_empty() const { return literals.empty(); }
  bool is_unit() const { return literals.size() == 1; }
  bool is_ground() const;
  bool is_horn() const;
  bool is_tautology() const;
  std::size_t symbol_count() const;
  // Highest variable id + 1, or 0 for ground clauses.
  VarId variable_bound() const;
};

// Structural equality of the literal lists only (ids and provenance ignored).
bool same_literals(const Clause& a, const Clause& b);

// Renumbers variables by first occurrence (left to right, depth first).
std::vector<Literal> normalize_variables(std::span<const Literal> literals);

// Shifts every variable id by `offset`.
Term shift_variables(const Term& t, VarId offset);
Literal shift_variables(const Literal& l, VarId offset);

// Removes repeated identical literals keeping the first occurrence.
std::vector<Literal> merge_duplicate_literals(std::vector<Literal> literals);

struct Problem {
  std::string name;
  Signature signature;
  std::vector<Clause> clauses;

  std::vector<const Clause*> goal() const;
  std::vector<const Clause*> axioms() const;
};

// Printing in the TPTP CNF subset. Variables print as X<id>.
std::string format_term(const Term& t, const Signature& sig);
std::string format_literal(const Literal& l, const Signature& sig);
std::string format_literals(std::span<const Literal> literals, const Signature& sig);
std::string format_clause(const Clause& c, const Signature& sig);
std::string format_problem(const Problem& p);

// Problems are equal when their signatures and clause structure agree.
bool structurally_equal(const Problem& a, const Problem& b);

}  // namespace anon_enigma
