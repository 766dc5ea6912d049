#pragma once

#include <map>
#include <optional>

#include "anon_enigma/clause.hpp"

namespace anon_enigma {

/// Finite map from variables to terms. Unifiers produced by `unify` are
/// idempotent: no bound variable occurs in any binding.
class Substitution {
 public:
  bool empty() const { return bindings_.empty(); }
  std::size_t size() const { return bindings_.size(); }
  const Term* lookup(VarId v) const;
  void bind(VarId v, Term t) { bindings_.insert_or_assign(v, std::move(t)); }
  const std::map<VarId, Term>& bindings() const { return bindings_; }

  // Simultaneous replacement of every bound variable.
  Term apply(const Term& t) const;
  Literal apply(const Literal& l) const;
  std::vector<Literal> apply(std::span<const Literal> literals) const;

  bool operator==(const Substitution&) const = default;

 private:
  std::map<VarId, Term> bindings_;
};

// Most general unifier with occurs check, or nullopt on clash/occurs failure.
std::optional<Substitution> unify(const Term& a, const Term& b);

// Extends an existing idempotent unifier so that it also unifies a and b.
bool unify_into(Substitution& sigma, const Term& a, const Term& b);

/// Applies sigma to every literal of c. When `fresh_id` is set the result is
/// a derived clause with that id and c as its only parent; otherwise id and
/// provenance are copied.
Clause apply_substitution(const Substitution& sigma, const Clause& c,
                          std::optional<ClauseId> fresh_id = std::nullopt);

}  // namespace anon_enigma
