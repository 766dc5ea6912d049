#include "anon_enigma/substitution.hpp"

#include <utility>
#include <vector>

namespace anon_enigma {

const Term* Substitution::lookup(VarId v) const {
  auto it = bindings_.find(v);
  return it == bindings_.end() ? nullptr : &it->second;
}

Term Substitution::apply(const Term& t) const {
  if (t.is_variable()) {
    const Term* bound = lookup(t.var());
    return bound ? *bound : t;
  }
  if (t.is_ground()) return t;
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (const auto& a : t.args()) args.push_back(apply(a));
  return Term::apply(t.head(), std::move(args));
}

Literal Substitution::apply(const Literal& l) const { return Literal{l.positive, apply(l.atom)}; }

std::vector<Literal> Substitution::apply(std::span<const Literal> literals) const {
  std::vector<Literal> out;
  out.reserve(literals.size());
  for (const auto& l : literals) out.push_back(apply(l));
  return out;
}

namespace {

// Bindings are kept triangular during unification and resolved at the end.
const Term& walk(const Substitution& s, const Term& t) {
  const Term* cur = &t;
  while (cur->is_variable()) {
    const Term* next = s.lookup(cur->var());
    if (!next) break;
    cur = next;
  }
  return *cur;
}

bool occurs(const Substitution& s, VarId v, const Term& t) {
  const Term& w = walk(s, t);
  if (w.is_variable()) return w.var() == v;
  for (const auto& a : w.args())
    if (occurs(s, v, a)) return true;
  return false;
}

Term resolve(const Substitution& s, const Term& t) {
  const Term& w = walk(s, t);
  if (w.is_variable() || w.is_ground()) return w;
  std::vector<Term> args;
  args.reserve(w.args().size());
  for (const auto& a : w.args()) args.push_back(resolve(s, a));
  return Term::apply(w.head(), std::move(args));
}

}  // namespace

bool unify_into(Substitution& sigma, const Term& a, const Term& b) {
  Substitution tri = sigma;
  std::vector<std::pair<const Term*, const Term*>> todo{{&a, &b}};
  while (!todo.empty()) {
    auto [x, y] = todo.back();
    todo.pop_back();
    const Term& s = walk(tri, *x);
    const Term& t = walk(tri, *y);
    if (s.is_variable() && t.is_variable() && s.var() == t.var()) continue;
    if (s.is_variable()) {
      if (occurs(tri, s.var(), t)) return false;
      tri.bind(s.var(), t);
      continue;
    }
    if (t.is_variable()) {
      if (occurs(tri, t.var(), s)) return false;
      tri.bind(t.var(), s);
      continue;
    }
    if (s.head() != t.head() || s.args().size() != t.args().size()) return false;
    for (std::size_t i = 0; i < s.args().size(); ++i) todo.emplace_back(&s.args()[i], &t.args()[i]);
  }
  Substitution out;
  for (const auto& [v, t] : tri.bindings()) out.bind(v, resolve(tri, t));
  sigma = std::move(out);
  return true;
}

std::optional<Substitution> unify(const Term& a, const Term& b) {
  Substitution sigma;
  if (!unify_into(sigma, a, b)) return std::nullopt;
  return sigma;
}

Clause apply_substitution(const Substitution& sigma, const Clause& c,
                          std::optional<ClauseId> fresh_id) {
  Clause out = c;
  out.literals = sigma.apply(c.literals);
  if (fresh_id) {
    out.id = *fresh_id;
    out.role = ClauseRole::kDerived;
    out.parents = {c.id};
    out.name.clear();
  }
  return out;
}

}  // namespace anon_enigma
