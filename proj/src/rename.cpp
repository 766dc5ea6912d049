#include "anon_enigma/rename.hpp"

#include <set>
#include <stdexcept>

#include "anon_enigma/rng.hpp"

namespace anon_enigma {

Renaming Renaming::inverse() const {
  Renaming inv;
  for (const auto& [from, to] : functions) inv.functions.emplace(to, from);
  for (const auto& [from, to] : predicates) inv.predicates.emplace(to, from);
  return inv;
}

const std::string& Renaming::map(const Symbol& s) const {
  const auto& table = s.kind == SymbolKind::kFunction ? functions : predicates;
  auto it = table.find(s.name);
  return it == table.end() ? s.name : it->second;
}

Problem rename_problem(const Problem& p, const Renaming& renaming) {
  Problem out;
  out.name = p.name;
  for (const auto& s : p.signature.symbols()) {
    if (out.signature.contains(renaming.map(s), s.kind))
      throw std::invalid_argument("renaming is not injective on '" + s.name + "'");
    out.signature.intern(renaming.map(s), s.kind, s.arity);
  }
  out.clauses = p.clauses;
  return out;
}

std::pair<Problem, Renaming> rename_problem(const Problem& p, std::uint64_t seed) {
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  Rng rng(seed);
  Renaming renaming;
  std::set<std::pair<std::string, SymbolKind>> used;
  for (const auto& s : p.signature.symbols()) {
    std::string name;
    do {
      name = "s";
      for (int i = 0; i < 8; ++i) name += kAlphabet[rng.below(sizeof(kAlphabet) - 1)];
    } while (!used.emplace(name, s.kind).second);
    (s.kind == SymbolKind::kFunction ? renaming.functions : renaming.predicates)[s.name] = name;
  }
  return {rename_problem(p, renaming), std::move(renaming)};
}

}  // namespace anon_enigma
