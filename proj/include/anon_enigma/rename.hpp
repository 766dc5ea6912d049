#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "anon_enigma/clause.hpp"

namespace anon_enigma {

/// Name bijection per symbol kind. Arities are never touched.
struct Renaming {
  std::map<std::string, std::string> functions;
  std::map<std::string, std::string> predicates;

  Renaming inverse() const;
  const std::string& map(const Symbol& s) const;
};

// Applies an explicit renaming. Symbols missing from the map keep their name.
Problem rename_problem(const Problem& p, const Renaming& renaming);

/// Renames every symbol to a fresh name drawn deterministically from `seed`.
std::pair<Problem, Renaming> rename_problem(const Problem& p, std::uint64_t seed);

}  // namespace anon_enigma
