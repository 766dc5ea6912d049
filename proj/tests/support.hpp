#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "anon_enigma/clause.hpp"
#include "anon_enigma/parser.hpp"

namespace support {

inline std::filesystem::path data_dir() { return ANON_ENIGMA_DATA_DIR; }

inline std::shared_ptr<const anon_enigma::Problem> problem(const std::string& text,
                                                           const std::string& name = "t") {
  return std::make_shared<const anon_enigma::Problem>(anon_enigma::parse_problem(text, name));
}

// Clause with the given literals, parsed against (and extending) `sig`.
inline anon_enigma::Clause clause(const std::string& lits, anon_enigma::Signature& sig,
                                  anon_enigma::ClauseId id = 0) {
  anon_enigma::Clause c;
  c.id = id;
  c.role = anon_enigma::ClauseRole::kDerived;
  c.literals = anon_enigma::parse_literals(lits, sig);
  return c;
}

}  // namespace support
