#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "anon_enigma/clause.hpp"

namespace anon_enigma {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/**
 * Parses a sequence of `cnf(name, role, formula).` statements.
 *
 * Roles `axiom` and `hypothesis` become ClauseRole::kAxiom,
 * `negated_conjecture` stays as is. Clause ids follow source order starting
 * at 0 and variables are numbered per clause by first occurrence.
 * `$false` denotes the empty clause.
 *
 * Throws ParseError on malformed input and ArityConflict when a symbol is
 * used with two arities.
 */
Problem parse_problem(std::string_view text, std::string name = {});

Problem load_problem(const std::filesystem::path& path);

// Parses one disjunction (e.g. "~p(X) | q(a)") against an existing signature,
// registering any new symbols.
std::vector<Literal> parse_literals(std::string_view text, Signature& sig);

}  // namespace anon_enigma
