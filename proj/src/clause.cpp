#include "anon_enigma/clause.hpp"

#include <algorithm>
#include <unordered_map>

namespace anon_enigma {

ArityConflict::ArityConflict(const std::string& symbol_name)
    : std::runtime_error("arity conflict for symbol '" + symbol_name + "'"),
      symbol_name_(symbol_name) {}

SymbolId Signature::intern(const std::string& name, SymbolKind kind, std::uint32_t arity) {
  auto key = std::make_pair(name, kind);
  if (auto it = index_.find(key); it != index_.end()) {
    if (symbols_[it->second].arity != arity) throw ArityConflict(name);
    return it->second;
  }
  const auto id = static_cast<SymbolId>(symbols_.size());
  symbols_.push_back(Symbol{name, kind, arity});
  index_.emplace(std::move(key), id);
  return id;
}

bool Signature::contains(const std::string& name, SymbolKind kind) const {
  return index_.count({name, kind}) > 0;
}

bool Term::contains_variable(VarId v) const {
  if (is_var_) return id_ == v;
  return std::any_of(args_.begin(), args_.end(),
                     [v](const Term& a) { return a.contains_variable(v); });
}

bool Term::is_ground() const {
  if (is_var_) return false;
  return std::all_of(args_.begin(), args_.end(), [](const Term& a) { return a.is_ground(); });
}

std::strong_ordering Term::operator<=>(const Term& other) const {
  if (is_var_ != other.is_var_) return is_var_ ? std::strong_ordering::less : std::strong_ordering::greater;
  if (auto c = id_ <=> other.id_; c != 0) return c;
  if (auto c = args_.size() <=> other.args_.size(); c != 0) return c;
  for (std::size_t i = 0; i < args_.size(); ++i)
    if (auto c = args_[i] <=> other.args_[i]; c != 0) return c;
  return std::strong_ordering::equal;
}

bool Term::operator==(const Term& other) const {
  return is_var_ == other.is_var_ && id_ == other.id_ && args_ == other.args_;
}

std::strong_ordering Literal::operator<=>(const Literal& other) const {
  if (auto c = positive <=> other.positive; c != 0) return c;
  return atom <=> other.atom;
}

std::size_t Term::size() const {
  std::size_t n = 1;
  for (const auto& a : args_) n += a.size();
  return n;
}

std::size_t Term::depth() const {
  std::size_t d = 0;
  for (const auto& a : args_) d = std::max(d, a.depth());
  return d + 1;
}

std::string_view to_string(ClauseRole role) {
  switch (role) {
    case ClauseRole::kAxiom: return "axiom";
    case ClauseRole::kNegatedConjecture: return "negated_conjecture";
    case ClauseRole::kDerived: return "plain";
  }
  return "plain";
}

std::string_view to_string(InferenceRule rule) {
  switch (rule) {
    case InferenceRule::kInput: return "input";
    case InferenceRule::kResolution: return "resolution";
    case InferenceRule::kFactoring: return "factoring";
  }
  return "input";
}

bool Clause::is_ground() const {
  return std::all_of(literals.begin(), literals.end(),
                     [](const Literal& l) { return l.atom.is_ground(); });
}

bool Clause::is_horn() const {
  return std::count_if(literals.begin(), literals.end(),
                       [](const Literal& l) { return l.positive; }) <= 1;
}

bool Clause::is_tautology() const {
  for (std::size_t i = 0; i < literals.size(); ++i)
    for (std::size_t j = i + 1; j < literals.size(); ++j)
      if (literals[i].positive != literals[j].positive && literals[i].atom == literals[j].atom)
        return true;
  return false;
}

std::size_t Clause::symbol_count() const {
  std::size_t n = 0;
  for (const auto& l : literals) n += l.atom.size();
  return n;
}

namespace {

void max_var(const Term& t, VarId& bound) {
  if (t.is_variable()) {
    bound = std::max(bound, t.var() + 1);
    return;
  }
  for (const auto& a : t.args()) max_var(a, bound);
}

Term renumber(const Term& t, std::unordered_map<VarId, VarId>& map) {
  if (t.is_variable()) {
    auto [it, inserted] = map.try_emplace(t.var(), static_cast<VarId>(map.size()));
    return Term::variable(it->second);
  }
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (const auto& a : t.args()) args.push_back(renumber(a, map));
  return Term::apply(t.head(), std::move(args));
}

}  // namespace

VarId Clause::variable_bound() const {
  VarId bound = 0;
  for (const auto& l : literals) max_var(l.atom, bound);
  return bound;
}

bool same_literals(const Clause& a, const Clause& b) { return a.literals == b.literals; }

std::vector<Literal> normalize_variables(std::span<const Literal> literals) {
  std::unordered_map<VarId, VarId> map;
  std::vector<Literal> out;
  out.reserve(literals.size());
  for (const auto& l : literals) out.push_back(Literal{l.positive, renumber(l.atom, map)});
  return out;
}

Term shift_variables(const Term& t, VarId offset) {
  if (t.is_variable()) return Term::variable(t.var() + offset);
  std::vector<Term> args;
  args.reserve(t.args().size());
  for (const auto& a : t.args()) args.push_back(shift_variables(a, offset));
  return Term::apply(t.head(), std::move(args));
}

Literal shift_variables(const Literal& l, VarId offset) {
  return Literal{l.positive, shift_variables(l.atom, offset)};
}

std::vector<Literal> merge_duplicate_literals(std::vector<Literal> literals) {
  std::vector<Literal> out;
  out.reserve(literals.size());
  for (auto& l : literals)
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(std::move(l));
  return out;
}

std::vector<const Clause*> Problem::goal() const {
  std::vector<const Clause*> out;
  for (const auto& c : clauses)
    if (c.role == ClauseRole::kNegatedConjecture) out.push_back(&c);
  return out;
}

std::vector<const Clause*> Problem::axioms() const {
  std::vector<const Clause*> out;
  for (const auto& c : clauses)
    if (c.role == ClauseRole::kAxiom) out.push_back(&c);
  return out;
}

std::string format_term(const Term& t, const Signature& sig) {
  if (t.is_variable()) return "X" + std::to_string(t.var());
  std::string out = sig.at(t.head()).name;
  if (!t.args().empty()) {
    out += '(';
    for (std::size_t i = 0; i < t.args().size(); ++i) {
      if (i) out += ',';
      out += format_term(t.args()[i], sig);
    }
    out += ')';
  }
  return out;
}

std::string format_literal(const Literal& l, const Signature& sig) {
  return (l.positive ? "" : "~") + format_term(l.atom, sig);
}

std::string format_literals(std::span<const Literal> literals, const Signature& sig) {
  if (literals.empty()) return "$false";
  std::string out;
  for (std::size_t i = 0; i < literals.size(); ++i) {
    if (i) out += " | ";
    out += format_literal(literals[i], sig);
  }
  return out;
}

std::string format_clause(const Clause& c, const Signature& sig) {
  std::string name = c.name.empty() ? "c" + std::to_string(c.id) : c.name;
  return "cnf(" + name + ", " + std::string(to_string(c.role)) + ", " +
         format_literals(c.literals, sig) + ").";
}

std::string format_problem(const Problem& p) {
  std::string out;
  if (!p.name.empty()) out += "% " + p.name + "\n";
  for (const auto& c : p.clauses) out += format_clause(c, p.signature) + "\n";
  return out;
}

bool structurally_equal(const Problem& a, const Problem& b) {
  if (!(a.signature == b.signature) || a.clauses.size() != b.clauses.size()) return false;
  for (std::size_t i = 0; i < a.clauses.size(); ++i) {
    const auto& x = a.clauses[i];
    const auto& y = b.clauses[i];
    if (x.id != y.id || x.role != y.role || x.literals != y.literals) return false;
  }
  return true;
}

}  // namespace anon_enigma
