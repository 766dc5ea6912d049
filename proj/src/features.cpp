#include "anon_enigma/features.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <stdexcept>

namespace anon_enigma {

void SparseVector::add(std::uint32_t index, double value) {
  if (index >= base_) throw std::out_of_range("sparse index " + std::to_string(index) + " >= base");
  if (value == 0.0) return;
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const auto& e, std::uint32_t i) { return e.first < i; });
  if (it != entries_.end() && it->first == index) {
    it->second += value;
    if (it->second == 0.0) entries_.erase(it);
  } else {
    entries_.insert(it, {index, value});
  }
}

double SparseVector::at(std::uint32_t index) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const auto& e, std::uint32_t i) { return e.first < i; });
  return it != entries_.end() && it->first == index ? it->second : 0.0;
}

double SparseVector::total() const {
  double t = 0.0;
  for (const auto& [i, v] : entries_) t += v;
  return t;
}

std::vector<std::pair<std::uint32_t, double>> FeatureTriple::flatten() const {
  std::vector<std::pair<std::uint32_t, double>> out;
  out.reserve(clause_vec.entries().size() + goal_vec.entries().size() + kProblemFeatureCount);
  for (const auto& e : clause_vec.entries()) out.push_back(e);
  for (const auto& [i, v] : goal_vec.entries()) out.emplace_back(base() + i, v);
  for (std::size_t i = 0; i < kProblemFeatureCount; ++i)
    if (problem_vec[i] != 0.0) out.emplace_back(2 * base() + i, problem_vec[i]);
  return out;
}

std::string anonymize_symbol(const Symbol& s) {
  return (s.kind == SymbolKind::kFunction ? "f" : "p") + std::to_string(s.arity);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint32_t hash_feature(std::string_view feature, std::uint32_t base) {
  if (base == 0 || (base & (base - 1)) != 0)
    throw std::invalid_argument("hash base must be a power of two");
  return static_cast<std::uint32_t>(fnv1a64(feature) % base);
}

namespace {

class CutCollector {
 public:
  CutCollector(const Signature& sig, bool anonymize) : sig_(sig), anonymize_(anonymize) {}

  void literal(const Literal& l) {
    sign_ = l.positive ? "+" : "-";
    path_.clear();
    visit(l.atom);
  }

  std::vector<std::string> take() {
    std::sort(out_.begin(), out_.end());
    return std::move(out_);
  }

 private:
  std::string label(const Term& t) const {
    if (t.is_variable()) return "*";
    const Symbol& s = sig_.at(t.head());
    return anonymize_ ? anonymize_symbol(s) : s.name;
  }

  void visit(const Term& t) {
    path_.push_back(label(t));
    std::string vertical = sign_;
    const std::size_t from = path_.size() > 3 ? path_.size() - 3 : 0;
    for (std::size_t i = from; i < path_.size(); ++i) {
      if (i > from) vertical += '.';
      vertical += path_[i];
    }
    out_.push_back(std::move(vertical));

    if (!t.is_variable() && !t.args().empty()) {
      std::string horizontal = path_.back() + "(";
      for (std::size_t i = 0; i < t.args().size(); ++i) {
        if (i) horizontal += ',';
        horizontal += label(t.args()[i]);
      }
      horizontal += ')';
      out_.push_back(std::move(horizontal));
      for (const auto& a : t.args()) visit(a);
    }
    path_.pop_back();
  }

  const Signature& sig_;
  bool anonymize_;
  std::string sign_;
  std::vector<std::string> path_;
  std::vector<std::string> out_;
};

void count_occurrences(const Term& t, std::map<VarId, std::size_t>& vars,
                       std::map<SymbolId, std::size_t>& syms) {
  if (t.is_variable()) {
    ++vars[t.var()];
    return;
  }
  ++syms[t.head()];
  for (const auto& a : t.args()) count_occurrences(a, vars, syms);
}

template <typename Map>
void fill_statistics(const Map& counts, double* out) {
  std::vector<std::size_t> occ;
  occ.reserve(counts.size());
  for (const auto& [k, n] : counts) occ.push_back(n);
  std::sort(occ.begin(), occ.end());
  double total = 0, once = 0, many = 0;
  for (std::size_t n : occ) {
    total += static_cast<double>(n);
    (n == 1 ? once : many) += 1;
  }
  out[0] = static_cast<double>(occ.size());
  out[1] = total;
  out[2] = once;
  out[3] = many;
  for (std::size_t r = 0; r < 3; ++r) {
    out[4 + r] = r < occ.size() ? static_cast<double>(occ[occ.size() - 1 - r]) : 0.0;
    out[7 + r] = r < occ.size() ? static_cast<double>(occ[r]) : 0.0;
  }
}

void add_hashed_cuts(SparseVector& vec, std::span<const Literal> literals, const Signature& sig,
                     bool anonymize) {
  const std::uint32_t slots = vec.base() - static_cast<std::uint32_t>(kStatisticsCount);
  for (const auto& f : cut_features(literals, sig, anonymize))
    vec.add(static_cast<std::uint32_t>(fnv1a64(f) % slots), 1.0);
}

void add_statistics(SparseVector& vec, std::span<const Literal> literals) {
  const auto stats = clause_statistics(literals);
  const std::uint32_t first = vec.base() - static_cast<std::uint32_t>(kStatisticsCount);
  for (std::size_t i = 0; i < kStatisticsCount; ++i)
    vec.add(first + static_cast<std::uint32_t>(i), stats[i]);
}

void check_base(std::uint32_t base) {
  if (base <= kStatisticsCount || (base & (base - 1)) != 0)
    throw std::invalid_argument("hash base must be a power of two above 20");
}

}  // namespace

std::vector<std::string> cut_features(std::span<const Literal> literals, const Signature& sig,
                                      bool anonymize) {
  CutCollector collector(sig, anonymize);
  for (const auto& l : literals) collector.literal(l);
  return collector.take();
}

std::vector<std::string> cut_features(const Clause& c, const Signature& sig, bool anonymize) {
  return cut_features(c.literals, sig, anonymize);
}

std::array<double, kStatisticsCount> clause_statistics(std::span<const Literal> literals) {
  std::map<VarId, std::size_t> vars;
  std::map<SymbolId, std::size_t> syms;
  for (const auto& l : literals) count_occurrences(l.atom, vars, syms);
  std::array<double, kStatisticsCount> out{};
  fill_statistics(vars, out.data());
  fill_statistics(syms, out.data() + 10);
  return out;
}

std::array<double, kStatisticsCount> clause_statistics(const Clause& c) {
  return clause_statistics(c.literals);
}

std::array<double, kProblemFeatureCount> problem_features(const Problem& p) {
  std::array<double, kProblemFeatureCount> f{};
  if (p.clauses.empty()) return f;
  std::set<SymbolId> preds, funcs;
  std::size_t total_literals = 0;
  for (const auto& c : p.clauses) {
    const bool goal = c.role == ClauseRole::kNegatedConjecture;
    f[goal ? 0 : 1] += 1;
    if (c.is_unit()) f[goal ? 2 : 3] += 1;
    if (c.is_horn()) f[4] += 1;
    if (c.is_ground()) f[5] += 1;
    f[6] += 1;
    f[11] = std::max(f[11], static_cast<double>(c.literals.size()));
    total_literals += c.literals.size();
    std::size_t pos = 0;
    std::map<VarId, std::size_t> vars;
    std::map<SymbolId, std::size_t> syms;
    for (const auto& l : c.literals) {
      pos += l.positive;
      f[13] = std::max(f[13], static_cast<double>(l.atom.depth()));
      count_occurrences(l.atom, vars, syms);
    }
    f[14] += static_cast<double>(pos);
    f[15] += static_cast<double>(c.literals.size() - pos);
    if (!c.literals.empty() && pos == c.literals.size()) f[16] += 1;
    if (!c.literals.empty() && pos == 0) f[17] += 1;
    f[18] += static_cast<double>(vars.size());
    for (const auto& [v, n] : vars) f[19] += static_cast<double>(n);
    for (const auto& [s, n] : syms)
      (p.signature.at(s).kind == SymbolKind::kPredicate ? preds : funcs).insert(s);
  }
  f[7] = static_cast<double>(preds.size());
  f[8] = static_cast<double>(funcs.size());
  for (SymbolId s : funcs) {
    const auto arity = p.signature.at(s).arity;
    f[9] = std::max(f[9], static_cast<double>(arity));
    f[arity == 0 ? 20 : 21] += 1;
  }
  for (SymbolId s : preds) f[10] = std::max(f[10], static_cast<double>(p.signature.at(s).arity));
  f[12] = static_cast<double>(total_literals / p.clauses.size());
  return f;
}

ProblemContext problem_context(const Problem& p, bool anonymize, std::uint32_t base) {
  check_base(base);
  ProblemContext ctx{SparseVector(base), problem_features(p)};
  // Goal clauses are joined into one literal list with variables kept apart.
  std::vector<Literal> joint;
  VarId offset = 0;
  for (const Clause* g : p.goal()) {
    for (const auto& l : g->literals) joint.push_back(shift_variables(l, offset));
    offset += g->variable_bound();
  }
  add_hashed_cuts(ctx.goal_vec, joint, p.signature, anonymize);
  add_statistics(ctx.goal_vec, joint);
  return ctx;
}

SparseVector clause_vector(std::span<const Literal> literals, const Signature& sig, bool anonymize,
                           std::uint32_t base) {
  check_base(base);
  SparseVector vec(base);
  add_hashed_cuts(vec, literals, sig, anonymize);
  add_statistics(vec, literals);
  return vec;
}

FeatureTriple feature_triple(const Clause& c, const Signature& sig, const ProblemContext& ctx,
                             bool anonymize) {
  return FeatureTriple{clause_vector(c.literals, sig, anonymize, ctx.goal_vec.base()), ctx.goal_vec,
                       ctx.problem_vec};
}

FeatureTriple feature_triple(const Clause& c, const Problem& p, bool anonymize,
                             std::uint32_t base) {
  return feature_triple(c, p.signature, problem_context(p, anonymize, base), anonymize);
}

std::string format_feature_line(const std::string& problem, ClauseId id, const std::string& label,
                                const FeatureTriple& triple) {
  std::string out = problem + " " + std::to_string(id) + " " + label;
  char buf[64];
  for (const auto& [i, v] : triple.flatten()) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out += " " + std::to_string(i) + ":" + std::string(buf, end);
  }
  return out;
}

}  // namespace anon_enigma
