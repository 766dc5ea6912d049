#pragma once

// Independent reference implementations used to check the library.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "anon_enigma/clause.hpp"
#include "anon_enigma/gnn.hpp"
#include "json.hpp"

namespace oracle {

using namespace anon_enigma;

// FNV-1a 64, byte at a time.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

// GBDT ---------------------------------------------------------------------------

inline double walk(const nlohmann::json& node, const std::map<std::uint32_t, double>& row) {
  const nlohmann::json* n = &node;
  while (!n->contains("leaf")) {
    const auto f = n->at("f").get<std::uint32_t>();
    const auto it = row.find(f);
    const double v = it == row.end() ? 0.0 : it->second;
    n = v < n->at("t").get<double>() ? &n->at("l") : &n->at("r");
  }
  return n->at("leaf").get<double>();
}

// Margin of a serialized model, read straight from the JSON text.
inline double model_margin(const nlohmann::json& model, const std::map<std::uint32_t, double>& row) {
  double m = model.at("base_score").get<double>();
  for (const auto& tree : model.at("trees")) m += walk(tree, row);
  return m;
}

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Propositional enumeration ----------------------------------------------------------

// Satisfiability of a ground problem by trying every assignment of its atoms.
inline bool ground_satisfiable(const Problem& p) {
  std::map<Term, std::size_t> atoms;
  for (const auto& c : p.clauses)
    for (const auto& l : c.literals) atoms.emplace(l.atom, atoms.size());
  if (atoms.size() > 22) throw std::invalid_argument("too many atoms to enumerate");
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << atoms.size()); ++mask) {
    bool all = true;
    for (const auto& c : p.clauses) {
      bool sat = false;
      for (const auto& l : c.literals)
        if (((mask >> atoms.at(l.atom)) & 1) == (l.positive ? 1u : 0u)) sat = true;
      if (!sat) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

inline bool is_ground(const Problem& p) {
  for (const auto& c : p.clauses)
    if (!c.is_ground()) return false;
  return true;
}

// Greedy cover ---------------------------------------------------------------------

// Largest marginal gain of any unused strategy given the covered set,
// found by checking every candidate.
inline std::size_t best_marginal_gain(const std::map<std::string, std::set<std::string>>& solved,
                                      const std::set<std::string>& used,
                                      const std::set<std::string>& covered) {
  std::size_t best = 0;
  for (const auto& [id, s] : solved) {
    if (used.count(id)) continue;
    std::size_t g = 0;
    for (const auto& x : s)
      if (!covered.count(x)) ++g;
    best = std::max(best, g);
  }
  return best;
}

// GNN scalar reference ------------------------------------------------------------

// Forward pass written with plain loops over the hypergraph, reading the
// parameters from the flattened container values by tensor name.
class ScalarGnn {
 public:
  explicit ScalarGnn(const GnnWeights& w) : dim_(w.dim), rounds_(w.rounds) {
    const auto values = w.flatten();
    std::size_t offset = 0;
    for (const auto& spec : GnnWeights::layout(w.dim, w.rounds)) {
      std::size_t n = 1;
      for (auto s : spec.shape) n *= s;
      tensors_[spec.name].assign(values.begin() + offset, values.begin() + offset + n);
      offset += n;
    }
  }

  std::vector<double> scores(const Hypergraph& g) const {
    const std::size_t nc = g.clause_ids.size(), ns = g.symbols.size(), nu = g.term_count;
    using Rows = std::vector<std::vector<double>>;
    Rows C(nc, get("init.clause")), S(ns, get("init.symbol")), U(nu, get("init.term"));

    for (std::size_t r = 0; r < rounds_; ++r) {
      const std::string p = "round" + std::to_string(r) + ".";
      Rows C2(nc), S2(ns), U2(nu);
      for (std::size_t c = 0; c < nc; ++c) {
        std::vector<std::vector<double>> lits;
        for (const auto& [cl, lit] : g.clause_edges)
          if (cl == c) lits.push_back(U[lit]);
        C2[c] = relu(add({mat(p + "clause.self", C[c]), mat(p + "clause.literal", mean(lits)),
                          get(p + "clause.bias")}));
      }
      for (std::size_t s = 0; s < ns; ++s) {
        std::vector<std::vector<double>> apps;
        for (const auto& e : g.app_edges)
          if (e.head == s) apps.push_back(U[e.result]);
        S2[s] = relu(add({mat(p + "symbol.self", S[s]), mat(p + "symbol.app", mean(apps)),
                          get(p + "symbol.bias")}));
      }
      for (std::size_t u = 0; u < nu; ++u) {
        std::vector<std::vector<double>> heads, a1, a2, a3, parents, clauses, pol;
        for (const auto& e : g.app_edges) {
          if (e.result == u) {
            heads.push_back(S[e.head]);
            for (std::size_t k = 0; k < e.args.size(); ++k)
              (k == 0 ? a1 : k == 1 ? a2 : a3).push_back(U[e.args[k]]);
            if (e.polarity > 0) pol.push_back(get(p + "term.positive"));
            if (e.polarity < 0) pol.push_back(get(p + "term.negative"));
            if (e.polarity == 0) pol.push_back(std::vector<double>(dim_, 0.0));
          }
          for (auto a : e.args)
            if (a == u) parents.push_back(U[e.result]);
        }
        for (const auto& [cl, lit] : g.clause_edges)
          if (lit == u) clauses.push_back(C[cl]);
        U2[u] = relu(add({mat(p + "term.self", U[u]), mat(p + "term.head", mean(heads)),
                          mat(p + "term.arg1", mean(a1)), mat(p + "term.arg2", mean(a2)),
                          mat(p + "term.arg3", mean(a3)), mat(p + "term.parent", mean(parents)),
                          mat(p + "term.clause", mean(clauses)), get(p + "term.bias"),
                          mean(pol)}));
      }
      C = C2;
      S = S2;
      U = U2;
    }

    std::vector<std::vector<double>> goals;
    for (std::size_t c = 0; c < nc; ++c)
      if (g.clause_roles[c] == ClauseNodeRole::kGoal) goals.push_back(C[c]);
    const auto goal = mean(goals);
    std::vector<double> out;
    const auto& hw = get("head.hidden");
    const auto& hb = get("head.hidden_bias");
    const auto& ow = get("head.out");
    const double ob = get("head.out_bias")[0];
    for (std::size_t c = 0; c < nc; ++c) {
      if (g.clause_roles[c] != ClauseNodeRole::kQuery) continue;
      std::vector<double> z = C[c];
      z.insert(z.end(), goal.begin(), goal.end());
      double s = ob;
      for (std::size_t i = 0; i < dim_; ++i) {
        double h = hb[i];
        for (std::size_t j = 0; j < 2 * dim_; ++j) h += hw[i * 2 * dim_ + j] * z[j];
        s += ow[i] * std::max(0.0, h);
      }
      out.push_back(s);
    }
    return out;
  }

 private:
  std::vector<double> get(const std::string& name) const {
    const auto& f = tensors_.at(name);
    return std::vector<double>(f.begin(), f.end());
  }

  std::vector<double> mat(const std::string& name, const std::vector<double>& x) const {
    const auto& m = tensors_.at(name);
    std::vector<double> y(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) y[i] += static_cast<double>(m[i * dim_ + j]) * x[j];
    return y;
  }

  std::vector<double> mean(const std::vector<std::vector<double>>& xs) const {
    std::vector<double> m(dim_, 0.0);
    if (xs.empty()) return m;
    for (const auto& x : xs)
      for (std::size_t i = 0; i < dim_; ++i) m[i] += x[i];
    for (auto& v : m) v /= static_cast<double>(xs.size());
    return m;
  }

  static std::vector<double> add(const std::vector<std::vector<double>>& xs) {
    std::vector<double> s(xs.front().size(), 0.0);
    for (const auto& x : xs)
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += x[i];
    return s;
  }

  static std::vector<double> relu(std::vector<double> x) {
    for (auto& v : x) v = std::max(0.0, v);
    return x;
  }

  std::size_t dim_, rounds_;
  std::map<std::string, std::vector<float>> tensors_;
};

}  // namespace oracle
