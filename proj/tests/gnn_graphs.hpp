#pragma once

#include <vector>

#include "anon_enigma/corpus.hpp"
#include "anon_enigma/gnn.hpp"

namespace support {

struct GraphCase {
  std::shared_ptr<const anon_enigma::Problem> problem;
  std::vector<anon_enigma::Clause> clauses;  // derived clauses, owning storage
  std::vector<const anon_enigma::Clause*> queries, context, goal;
  anon_enigma::Hypergraph graph;
};

// Small graphs mixing input and derived clauses from a short base run.
inline std::vector<GraphCase> random_graphs(std::size_t count, std::uint64_t seed) {
  using namespace anon_enigma;
  std::vector<GraphCase> out;
  Rng rng(seed);
  const auto problems = mixed_corpus(count, seed);
  for (const auto& p : problems) {
    GraphCase g;
    g.problem = p;
    const auto r = given_clause_loop(*p, {}, Limits{40 + rng.below(80), std::nullopt});
    for (const auto& c : r.clauses)
      if (c.role != ClauseRole::kNegatedConjecture && !c.is_empty() && rng.coin(0.5))
        g.clauses.push_back(c);
    for (const auto& c : g.clauses) {
      if (g.queries.size() < 1 + rng.below(12))
        g.queries.push_back(&c);
      else if (g.context.size() < rng.below(6))
        g.context.push_back(&c);
    }
    if (g.queries.empty()) g.queries.push_back(&p->clauses[0]);
    for (const auto* c : p->goal()) g.goal.push_back(c);
    g.graph = build_hypergraph(g.queries, g.context, g.goal, p->signature);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace support
