#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "anon_enigma/clause.hpp"
#include "anon_enigma/rng.hpp"

namespace anon_enigma {

// Problem generators. All symbol names are drawn at random so that only the
// structure carries over between instances. Every generated problem is
// unsatisfiable by construction.

struct ReachabilityParams {
  unsigned min_path = 3, max_path = 7;       // edges on the goal path
  unsigned min_extra = 2, max_extra = 6;     // additional nodes
  unsigned min_noise = 2, max_noise = 6;     // additional edges
  bool arithmetic_noise = true;              // successor/sum closure unrelated to the goal
};

// reach(start), reach(X) & edge(X,Y) -> reach(Y), edge facts, ~reach(target).
std::string reachability_text(Rng& rng, const ReachabilityParams& params = {});

// even/odd over a successor chain, with a distractor relation.
std::string parity_text(Rng& rng);

struct CounterParams {
  unsigned min_steps = 6, max_steps = 16;
};

// Modular counter over a successor term (state_{i+1 mod m}(s(X)) from
// state_i(X)) next to unrelated order, sum and tree theories.
std::string counter_text(Rng& rng, const CounterParams& params = {});

// Propositional implication chain with unrelated side clauses.
std::string implication_text(Rng& rng);

// Two-sorted membership puzzle: subset chains over sets and elements.
std::string membership_text(Rng& rng);

std::vector<std::shared_ptr<const Problem>> reachability_family(
    std::size_t count, std::uint64_t seed, const ReachabilityParams& params = {});

std::vector<std::shared_ptr<const Problem>> counter_family(std::size_t count, std::uint64_t seed,
                                                           const CounterParams& params = {});

// Round-robin over all generators.
std::vector<std::shared_ptr<const Problem>> mixed_corpus(std::size_t count, std::uint64_t seed);

}  // namespace anon_enigma
