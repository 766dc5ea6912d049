#include "anon_enigma/saturation.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include "anon_enigma/substitution.hpp"

namespace anon_enigma {

std::string_view to_string(ProofStatus s) {
  switch (s) {
    case ProofStatus::kProved: return "proved";
    case ProofStatus::kSaturated: return "saturated";
    case ProofStatus::kResourceOut: return "resource_out";
  }
  return "resource_out";
}

std::string_view to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::kBase: return "base";
    case SelectionMode::kSolo: return "solo";
    case SelectionMode::kCooperative: return "coop";
  }
  return "base";
}

std::string_view to_string(WeightFunction w) {
  switch (w) {
    case WeightFunction::kSymbolCount: return "symbols";
    case WeightFunction::kFifo: return "fifo";
  }
  return "fifo";
}

void Strategy::validate() const {
  if (queues.empty()) throw std::invalid_argument("strategy needs at least one queue");
  for (const auto& q : queues)
    if (q.ratio < 1) throw std::invalid_argument("queue ratios must be >= 1");
  if (mode != SelectionMode::kBase && !evaluator)
    throw std::invalid_argument("solo and cooperative modes require an evaluator");
}

std::optional<ClauseId> ProofResult::empty_clause() const {
  if (status != ProofStatus::kProved || proof.empty()) return std::nullopt;
  return proof.back();
}

namespace {

using Key = std::vector<Literal>;

/// Enumerates resolvents and factors; `emit` returns false to stop early.
class InferenceGenerator {
 public:
  using Emit = std::function<bool(std::vector<Literal>, std::vector<ClauseId>, InferenceRule)>;

  explicit InferenceGenerator(Emit emit) : emit_(std::move(emit)) {}

  // Returns false when emission was stopped.
  bool run(const Clause& given, std::span<const Clause* const> partners) {
    if (!factors(given)) return false;
    for (const Clause* partner : partners)
      if (!resolvents(given, *partner)) return false;
    return true;
  }

 private:
  bool factors(const Clause& g) {
    const auto& lits = g.literals;
    for (std::size_t i = 0; i < lits.size(); ++i) {
      for (std::size_t j = i + 1; j < lits.size(); ++j) {
        if (lits[i].positive != lits[j].positive || lits[i].atom.head() != lits[j].atom.head())
          continue;
        auto sigma = unify(lits[i].atom, lits[j].atom);
        if (!sigma) continue;
        std::vector<Literal> out;
        out.reserve(lits.size() - 1);
        for (std::size_t k = 0; k < lits.size(); ++k)
          if (k != j) out.push_back(sigma->apply(lits[k]));
        if (!emit_(std::move(out), {g.id}, InferenceRule::kFactoring)) return false;
      }
    }
    return true;
  }

  bool resolvents(const Clause& g, const Clause& partner) {
    const VarId offset = g.variable_bound();
    std::vector<Literal> shifted;
    shifted.reserve(partner.literals.size());
    for (const auto& l : partner.literals) shifted.push_back(shift_variables(l, offset));

    std::vector<ClauseId> parents{g.id};
    if (partner.id != g.id) parents.push_back(partner.id);

    for (std::size_t i = 0; i < g.literals.size(); ++i) {
      const Literal& li = g.literals[i];
      for (std::size_t j = 0; j < shifted.size(); ++j) {
        const Literal& lj = shifted[j];
        if (li.positive == lj.positive || li.atom.head() != lj.atom.head()) continue;
        auto sigma = unify(li.atom, lj.atom);
        if (!sigma) continue;
        std::vector<Literal> out;
        out.reserve(g.literals.size() + shifted.size() - 2);
        for (std::size_t k = 0; k < g.literals.size(); ++k)
          if (k != i) out.push_back(sigma->apply(g.literals[k]));
        for (std::size_t k = 0; k < shifted.size(); ++k)
          if (k != j) out.push_back(sigma->apply(shifted[k]));
        if (!emit_(std::move(out), parents, InferenceRule::kResolution)) return false;
      }
    }
    return true;
  }

  Emit emit_;
};

Clause make_derived(ClauseId id, std::vector<Literal> literals, std::vector<ClauseId> parents,
                    InferenceRule rule) {
  Clause c;
  c.id = id;
  c.literals = normalize_variables(merge_duplicate_literals(std::move(literals)));
  // Ground clauses get a canonical literal order so permutations are duplicates.
  if (c.is_ground()) std::sort(c.literals.begin(), c.literals.end());
  c.role = ClauseRole::kDerived;
  c.parents = std::move(parents);
  c.rule = rule;
  return c;
}

class Saturator {
 public:
  Saturator(const Problem& problem, const Strategy& strategy, const Limits& limits)
      : problem_(problem), strategy_(strategy), limits_(limits) {
    for (const auto& q : strategy_.queues) {
      heaps_.emplace_back();
      for (unsigned r = 0; r < q.ratio; ++r) schedule_.push_back(heaps_.size() - 1);
    }
    if (strategy_.mode != SelectionMode::kBase) {
      session_ = strategy_.evaluator->open(problem_);
      query_size_ = std::max<std::size_t>(1, session_->query_size());
    }
  }

  ProofResult run() {
    const auto start = std::chrono::steady_clock::now();
    run_loop(start);
    result_.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::move(result_);
  }

 private:
  void run_loop(std::chrono::steady_clock::time_point start) {
    for (const auto& input : problem_.clauses) {
      Clause c = input;
      c.id = static_cast<ClauseId>(result_.clauses.size());
      c.literals = normalize_variables(input.literals);
      if (c.is_empty()) {
        result_.clauses.push_back(std::move(c));
        finish_proof(result_.clauses.back().id);
        return;
      }
      keys_.insert(c.literals);
      admit(std::move(c));
    }
    score_full_batches();

    for (std::size_t iteration = 1;; ++iteration) {
      if (unprocessed_ == 0) {
        result_.status = dropped_ ? ProofStatus::kResourceOut : ProofStatus::kSaturated;
        return;
      }
      if (limits_.max_generated && result_.generated >= *limits_.max_generated) {
        result_.status = ProofStatus::kResourceOut;
        return;
      }
      if (limits_.wall_seconds &&
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >=
              *limits_.wall_seconds) {
        result_.status = ProofStatus::kResourceOut;
        return;
      }

      std::string queue;
      const ClauseId given = select(queue);
      in_unprocessed_[given] = false;
      --unprocessed_;
      result_.processed.push_back(given);
      result_.trace.push_back(TraceEntry{iteration, given, std::move(queue)});

      if (!infer(given)) return;
      score_full_batches();
    }
  }

  // Returns false when the loop must stop (proof found or cap reached).
  bool infer(ClauseId given_id) {
    std::vector<const Clause*> partners;
    partners.reserve(result_.processed.size());
    bool stop = false;
    InferenceGenerator gen([&](std::vector<Literal> lits, std::vector<ClauseId> parents,
                               InferenceRule rule) {
      ++result_.generated;
      if (lits.empty()) {
        Clause empty = make_derived(next_id(), {}, std::move(parents), rule);
        commit_staged();
        result_.clauses.push_back(std::move(empty));
        finish_proof(result_.clauses.back().id);
        stop = true;
        return false;
      }
      Clause c = make_derived(next_id(), std::move(lits), std::move(parents), rule);
      if (limits_.max_clause_symbols && c.symbol_count() > *limits_.max_clause_symbols)
        dropped_ = true;
      else if (!c.is_tautology() && keys_.insert(c.literals).second)
        admit(std::move(c));
      if (limits_.max_generated && result_.generated >= *limits_.max_generated) {
        result_.status = ProofStatus::kResourceOut;
        stop = true;
        return false;
      }
      return true;
    });
    // The given clause is copied since admitting clauses may reallocate storage.
    const Clause given = result_.clauses[given_id];
    for (ClauseId id : result_.processed) partners.push_back(&result_.clauses[id]);
    // Partners stay valid: admit() is deferred until after generation.
    deferred_ = true;
    gen.run(given, partners);
    commit_staged();
    return !stop;
  }

  void commit_staged() {
    deferred_ = false;
    std::vector<Clause> staged = std::move(staged_);
    staged_.clear();
    for (auto& c : staged) admit(std::move(c));
  }

  ClauseId next_id() { return static_cast<ClauseId>(result_.clauses.size() + staged_.size()); }

  void admit(Clause c) {
    if (deferred_) {
      staged_.push_back(std::move(c));
      return;
    }
    const ClauseId id = c.id;
    const double symbols = static_cast<double>(c.symbol_count());
    result_.clauses.push_back(std::move(c));
    in_unprocessed_.resize(result_.clauses.size(), false);
    scored_.resize(result_.clauses.size(), false);
    in_unprocessed_[id] = true;
    ++unprocessed_;
    for (std::size_t q = 0; q < strategy_.queues.size(); ++q) {
      const double w = strategy_.queues[q].weight == WeightFunction::kFifo ? id : symbols;
      heaps_[q].emplace(w, id);
    }
    if (session_) {
      pending_.push_back(id);
      ++pending_live_;
    }
  }

  void finish_proof(ClauseId empty_id) {
    result_.status = ProofStatus::kProved;
    std::set<ClauseId> dag;
    std::vector<ClauseId> stack{empty_id};
    while (!stack.empty()) {
      const ClauseId id = stack.back();
      stack.pop_back();
      if (!dag.insert(id).second) continue;
      for (ClauseId p : result_.clauses[id].parents) stack.push_back(p);
    }
    result_.proof.assign(dag.begin(), dag.end());
  }

  using Entry = std::pair<double, ClauseId>;
  using Heap = std::priority_queue<Entry, std::vector<Entry>, std::greater<>>;

  std::optional<ClauseId> pop(Heap& heap) {
    while (!heap.empty()) {
      const ClauseId id = heap.top().second;
      heap.pop();
      if (in_unprocessed_[id]) return id;
    }
    return std::nullopt;
  }

  ClauseId select_base(std::string& queue) {
    for (;;) {
      const std::size_t q = schedule_[cursor_++ % schedule_.size()];
      if (auto id = pop(heaps_[q])) {
        queue = std::string(to_string(strategy_.queues[q].weight));
        if (session_ && !scored_[*id]) --pending_live_;
        return *id;
      }
    }
  }

  ClauseId select_evaluated(std::string& queue) {
    auto id = pop(eval_heap_);
    if (!id) {
      flush(std::min(query_size_, pending_live_));
      id = pop(eval_heap_);
    }
    queue = "model";
    ++result_.evaluator_selections;
    return *id;
  }

  ClauseId select(std::string& queue) {
    switch (strategy_.mode) {
      case SelectionMode::kBase:
        return select_base(queue);
      case SelectionMode::kSolo:
        return select_evaluated(queue);
      case SelectionMode::kCooperative:
        if (turn_++ % 2 == 0) return select_evaluated(queue);
        return select_base(queue);
    }
    return select_base(queue);
  }

  void score_full_batches() {
    while (session_ && pending_live_ >= query_size_) flush(query_size_);
  }

  void flush(std::size_t n) {
    if (n == 0) return;
    BatchRecord record;
    std::vector<const Clause*> queries;
    while (queries.size() < n && !pending_.empty()) {
      const ClauseId id = pending_.front();
      pending_.pop_front();
      if (!in_unprocessed_[id] || scored_[id]) continue;
      queries.push_back(&result_.clauses[id]);
      record.queries.push_back(id);
    }
    const std::size_t c = std::min(session_->context_size(), result_.processed.size());
    std::vector<const Clause*> context;
    for (std::size_t i = result_.processed.size() - c; i < result_.processed.size(); ++i)
      context.push_back(&result_.clauses[result_.processed[i]]);
    const auto weights = session_->weigh(queries, context);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      scored_[record.queries[i]] = true;
      eval_heap_.emplace(weights.at(i), record.queries[i]);
    }
    pending_live_ -= queries.size();
    record.context = context.size();
    record.terminal = queries.size() < query_size_;
    result_.batches.push_back(std::move(record));
  }

  const Problem& problem_;
  const Strategy& strategy_;
  const Limits& limits_;
  ProofResult result_;

  std::set<Key> keys_;
  std::vector<char> in_unprocessed_;
  std::vector<char> scored_;
  std::size_t unprocessed_ = 0;
  std::vector<Heap> heaps_;
  std::vector<std::size_t> schedule_;
  std::size_t cursor_ = 0;
  std::size_t turn_ = 0;

  std::unique_ptr<EvaluationSession> session_;
  std::size_t query_size_ = 1;
  std::deque<ClauseId> pending_;
  std::size_t pending_live_ = 0;
  Heap eval_heap_;

  bool deferred_ = false;
  bool dropped_ = false;
  std::vector<Clause> staged_;
};

}  // namespace

std::vector<Clause> generate_inferences(const Clause& given, std::span<const Clause> processed,
                                        std::span<const Clause> existing, ClauseId next_id) {
  std::set<Key> keys;
  for (const auto& c : existing) keys.insert(normalize_variables(c.literals));
  for (const auto& c : processed) keys.insert(normalize_variables(c.literals));
  keys.insert(normalize_variables(given.literals));

  Clause g = given;
  g.literals = normalize_variables(given.literals);
  std::vector<const Clause*> partners;
  bool has_self = false;
  for (const auto& c : processed) {
    partners.push_back(&c);
    has_self = has_self || c.id == given.id;
  }
  if (!has_self) partners.push_back(&g);

  std::vector<Clause> out;
  InferenceGenerator gen([&](std::vector<Literal> lits, std::vector<ClauseId> parents,
                             InferenceRule rule) {
    Clause c = make_derived(next_id, std::move(lits), std::move(parents), rule);
    if (!c.is_tautology() && keys.insert(c.literals).second) {
      out.push_back(std::move(c));
      ++next_id;
    }
    return true;
  });
  gen.run(g, partners);
  return out;
}

ProofResult given_clause_loop(const Problem& problem, const Strategy& strategy,
                              const Limits& limits) {
  strategy.validate();
  return Saturator(problem, strategy, limits).run();
}

TrainingSample extract_training_sample(const ProofResult& result,
                                       std::shared_ptr<const Problem> problem) {
  if (result.status != ProofStatus::kProved)
    throw NotProved("training samples need a proved result, got " +
                    std::string(to_string(result.status)));
  const std::set<ClauseId> dag(result.proof.begin(), result.proof.end());
  TrainingSample sample;
  sample.problem = std::move(problem);
  for (ClauseId id : result.processed) {
    (dag.count(id) ? sample.positives : sample.negatives).push_back(result.clauses[id]);
  }
  return sample;
}

std::string format_trace(const ProofResult& result) {
  std::ostringstream out;
  for (const auto& t : result.trace)
    out << "iter " << t.iteration << " given " << t.given << " by " << t.queue << '\n';
  return out.str();
}

std::string format_proof(const ProofResult& result, const Signature& sig) {
  std::ostringstream out;
  for (ClauseId id : result.proof) {
    const Clause& c = result.clauses[id];
    out << id << ", " << to_string(c.rule) << ", [";
    for (std::size_t i = 0; i < c.parents.size(); ++i) out << (i ? "," : "") << c.parents[i];
    out << "], " << format_literals(c.literals, sig) << '\n';
  }
  return out.str();
}

}  // namespace anon_enigma
