#include "anon_enigma/driver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"

#include "anon_enigma/features.hpp"
#include "anon_enigma/parser.hpp"
#include "anon_enigma/rng.hpp"

namespace anon_enigma {

using nlohmann::json;

Limits abstract_limits(std::size_t cap) { return Limits{cap, std::nullopt}; }

Limits real_time_limits(double seconds) { return Limits{std::nullopt, seconds}; }

namespace {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : workers) t.join();
}

std::vector<ProblemPtr> sorted_by_name(std::span<const ProblemPtr> problems) {
  std::vector<ProblemPtr> out(problems.begin(), problems.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const ProblemPtr& a, const ProblemPtr& b) { return a->name < b->name; });
  return out;
}

}  // namespace

EvalOutput evaluate_strategy(std::span<const ProblemPtr> problems, const Strategy& strategy,
                             const Limits& limits, std::size_t jobs) {
  if (problems.empty()) throw std::invalid_argument("evaluate_strategy: empty corpus");
  strategy.validate();
  const auto ordered = sorted_by_name(problems);
  std::vector<EvalRecord> records(ordered.size());
  std::vector<std::optional<TrainingSample>> samples(ordered.size());

  parallel_for(ordered.size(), jobs, [&](std::size_t i) {
    const auto& p = ordered[i];
    auto& r = records[i];
    r.problem = p->name;
    r.strategy = strategy.id;
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto result = given_clause_loop(*p, strategy, limits);
      r.status = std::string(to_string(result.status));
      r.processed = result.processed.size();
      r.generated = result.generated;
      r.seconds = result.seconds;
      if (result.status == ProofStatus::kProved) samples[i] = extract_training_sample(result, p);
    } catch (const std::exception& e) {
      r.status = "error";
      r.error = e.what();
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  });

  EvalOutput out;
  out.records = std::move(records);
  for (auto& s : samples)
    if (s) out.samples.push_back(std::move(*s));
  return out;
}

std::vector<ProblemPtr> load_corpus(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".p") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<ProblemPtr> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(std::make_shared<const Problem>(load_problem(f)));
  return out;
}

// Files ----------------------------------------------------------------------------

void write_records_csv(std::ostream& out, std::span<const EvalRecord> records) {
  out << "problem,strategy,status,processed,generated,seconds\n";
  for (const auto& r : records) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.3f", r.seconds);
    out << r.problem << ',' << r.strategy << ',' << r.status << ',' << r.processed << ','
        << r.generated << ',' << secs << '\n';
  }
}

std::vector<EvalRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "problem,strategy,status,processed,generated,seconds")
    throw std::runtime_error("records csv: bad header");
  std::vector<EvalRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 6)
      throw std::runtime_error("records csv: line " + std::to_string(lineno) + ": expected 6 fields");
    EvalRecord r;
    r.problem = cells[0];
    r.strategy = cells[1];
    r.status = cells[2];
    try {
      r.processed = std::stoull(cells[3]);
      r.generated = std::stoull(cells[4]);
      r.seconds = std::stod(cells[5]);
    } catch (const std::exception&) {
      throw std::runtime_error("records csv: line " + std::to_string(lineno) + ": bad number");
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

json clause_strings(std::span<const Clause> clauses, const Signature& sig) {
  json arr = json::array();
  for (const auto& c : clauses) arr.push_back(format_literals(c.literals, sig));
  return arr;
}

std::vector<Clause> parse_clauses(const json& arr, const Problem& p, ClauseId& next_id) {
  std::vector<Clause> out;
  for (const auto& text : arr) {
    Signature sig = p.signature;
    Clause c;
    c.literals = parse_literals(text.get<std::string>(), sig);
    if (sig.size() != p.signature.size())
      throw std::runtime_error("samples: clause '" + text.get<std::string>() +
                               "' uses symbols unknown to problem " + p.name);
    c.id = next_id++;
    c.role = ClauseRole::kDerived;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

void write_samples_jsonl(std::ostream& out, std::span<const TrainingSample> samples) {
  for (const auto& s : samples) {
    const auto& p = *s.problem;
    std::vector<Clause> goal;
    for (const auto* c : p.goal()) goal.push_back(*c);
    json j = {{"problem", p.name},
              {"goal", clause_strings(goal, p.signature)},
              {"pos", clause_strings(s.positives, p.signature)},
              {"neg", clause_strings(s.negatives, p.signature)}};
    out << j.dump() << '\n';
  }
}

std::vector<TrainingSample> read_samples_jsonl(
    std::istream& in, const std::function<ProblemPtr(const std::string&)>& lookup) {
  std::vector<TrainingSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto name = j.at("problem").get<std::string>();
      auto problem = lookup(name);
      if (!problem) throw std::runtime_error("unknown problem '" + name + "'");
      TrainingSample s;
      s.problem = problem;
      auto next_id = static_cast<ClauseId>(problem->clauses.size());
      s.positives = parse_clauses(j.at("pos"), *problem, next_id);
      s.negatives = parse_clauses(j.at("neg"), *problem, next_id);
      out.push_back(std::move(s));
    } catch (const ParseError& e) {
      throw std::runtime_error("samples: line " + std::to_string(lineno) + ": " + e.what());
    } catch (const json::exception& e) {
      throw std::runtime_error("samples: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::size_t SampleArchive::add(const TrainingSample& sample) {
  auto [it, inserted] = by_problem_.try_emplace(sample.problem->name);
  auto& e = it->second;
  if (inserted) e.sample.problem = sample.problem;
  std::size_t added = 0;
  auto merge = [&](std::span<const Clause> in, std::set<std::vector<Literal>>& seen,
                   std::vector<Clause>& dst) {
    for (const auto& c : in)
      if (seen.insert(normalize_variables(c.literals)).second) {
        dst.push_back(c);
        ++added;
      }
  };
  merge(sample.positives, e.pos, e.sample.positives);
  merge(sample.negatives, e.neg, e.sample.negatives);
  clauses_ += added;
  return added;
}

std::vector<TrainingSample> SampleArchive::samples() const {
  std::vector<TrainingSample> out;
  out.reserve(by_problem_.size());
  for (const auto& [name, e] : by_problem_) out.push_back(e.sample);
  return out;
}

std::vector<ProblemPtr> dev_subset(std::span<const ProblemPtr> corpus, std::uint64_t seed,
                                   double fraction) {
  auto ordered = sorted_by_name(corpus);
  if (ordered.empty()) return ordered;
  Rng rng(seed);
  rng.shuffle(ordered);
  auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(ordered.size())));
  n = std::clamp<std::size_t>(n, 1, ordered.size());
  ordered.resize(n);
  return sorted_by_name(ordered);
}

// Grid search ------------------------------------------------------------------------

namespace {

Strategy guided(const Strategy& base, std::shared_ptr<const ClauseEvaluator> evaluator,
                SelectionMode mode, const std::string& model) {
  Strategy s = base;
  s.mode = mode;
  s.evaluator = std::move(evaluator);
  s.id = mode == SelectionMode::kCooperative ? base.id + "+" + model : model;
  return s;
}

}  // namespace

GridResult grid_search(std::span<const Candidate> candidates, std::span<const ProblemPtr> dev,
                       const Strategy& base, const Limits& limits, std::size_t jobs) {
  if (candidates.empty()) throw std::invalid_argument("grid_search: empty grid");
  GridResult out;
  std::vector<std::shared_ptr<const ClauseEvaluator>> evaluators(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    CandidateResult r;
    r.label = candidates[i].label;
    try {
      evaluators[i] = candidates[i].make();
      const auto eval =
          evaluate_strategy(dev, guided(base, evaluators[i], SelectionMode::kCooperative, r.label),
                            limits, jobs);
      for (const auto& rec : eval.records) {
        r.solved += rec.solved();
        r.processed += rec.processed;
      }
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
      evaluators[i].reset();
    }
    out.candidates.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& r = out.candidates[i];
    if (r.failed) continue;
    if (!out.best) {
      out.best = i;
      continue;
    }
    const auto& b = out.candidates[*out.best];
    const auto key = std::make_tuple(-static_cast<long long>(r.solved), r.processed,
                                     std::cref(candidates[i].key), std::cref(r.label));
    const auto best = std::make_tuple(-static_cast<long long>(b.solved), b.processed,
                                      std::cref(candidates[*out.best].key), std::cref(b.label));
    if (key < best) out.best = i;
  }
  if (out.best) out.best_evaluator = evaluators[*out.best];
  return out;
}

std::vector<GbdtParams> gbdt_level_grid() {
  std::vector<GbdtParams> out;
  for (unsigned d : {9u, 12u, 16u}) {
    GbdtParams p;
    p.growth = TreeGrowth::kLevel;
    p.depth = d;
    out.push_back(p);
  }
  return out;
}

std::vector<GbdtParams> gbdt_leaf_grid() {
  std::vector<GbdtParams> out;
  for (unsigned d : {10u, 20u, 30u, 40u})
    for (unsigned l : {1200u, 1500u, 1800u}) {
      GbdtParams p;
      p.growth = TreeGrowth::kLeaf;
      p.depth = d;
      p.leaves = l;
      out.push_back(p);
    }
  return out;
}

std::string GnnConfig::label() const {
  return "e" + std::to_string(epoch) + ",q" + std::to_string(query) + ",c" +
         std::to_string(context);
}

std::vector<GnnConfig> gnn_grid() {
  std::vector<GnnConfig> out;
  for (unsigned e : {10u, 20u, 50u, 75u, 100u})
    for (std::size_t q : {64u, 128u, 192u, 256u, 512u})
      for (std::size_t c : {512u, 768u, 1024u, 1536u}) out.push_back({e, q, c});
  return out;
}

// Model families ----------------------------------------------------------------------

std::vector<Candidate> GbdtFamily::candidates(const SampleArchive& archive, std::size_t) {
  if (grid_.empty()) throw std::invalid_argument("gbdt family: empty grid");
  const auto samples = archive.samples();
  data_ = std::make_shared<const Dataset>(
      build_dataset(samples, grid_.front().anonymize, grid_.front().hash_base));
  std::vector<Candidate> out;
  for (const auto& params : grid_) {
    Candidate c;
    c.label = params.label();
    c.key = {static_cast<double>(params.growth), static_cast<double>(params.depth),
             static_cast<double>(params.leaves), params.eta, static_cast<double>(params.rounds)};
    c.make = [data = data_, params]() -> std::shared_ptr<const ClauseEvaluator> {
      auto model = std::make_shared<const GbdtModel>(train_gbdt(*data, params));
      return std::make_shared<const GbdtEvaluator>(model);
    };
    out.push_back(std::move(c));
  }
  return out;
}

std::optional<ClassifierRates> GbdtFamily::rates(const ClauseEvaluator& evaluator,
                                                 std::span<const TrainingSample> samples) const {
  const auto* g = dynamic_cast<const GbdtEvaluator*>(&evaluator);
  if (!g || samples.empty()) return std::nullopt;
  const auto& params = g->model().params();
  return evaluate_classifier(g->model(), build_dataset(samples, params.anonymize, params.hash_base));
}

std::vector<Candidate> GnnFamily::candidates(const SampleArchive& archive, std::size_t iteration) {
  if (grid_.empty()) throw std::invalid_argument("gnn family: empty grid");
  const auto dir = trainer_(archive, iteration);
  using Cache = std::map<unsigned, std::shared_ptr<const GnnWeights>>;
  auto cache = std::make_shared<Cache>();
  std::vector<Candidate> out;
  for (const auto& cfg : grid_) {
    Candidate c;
    c.label = cfg.label();
    c.key = {static_cast<double>(cfg.epoch), static_cast<double>(cfg.query),
             static_cast<double>(cfg.context)};
    c.make = [dir, cfg, cache]() -> std::shared_ptr<const ClauseEvaluator> {
      auto& w = (*cache)[cfg.epoch];
      if (!w)
        w = std::make_shared<const GnnWeights>(
            load_weights(dir / ("epoch-" + std::to_string(cfg.epoch) + ".gnn")));
      return std::make_shared<const GnnEvaluator>(w, cfg.query, cfg.context);
    };
    out.push_back(std::move(c));
  }
  return out;
}

// Learning loop ---------------------------------------------------------------------

std::vector<EvalRecord> LoopReport::all_records() const {
  std::vector<EvalRecord> out = base;
  for (const auto& it : iterations) {
    out.insert(out.end(), it.coop.begin(), it.coop.end());
    out.insert(out.end(), it.solo.begin(), it.solo.end());
  }
  return out;
}

LoopReport learning_loop(std::span<const ProblemPtr> corpus, const Strategy& base,
                         ModelFamily& family, const LoopConfig& config) {
  if (config.iterations < 1) throw std::invalid_argument("learning_loop: iterations must be >= 1");
  LoopReport report;
  const auto dev = dev_subset(corpus, config.seed, config.dev_fraction);

  auto initial = evaluate_strategy(corpus, base, config.limits, config.jobs);
  report.base = std::move(initial.records);
  if (initial.samples.empty()) throw LoopError("learning_loop: base strategy solved nothing");

  SampleArchive archive;
  std::set<std::string> solved;
  for (const auto& s : initial.samples) {
    archive.add(s);
    solved.insert(s.problem->name);
  }
  report.initial_archive_clauses = archive.clause_count();

  const std::string prefix = family.name() == "gnn" ? "N" : "D";
  for (std::size_t i = 0; i < config.iterations; ++i) {
    IterationReport it;
    it.index = i;
    it.model = prefix + std::to_string(i);
    const auto candidates = family.candidates(archive, i);
    it.grid = grid_search(candidates, dev, base, config.limits, config.jobs);
    if (!it.grid.best) throw LoopError("learning_loop: no grid configuration trained in iteration " +
                                       std::to_string(i));
    it.winner = it.grid.candidates[*it.grid.best].label;
    it.evaluator = it.grid.best_evaluator;

    auto coop = evaluate_strategy(
        corpus, guided(base, it.evaluator, SelectionMode::kCooperative, it.model), config.limits,
        config.jobs);
    auto solo = evaluate_strategy(corpus, guided(base, it.evaluator, SelectionMode::kSolo, it.model),
                                  config.limits, config.jobs);

    std::vector<TrainingSample> fresh;
    for (auto* batch : {&coop.samples, &solo.samples})
      for (const auto& s : *batch)
        if (!solved.count(s.problem->name)) fresh.push_back(s);
    it.rates = family.rates(*it.evaluator, fresh);

    for (auto* batch : {&coop.samples, &solo.samples})
      for (const auto& s : *batch) {
        archive.add(s);
        solved.insert(s.problem->name);
      }
    it.archive_clauses = archive.clause_count();
    it.coop = std::move(coop.records);
    it.solo = std::move(solo.records);
    report.iterations.push_back(std::move(it));
  }
  return report;
}

// Portfolio analysis ----------------------------------------------------------------

std::vector<CoverStep> greedy_cover(const std::map<std::string, std::set<std::string>>& solved,
                                    std::size_t max_steps) {
  std::vector<CoverStep> out;
  std::set<std::string> covered;
  std::set<std::string> used;
  while (out.size() < max_steps) {
    const std::string* pick = nullptr;
    std::size_t best = 0;
    for (const auto& [id, problems] : solved) {
      if (used.count(id)) continue;
      std::size_t gain = 0;
      for (const auto& p : problems) gain += !covered.count(p);
      if (gain > best) {
        best = gain;
        pick = &id;
      }
    }
    if (!pick) break;
    used.insert(*pick);
    covered.insert(solved.at(*pick).begin(), solved.at(*pick).end());
    out.push_back({*pick, best, covered.size()});
  }
  return out;
}

std::map<std::string, std::set<std::string>> solved_sets(std::span<const EvalRecord> records) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& r : records) {
    auto& set = out[r.strategy];
    if (r.solved()) set.insert(r.problem);
  }
  return out;
}

CollisionReport collision_report(std::span<const TrainingSample> samples, bool anonymize,
                                 std::uint32_t base) {
  // Distinct clauses are keyed by their named, variable-normalized text.
  std::map<std::string, SparseVector> clauses;
  for (const auto& s : samples) {
    const auto& sig = s.problem->signature;
    for (const auto* set : {&s.positives, &s.negatives})
      for (const auto& c : *set) {
        const auto lits = normalize_variables(c.literals);
        auto text = format_literals(lits, sig);
        if (!clauses.count(text))
          clauses.emplace(std::move(text), clause_vector(lits, sig, anonymize, base));
      }
  }
  std::map<std::vector<std::pair<std::uint32_t, double>>, std::size_t> groups;
  for (const auto& [text, v] : clauses) ++groups[v.entries()];
  CollisionReport r;
  r.clauses = clauses.size();
  for (const auto& [v, n] : groups)
    if (n > 1) r.colliding += n;
  return r;
}

}  // namespace anon_enigma
