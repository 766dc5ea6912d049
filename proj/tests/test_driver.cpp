#include <filesystem>
#include <fstream>
#include <sstream>

#include "anon_enigma/corpus.hpp"
#include "anon_enigma/driver.hpp"
#include "doctest.h"
#include "fake_evaluator.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace anon_enigma;

namespace {

const char* kUnprovable = "cnf(a,axiom,p(a)).\ncnf(g,negated_conjecture,~q(a)).";
const char* kDiverging =
    "cnf(z,axiom,n(z)).\ncnf(s,axiom,~n(X) | n(s(X))).\ncnf(g,negated_conjecture,~n(c)).";

std::vector<ProblemPtr> three_problems() {
  return {support::problem("cnf(a,axiom,p(a)).\ncnf(g,negated_conjecture,~p(X)).", "one"),
          support::problem(kUnprovable, "two"),
          support::problem(
              "cnf(a,axiom,p(a)).\ncnf(b,axiom,~p(X) | q(X)).\ncnf(g,negated_conjecture,~q(a)).",
              "three")};
}

std::map<std::string, std::set<std::string>> random_sets(Rng& rng, std::size_t strategies,
                                                         std::size_t problems) {
  std::map<std::string, std::set<std::string>> out;
  for (std::size_t s = 0; s < strategies; ++s) {
    auto& set = out["S" + std::to_string(s)];
    for (std::size_t p = 0; p < problems; ++p)
      if (rng.coin(0.3)) set.insert("p" + std::to_string(p));
  }
  return out;
}

TrainingSample sample_of(const ProblemPtr& p, std::vector<std::string> pos) {
  TrainingSample s;
  s.problem = p;
  // Symbols must already occur in the problem.
  Signature sig = p->signature;
  ClauseId id = 100;
  for (const auto& text : pos) s.positives.push_back(support::clause(text, sig, id++));
  REQUIRE(sig.size() == p->signature.size());
  return s;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("default limits") {
    CHECK(abstract_limits().max_generated == 5000u);
    CHECK_FALSE(abstract_limits().wall_seconds);
    CHECK(real_time_limits().wall_seconds == 10.0);
    CHECK_FALSE(real_time_limits().max_generated);
  }

  TEST_CASE("counting contract") {
    const auto ps = three_problems();
    const auto out = evaluate_strategy(ps, {}, abstract_limits());
    CHECK(out.records.size() == 3);
    CHECK(out.samples.size() == 2);
    CHECK(out.records[0].problem == "one");
    CHECK(out.records[1].problem == "three");
    CHECK(out.records[2].problem == "two");
    CHECK(out.records[2].status == "saturated");
    for (const auto& r : out.records) CHECK(r.strategy == "S");
  }

  TEST_CASE("per-problem failures are recorded") {
    auto e = std::make_shared<support::FakeEvaluator>([](const Clause& c) -> double {
      if (c.name == "g") throw std::runtime_error("boom");
      return 1.0;
    });
    Strategy s;
    s.mode = SelectionMode::kSolo;
    s.evaluator = e;
    const auto out = evaluate_strategy(three_problems(), s, abstract_limits());
    REQUIRE(out.records.size() == 3);
    for (const auto& r : out.records) {
      CHECK(r.status == "error");
      CHECK(r.error.find("boom") != std::string::npos);
    }
  }

  TEST_CASE("cap respected and independent of workers") {
    std::vector<ProblemPtr> ps = mixed_corpus(12, 2);
    ps.push_back(support::problem(kDiverging, "diverge"));
    const auto one = evaluate_strategy(ps, {}, abstract_limits(700), 1);
    const auto three = evaluate_strategy(ps, {}, abstract_limits(700), 3);
    std::ostringstream a, b;
    auto zero = [](std::vector<EvalRecord> rs) {
      for (auto& r : rs) r.seconds = 0;
      return rs;
    };
    write_records_csv(a, zero(one.records));
    write_records_csv(b, zero(three.records));
    CHECK(a.str() == b.str());
    for (const auto& r : one.records) CHECK(r.generated <= 700);
    CHECK(std::any_of(one.records.begin(), one.records.end(),
                      [](const auto& r) { return r.status == "resource_out"; }));
  }

  TEST_CASE("records CSV round trip") {
    const auto out = evaluate_strategy(three_problems(), {}, abstract_limits());
    std::stringstream io;
    write_records_csv(io, out.records);
    CHECK(io.str().rfind("problem,strategy,status,processed,generated,seconds\n", 0) == 0);
    const auto back = read_records_csv(io);
    REQUIRE(back.size() == out.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].problem == out.records[i].problem);
      CHECK(back[i].status == out.records[i].status);
      CHECK(back[i].processed == out.records[i].processed);
      CHECK(back[i].generated == out.records[i].generated);
    }
  }

  TEST_CASE("samples JSONL round trip") {
    const auto corpus = mixed_corpus(10, 5);
    const auto out = evaluate_strategy(corpus, {}, abstract_limits());
    std::stringstream io;
    write_samples_jsonl(io, out.samples);
    std::map<std::string, ProblemPtr> by_name;
    for (const auto& p : corpus) by_name[p->name] = p;
    const auto back = read_samples_jsonl(io, [&](const std::string& n) { return by_name.at(n); });
    REQUIRE(back.size() == out.samples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      REQUIRE(back[i].positives.size() == out.samples[i].positives.size());
      REQUIRE(back[i].negatives.size() == out.samples[i].negatives.size());
      for (std::size_t k = 0; k < back[i].positives.size(); ++k)
        CHECK(normalize_variables(back[i].positives[k].literals) ==
              normalize_variables(out.samples[i].positives[k].literals));
    }
    std::istringstream bad(R"({"problem":"nope","goal":[],"pos":[],"neg":[]})");
    CHECK_THROWS(read_samples_jsonl(bad, [&](const std::string& n) { return by_name.at(n); }));
  }

  TEST_CASE("corpus loading") {
    const auto corpus = load_corpus(support::data_dir() / "corpus");
    CHECK(corpus.size() == 60);
    CHECK(std::is_sorted(corpus.begin(), corpus.end(),
                         [](const auto& a, const auto& b) { return a->name < b->name; }));
  }
}

TEST_SUITE("archive") {
  TEST_CASE("cumulative and deduplicated") {
    const auto corpus = mixed_corpus(10, 9);
    const auto out = evaluate_strategy(corpus, {}, abstract_limits());
    SampleArchive archive;
    std::size_t last = 0;
    for (const auto& s : out.samples) {
      archive.add(s);
      CHECK(archive.clause_count() >= last);
      last = archive.clause_count();
    }
    for (const auto& s : out.samples) CHECK(archive.add(s) == 0);
    CHECK(archive.clause_count() == last);
    CHECK(archive.samples().size() == out.samples.size());
  }
}

TEST_SUITE("grid search") {
  TEST_CASE("grids") {
    std::set<unsigned> depths;
    for (const auto& p : gbdt_level_grid()) {
      CHECK(p.growth == TreeGrowth::kLevel);
      depths.insert(p.depth);
    }
    CHECK(depths == std::set<unsigned>{9, 12, 16});
    std::set<std::pair<unsigned, unsigned>> leaf;
    for (const auto& p : gbdt_leaf_grid()) leaf.insert({p.depth, p.leaves});
    CHECK(leaf.size() == 12);
    CHECK(leaf.count({30, 1800}));
    std::set<unsigned> e;
    std::set<std::size_t> q, c;
    for (const auto& g : gnn_grid()) {
      e.insert(g.epoch);
      q.insert(g.query);
      c.insert(g.context);
    }
    CHECK(e == std::set<unsigned>{10, 20, 50, 75, 100});
    CHECK(q == std::set<std::size_t>{64, 128, 192, 256, 512});
    CHECK(*c.begin() == 512);
    CHECK(*c.rbegin() == 1536);
    CHECK(GnnConfig{}.label() == "e10,q128,c512");
  }

  TEST_CASE("failures skipped, tie broken by processed then params") {
    const auto dev = three_problems();
    auto constant = [](double w) {
      return [w] { return std::make_shared<support::FakeEvaluator>([w](const Clause&) { return w; }); };
    };
    std::vector<Candidate> cands{
        {"broken", {0}, []() -> std::shared_ptr<const ClauseEvaluator> { throw std::runtime_error("x"); }},
        {"b", {2}, constant(1.0)},
        {"a", {1}, constant(1.0)},
    };
    const auto r = grid_search(cands, dev, {}, abstract_limits());
    REQUIRE(r.candidates.size() == 3);
    CHECK(r.candidates[0].failed);
    REQUIRE(r.best);
    CHECK(r.candidates[*r.best].label == "a");
    CHECK(r.best_evaluator);
  }
}

TEST_SUITE("learning loop") {
  TEST_CASE("three GBDT iterations") {
    const auto corpus = counter_family(20, 3);
    GbdtParams p;
    p.rounds = 10;
    p.depth = 4;
    GbdtFamily family({p});
    LoopConfig config;
    config.iterations = 3;
    config.limits = abstract_limits(2000);
    config.seed = 1;
    const auto report = learning_loop(corpus, {}, family, config);
    REQUIRE(report.iterations.size() == 3);
    std::size_t last = report.initial_archive_clauses;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto& it = report.iterations[i];
      CHECK(it.model == "D" + std::to_string(i));
      CHECK(it.coop.size() == corpus.size());
      CHECK(it.solo.size() == corpus.size());
      CHECK(it.coop.front().strategy == "S+D" + std::to_string(i));
      CHECK(it.solo.front().strategy == "D" + std::to_string(i));
      CHECK(it.archive_clauses >= last);
      last = it.archive_clauses;
    }
    CHECK(report.all_records().size() == 7 * corpus.size());

    GbdtFamily again({p});
    const auto twice = learning_loop(corpus, {}, again, config);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < corpus.size(); ++k)
        CHECK(twice.iterations[i].coop[k].processed == report.iterations[i].coop[k].processed);
  }

  TEST_CASE("aborts when the base solves nothing") {
    std::vector<ProblemPtr> corpus{support::problem(kUnprovable, "u")};
    GbdtFamily family({GbdtParams{}});
    CHECK_THROWS_AS(learning_loop(corpus, {}, family, LoopConfig{}), LoopError);
  }

  TEST_CASE("dev subset is fixed and about ten percent") {
    const auto corpus = mixed_corpus(50, 1);
    const auto a = dev_subset(corpus, 4), b = dev_subset(corpus, 4);
    CHECK(a.size() == 5);
    CHECK(a == b);
    CHECK(dev_subset(std::span(corpus).first(3), 4).size() == 1);
  }
}

TEST_SUITE("greedy cover") {
  TEST_CASE("hand example") {
    const auto steps = greedy_cover({{"A", {"1", "2", "3"}}, {"B", {"3", "4"}}, {"C", {"4"}}});
    REQUIRE(steps.size() == 2);
    CHECK(steps[0].strategy == "A");
    CHECK(steps[1].strategy == "B");
    CHECK(steps[1].covered == 4);
  }

  TEST_CASE("identical sets") {
    const auto steps = greedy_cover({{"X", {"1", "2"}}, {"Y", {"1", "2"}}});
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].strategy == "X");
  }

  TEST_CASE("each step takes a best marginal gain") {
    Rng rng(13);
    for (int n = 0; n < 50; ++n) {
      const auto sets = random_sets(rng, 2 + rng.below(9), 5 + rng.below(20));
      const auto steps = greedy_cover(sets);
      std::set<std::string> used, covered;
      std::size_t last = 0;
      for (const auto& s : steps) {
        const auto best = oracle::best_marginal_gain(sets, used, covered);
        CHECK(s.gain == best);
        CHECK(s.gain > 0);
        // Smallest id among those achieving the best gain.
        for (const auto& [id, set] : sets) {
          if (used.count(id) || id >= s.strategy) continue;
          std::size_t g = 0;
          for (const auto& p : set) g += !covered.count(p);
          CHECK(g < best);
        }
        used.insert(s.strategy);
        covered.insert(sets.at(s.strategy).begin(), sets.at(s.strategy).end());
        CHECK(s.covered == covered.size());
        CHECK(s.covered >= last);
        last = s.covered;
      }
      CHECK(oracle::best_marginal_gain(sets, used, covered) == 0);
      CHECK(greedy_cover(sets, 2).size() == std::min<std::size_t>(2, steps.size()));
    }
  }

  TEST_CASE("solved sets from records") {
    std::vector<EvalRecord> rs{{"p1", "S", "proved"}, {"p2", "S", "saturated"}, {"p2", "T", "proved"}};
    const auto s = solved_sets(rs);
    CHECK(s.at("S") == std::set<std::string>{"p1"});
    CHECK(s.at("T") == std::set<std::string>{"p2"});
  }
}

TEST_SUITE("collisions") {
  TEST_CASE("distinct arities never collide") {
    const auto p = support::problem("cnf(a,axiom,q1(a) | q2(a,a) | q3(a,a,a)).", "arity");
    const auto s = sample_of(p, {"q1(a)", "q2(a,a)", "q3(a,a,a)"});
    const std::vector<TrainingSample> samples{s};
    const auto r = collision_report(samples, true);
    CHECK(r.clauses == 3);
    CHECK(r.fraction() == 0.0);
  }

  TEST_CASE("anonymization merges p(a) and q(b)") {
    const auto p = support::problem("cnf(a,axiom,p(a) | q(b)).", "pq");
    const std::vector<TrainingSample> samples{sample_of(p, {"p(a)", "q(b)"})};
    CHECK(collision_report(samples, true).colliding == 2);
    CHECK(collision_report(samples, false).colliding == 0);
  }

  TEST_CASE("variants count once") {
    const auto p = support::problem("cnf(a,axiom,p(a)).", "v");
    const std::vector<TrainingSample> samples{sample_of(p, {"p(X)", "p(Y)"})};
    CHECK(collision_report(samples, true).clauses == 1);
  }

  TEST_CASE("anonymized at least named on a corpus") {
    const auto out = evaluate_strategy(mixed_corpus(20, 1), {}, abstract_limits());
    const auto named = collision_report(out.samples, false);
    const auto anon = collision_report(out.samples, true);
    CHECK(named.clauses == anon.clauses);
    CHECK(anon.fraction() >= named.fraction());
  }
}
