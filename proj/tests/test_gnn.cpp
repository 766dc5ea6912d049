#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "anon_enigma/gnn.hpp"
#include "anon_enigma/parser.hpp"
#include "anon_enigma/rename.hpp"
#include "doctest.h"
#include "fake_evaluator.hpp"
#include "gnn_graphs.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace anon_enigma;

namespace {

std::vector<const Clause*> pointers(const std::vector<Clause>& cs) {
  std::vector<const Clause*> out;
  for (const auto& c : cs) out.push_back(&c);
  return out;
}

// Distinct subterms and literals after per-clause variable normalization.
std::size_t distinct_nodes(std::span<const Clause* const> clauses) {
  std::set<Term> terms;
  std::set<std::pair<bool, Term>> lits;
  std::function<void(const Term&)> visit = [&](const Term& t) {
    terms.insert(t);
    if (!t.is_variable())
      for (const auto& a : t.args()) visit(a);
  };
  for (const auto* c : clauses)
    for (const auto& l : normalize_variables(c->literals)) {
      lits.emplace(l.positive, l.atom);
      for (const auto& a : l.atom.args()) visit(a);
    }
  return terms.size() + lits.size();
}

std::string replace_manifest(const std::string& bytes, const std::function<void(nlohmann::json&)>& edit) {
  const auto nl = bytes.find('\n');
  auto j = nlohmann::json::parse(bytes.substr(0, nl));
  edit(j);
  return j.dump() + bytes.substr(nl);
}

}  // namespace

TEST_SUITE("hypergraph") {
  TEST_CASE("single ground unit") {
    Signature sig;
    const auto c = support::clause("p(a)", sig, 0);
    const Clause* q[] = {&c};
    const auto g = build_hypergraph(q, {}, {}, sig);
    CHECK(g.clause_ids.size() == 1);
    CHECK(g.symbols.size() == 2);
    CHECK(g.term_count == 2);
    CHECK(g.app_edges.size() == 2);
    CHECK(g.clause_edges.size() == 1);
  }

  TEST_CASE("complementary literals share the subterm") {
    Signature sig;
    const auto a = support::clause("p(a)", sig, 0), b = support::clause("~p(a)", sig, 1);
    const Clause* q[] = {&a, &b};
    const auto g = build_hypergraph(q, {}, {}, sig);
    CHECK(g.term_count == 3);
    std::set<int> polarities;
    for (const auto& e : g.app_edges) polarities.insert(e.polarity);
    CHECK(polarities == std::set<int>{-1, 0, 1});
  }

  TEST_CASE("variables are shared only after normalization") {
    Signature sig;
    const auto a = support::clause("p(X)", sig, 0), b = support::clause("p(Y) | q(Y)", sig, 1);
    const Clause* q[] = {&a, &b};
    // X and Y both normalize to the first variable.
    CHECK(build_hypergraph(q, {}, {}, sig).term_count == 3);
  }

  TEST_CASE("duplicate ids across roles") {
    Signature sig;
    const auto a = support::clause("p(a)", sig, 0);
    const Clause* q[] = {&a};
    CHECK_THROWS_AS(build_hypergraph(q, q, {}, sig), std::invalid_argument);
  }

  TEST_CASE("node count equals distinct subterms and literals") {
    for (const auto& g : support::random_graphs(20, 3)) {
      std::vector<const Clause*> all = g.queries;
      all.insert(all.end(), g.context.begin(), g.context.end());
      all.insert(all.end(), g.goal.begin(), g.goal.end());
      CHECK(g.graph.term_count == distinct_nodes(all));
      CHECK_NOTHROW(tensorize(g.graph).validate());
    }
  }

  TEST_CASE("renaming leaves the tensor graph unchanged") {
    for (const auto& p : mixed_corpus(10, 6)) {
      const auto [q, rho] = rename_problem(*p, 17);
      const auto ps = pointers(p->clauses), qs = pointers(q.clauses);
      CHECK(tensorize(build_hypergraph(ps, {}, {}, p->signature)) ==
            tensorize(build_hypergraph(qs, {}, {}, q.signature)));
    }
  }

  TEST_CASE("tensor validation") {
    Signature sig;
    const auto a = support::clause("p(a)", sig, 0);
    const Clause* q[] = {&a};
    auto t = tensorize(build_hypergraph(q, {}, {}, sig));
    t.app_result[0] = 99;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  }
}

TEST_SUITE("gnn forward") {
  TEST_CASE("zero weights give the head bias everywhere") {
    auto w = GnnWeights::zeros();
    w.head_out_bias = 0.25;
    for (const auto& g : support::random_graphs(8, 12)) {
      const auto s = forward(w, tensorize(g.graph));
      REQUIRE(s.size() == g.queries.size());
      for (double v : s) CHECK(v == 0.25);
    }
  }

  TEST_CASE("matches the scalar reference") {
    std::size_t graphs = 0;
    for (std::uint64_t seed : {1u, 2u}) {
      const auto w = GnnWeights::random(seed, 8, 3, 0.4);
      const oracle::ScalarGnn ref(w);
      for (const auto& g : support::random_graphs(10, seed + 40)) {
        const auto fast = forward(w, tensorize(g.graph));
        const auto slow = ref.scores(g.graph);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t i = 0; i < fast.size(); ++i) CHECK(std::abs(fast[i] - slow[i]) <= 1e-6);
        ++graphs;
      }
    }
    CHECK(graphs == 20);
  }

  TEST_CASE("default size matches the scalar reference") {
    const auto w = GnnWeights::random(5);
    const oracle::ScalarGnn ref(w);
    for (const auto& g : support::random_graphs(3, 77)) {
      const auto fast = forward(w, tensorize(g.graph));
      const auto slow = ref.scores(g.graph);
      for (std::size_t i = 0; i < fast.size(); ++i) CHECK(std::abs(fast[i] - slow[i]) <= 1e-6);
    }
  }

  TEST_CASE("query order does not change scores") {
    const auto w = GnnWeights::random(9, 16, 3);
    for (auto g : support::random_graphs(10, 5)) {
      auto score_by_id = [&](std::vector<const Clause*> queries) {
        const auto graph = build_hypergraph(queries, g.context, g.goal, g.problem->signature);
        const auto s = forward(w, tensorize(graph));
        std::map<ClauseId, double> out;
        std::size_t k = 0;
        for (std::size_t i = 0; i < graph.clause_ids.size(); ++i)
          if (graph.clause_roles[i] == ClauseNodeRole::kQuery) out[graph.clause_ids[i]] = s[k++];
        return out;
      };
      const auto a = score_by_id(g.queries);
      std::reverse(g.queries.begin(), g.queries.end());
      const auto b = score_by_id(g.queries);
      REQUIRE(a.size() == b.size());
      for (const auto& [id, v] : a) CHECK(std::abs(v - b.at(id)) <= 1e-5);
    }
  }

  TEST_CASE("pure") {
    const auto w = GnnWeights::random(3);
    const auto g = support::random_graphs(1, 2).front();
    const auto t = tensorize(g.graph);
    CHECK(forward(w, t) == forward(w, t));
  }

  TEST_CASE("non-finite embeddings name the round") {
    auto w = GnnWeights::random(3, 8, 3);
    w.round[1].term_bias(0) = 1e308;
    w.round[1].term_self.setConstant(1e308);
    const auto g = support::random_graphs(1, 2).front();
    CHECK_THROWS_WITH_AS(forward(w, tensorize(g.graph)), doctest::Contains("round"), GnnError);
  }
}

TEST_SUITE("weight container") {
  TEST_CASE("round trip") {
    const auto w = GnnWeights::random(4);
    const auto back = decode_container(encode_container(w));
    CHECK(back.flatten() == w.flatten());
    const auto path = std::filesystem::temp_directory_path() / "anon_enigma_rt.gnn";
    save_weights(w, path);
    CHECK(load_weights(path).flatten() == w.flatten());
    std::filesystem::remove(path);
  }

  TEST_CASE("errors are distinct") {
    const auto bytes = encode_container(GnnWeights::random(4));
    CHECK_THROWS_AS(decode_container(bytes.substr(0, bytes.size() - 4)), ContainerSizeError);
    CHECK_THROWS_AS(decode_container(replace_manifest(bytes, [](auto& j) { j["dim"] = 64; })),
                    ContainerShapeError);
    CHECK_THROWS_AS(decode_container(replace_manifest(bytes, [](auto& j) { j["version"] = 2; })),
                    ContainerVersionError);
    auto nan = bytes;
    const std::uint32_t bits = 0x7fc00000u;
    for (int b = 0; b < 4; ++b) nan[nan.size() - 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
    CHECK_THROWS_AS(decode_container(nan), ContainerValueError);
    CHECK_THROWS_AS(decode_container("no newline"), ContainerError);
  }

  TEST_CASE("layout covers every value") {
    const auto w = GnnWeights::random(1, 4, 2);
    std::size_t n = 0;
    for (const auto& t : GnnWeights::layout(4, 2)) {
      std::size_t k = 1;
      for (auto s : t.shape) k *= s;
      n += k;
    }
    CHECK(n == w.flatten().size());
    CHECK(GnnWeights::unflatten(4, 2, w.flatten()).flatten() == w.flatten());
  }

  TEST_CASE("probe fixture") {
    const auto dir = support::data_dir() / "gnn";
    const auto w = load_weights(dir / "probe.gnn");
    std::ifstream in(dir / "probe.json");
    const auto probe = nlohmann::json::parse(in);
    Problem p = parse_problem(probe.at("problem").get<std::string>());
    std::vector<Clause> qs, cs;
    ClauseId id = static_cast<ClauseId>(p.clauses.size());
    for (const auto& s : probe.at("queries")) {
      qs.push_back(support::clause(s.get<std::string>(), p.signature, id++));
    }
    for (const auto& s : probe.at("context")) cs.push_back(support::clause(s.get<std::string>(), p.signature, id++));
    const auto scores = forward(w, tensorize(build_hypergraph(pointers(qs), pointers(cs),
                                                              p.goal(), p.signature)));
    const auto expect = probe.at("scores").get<std::vector<double>>();
    REQUIRE(scores.size() == expect.size());
    for (std::size_t i = 0; i < scores.size(); ++i) CHECK(std::abs(scores[i] - expect[i]) <= 1e-5);
  }
}

TEST_SUITE("gnn evaluator") {
  TEST_CASE("batches stay within q + c + goal clause nodes") {
    const auto w = std::make_shared<const GnnWeights>(GnnWeights::random(2, 8, 2));
    for (auto [q, c] : {std::pair<std::size_t, std::size_t>{4, 3}, {16, 8}}) {
      Strategy s;
      s.mode = SelectionMode::kSolo;
      s.evaluator = std::make_shared<GnnEvaluator>(w, q, c);
      for (const auto& p : mixed_corpus(5, 2)) {
        const auto r = given_clause_loop(*p, s, Limits{1500, std::nullopt});
        std::set<ClauseId> seen;
        for (const auto& b : r.batches) {
          CHECK(b.queries.size() <= q);
          CHECK(b.context <= c);
          for (auto id : b.queries) CHECK(seen.insert(id).second);
        }
        for (std::size_t i = 0; i < r.trace.size(); ++i) CHECK(seen.count(r.trace[i].given));
      }
    }
  }
}
