// Writes or checks the GNN probe fixture: a weight container plus a small
// query/context/goal graph with its expected scores.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "anon_enigma/gnn.hpp"
#include "anon_enigma/parser.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace anon_enigma;
using nlohmann::json;

namespace {

constexpr const char* kProblem =
    "cnf(p1, axiom, parent(ann,bob)).\n"
    "cnf(p2, axiom, parent(bob,cid)).\n"
    "cnf(a1, axiom, ~parent(X,Y) | ancestor(X,Y)).\n"
    "cnf(a2, axiom, ~parent(X,Y) | ~ancestor(Y,Z) | ancestor(X,Z)).\n"
    "cnf(goal, negated_conjecture, ~ancestor(ann,cid)).\n";

const std::vector<std::string> kQueries = {
    "ancestor(ann,bob)", "ancestor(bob,cid)", "~ancestor(bob,cid)",
    "~parent(ann,X) | ancestor(ann,X)", "~parent(X,Y) | ~parent(Y,Z) | ancestor(X,Z)",
    "parent(cid,f(cid))"};
const std::vector<std::string> kContext = {"parent(ann,bob)", "~parent(X,Y) | ancestor(X,Y)"};

std::vector<double> probe_scores(const GnnWeights& w, const json& fixture) {
  auto problem = parse_problem(fixture.at("problem").get<std::string>(), "probe");
  std::vector<Clause> clauses;
  auto next = static_cast<ClauseId>(problem.clauses.size());
  auto read = [&](const json& arr) {
    std::vector<std::size_t> idx;
    for (const auto& t : arr) {
      Clause c;
      c.id = next++;
      c.role = ClauseRole::kDerived;
      c.literals = parse_literals(t.get<std::string>(), problem.signature);
      idx.push_back(clauses.size());
      clauses.push_back(std::move(c));
    }
    return idx;
  };
  const auto qi = read(fixture.at("queries"));
  const auto ci = read(fixture.at("context"));
  std::vector<const Clause*> queries, context;
  for (auto i : qi) queries.push_back(&clauses[i]);
  for (auto i : ci) context.push_back(&clauses[i]);
  const auto goal = problem.goal();
  return forward(w, tensorize(build_hypergraph(queries, context, goal, problem.signature)));
}

}  // namespace

int main(int argc, char** argv) {
  std::string dir = "data/gnn";
  std::uint64_t seed = 7;
  double tolerance = 1e-5;
  CLI::App app{"GNN probe fixture"};
  app.require_subcommand(1);
  auto* write = app.add_subcommand("write", "Generate probe.gnn and probe.json");
  write->add_option("--dir", dir);
  write->add_option("--seed", seed);
  auto* check = app.add_subcommand("check", "Recompute and compare the stored scores");
  check->add_option("--dir", dir);
  check->add_option("--tolerance", tolerance);
  CLI11_PARSE(app, argc, argv);

  try {
    if (*write) {
      fs::create_directories(dir);
      const auto w = GnnWeights::random(seed);
      save_weights(w, fs::path(dir) / "probe.gnn");
      json fixture = {{"problem", kProblem}, {"queries", kQueries}, {"context", kContext}};
      fixture["scores"] = probe_scores(load_weights(fs::path(dir) / "probe.gnn"), fixture);
      std::ofstream(fs::path(dir) / "probe.json") << fixture.dump(2) << '\n';
      std::cout << "wrote " << dir << '\n';
      return 0;
    }
    const auto w = load_weights(fs::path(dir) / "probe.gnn");
    std::ifstream in(fs::path(dir) / "probe.json");
    const auto fixture = json::parse(in);
    const auto expected = fixture.at("scores").get<std::vector<double>>();
    const auto got = probe_scores(w, fixture);
    double worst = got.size() == expected.size() ? 0.0 : 1e300;
    for (std::size_t i = 0; i < std::min(got.size(), expected.size()); ++i)
      worst = std::max(worst, std::abs(got[i] - expected[i]));
    std::cout << "max abs diff " << worst << '\n';
    return worst <= tolerance ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
