// Writes generated problem families as .p files.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "anon_enigma/corpus.hpp"

namespace fs = std::filesystem;
using namespace anon_enigma;

int main(int argc, char** argv) {
  std::string family = "mixed", out;
  std::size_t count = 50;
  std::uint64_t seed = 0;

  CLI::App app{"Generate problem corpora"};
  app.add_option("--family", family)->check(CLI::IsMember({"mixed", "counter", "reach"}));
  app.add_option("--count", count)->check(CLI::PositiveNumber);
  app.add_option("--seed", seed);
  app.add_option("--out", out)->required();
  CLI11_PARSE(app, argc, argv);

  std::vector<std::shared_ptr<const Problem>> problems;
  if (family == "counter")
    problems = counter_family(count, seed);
  else if (family == "reach")
    problems = reachability_family(count, seed);
  else
    problems = mixed_corpus(count, seed);

  fs::create_directories(out);
  for (const auto& p : problems) {
    std::ofstream f(fs::path(out) / (p->name + ".p"));
    f << format_problem(*p);
  }
  std::cout << problems.size() << " problems written to " << out << '\n';
  return 0;
}
