// anon-enigma: command-line front end.
//
// Exit status: 0 success/proved, 1 not proved, 2 usage or configuration
// error, 3 internal error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "anon_enigma/corpus.hpp"
#include "anon_enigma/driver.hpp"
#include "anon_enigma/features.hpp"
#include "anon_enigma/parser.hpp"

namespace fs = std::filesystem;
using namespace anon_enigma;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotProved = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInternal = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  // shared
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string anonymize = "on";

  // limits
  bool abstract = false;
  std::size_t cap = kAbstractTimeCap;
  std::size_t max_symbols = 256;
  double seconds = 0.0;

  // strategy
  std::string mode = "base";
  std::string model;
  std::size_t query = 128;
  std::size_t context = 512;

  // paths
  std::string problem, problems, samples, records_out, samples_out, out, clauses;
  std::vector<std::string> records_in;

  // printing
  bool trace = false;
  bool no_proof = false;

  // gbdt
  std::string growth = "level";
  unsigned depth = 9, leaves = 1200, rounds = 50;
  double eta = 0.2, lambda = 1.0, min_child_weight = 1.0;
  std::uint32_t hash_base = kDefaultHashBase;

  // grid / loop
  std::string family = "gbdt";
  std::string grid = "level";
  std::vector<unsigned> epochs;
  std::vector<std::size_t> queries, contexts;
  std::string containers;
  std::string gnn_trainer;
  std::size_t iterations = 3;
  double dev_fraction = 0.1;
  std::size_t top = 6;
};

bool anonymize_flag(const Options& o) { return o.anonymize == "on"; }

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what);
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " not found: " + path);
}

void require_dir(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what);
  if (!fs::is_directory(path)) throw ConfigError(std::string(what) + " not a directory: " + path);
}

Limits limits_of(const Options& o) {
  Limits l = o.seconds > 0 && !o.abstract ? real_time_limits(o.seconds) : abstract_limits(o.cap);
  if (o.max_symbols > 0) l.max_clause_symbols = o.max_symbols;
  return l;
}

std::shared_ptr<const ClauseEvaluator> load_evaluator(const Options& o) {
  require_file(o.model, "--model");
  const fs::path p(o.model);
  if (p.extension() == ".gnn") {
    auto w = std::make_shared<const GnnWeights>(load_weights(p));
    return std::make_shared<const GnnEvaluator>(w, o.query, o.context);
  }
  auto m = std::make_shared<const GbdtModel>(GbdtModel::load(p));
  return std::make_shared<const GbdtEvaluator>(m);
}

Strategy strategy_of(const Options& o) {
  Strategy s;
  if (o.mode == "base") {
    if (!o.model.empty()) throw ConfigError("--model given with --mode base");
    return s;
  }
  if (o.model.empty()) throw ConfigError("--mode " + o.mode + " requires --model");
  s.mode = o.mode == "solo" ? SelectionMode::kSolo : SelectionMode::kCooperative;
  s.evaluator = load_evaluator(o);
  const auto stem = fs::path(o.model).stem().string();
  s.id = s.mode == SelectionMode::kSolo ? stem : "S+" + stem;
  return s;
}

std::map<std::string, ProblemPtr> index_corpus(const std::vector<ProblemPtr>& corpus) {
  std::map<std::string, ProblemPtr> out;
  for (const auto& p : corpus) out.emplace(p->name, p);
  return out;
}

std::vector<TrainingSample> read_samples(const Options& o) {
  require_file(o.samples, "--samples");
  require_dir(o.problems, "--problems");
  const auto index = index_corpus(load_corpus(o.problems));
  std::ifstream in(o.samples);
  return read_samples_jsonl(in, [&](const std::string& name) -> ProblemPtr {
    auto it = index.find(name);
    return it == index.end() ? nullptr : it->second;
  });
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

// Zero timings in abstract mode so files are identical across runs.
void strip_timing(std::vector<EvalRecord>& records) {
  for (auto& r : records) r.seconds = 0.0;
}

std::string records_text(std::vector<EvalRecord> records, bool abstract) {
  if (abstract) strip_timing(records);
  std::ostringstream out;
  write_records_csv(out, records);
  return out.str();
}

GbdtParams gbdt_params(const Options& o) {
  GbdtParams p;
  p.growth = parse_growth(o.growth);
  p.depth = o.depth;
  p.leaves = o.leaves;
  p.eta = o.eta;
  p.rounds = o.rounds;
  p.lambda = o.lambda;
  p.min_child_weight = o.min_child_weight;
  p.anonymize = anonymize_flag(o);
  p.hash_base = o.hash_base;
  p.validate();
  return p;
}

std::vector<GbdtParams> gbdt_grid(const Options& o) {
  auto grid = o.grid == "leaf" ? gbdt_leaf_grid() : gbdt_level_grid();
  for (auto& p : grid) {
    p.eta = o.eta;
    p.rounds = o.rounds;
    p.lambda = o.lambda;
    p.min_child_weight = o.min_child_weight;
    p.anonymize = anonymize_flag(o);
    p.hash_base = o.hash_base;
  }
  return grid;
}

std::vector<GnnConfig> gnn_configs(const Options& o) {
  if (o.epochs.empty() && o.queries.empty() && o.contexts.empty()) return gnn_grid();
  std::vector<unsigned> es = o.epochs.empty() ? std::vector<unsigned>{10} : o.epochs;
  std::vector<std::size_t> qs = o.queries.empty() ? std::vector<std::size_t>{128} : o.queries;
  std::vector<std::size_t> cs = o.contexts.empty() ? std::vector<std::size_t>{512} : o.contexts;
  std::vector<GnnConfig> out;
  for (auto e : es)
    for (auto q : qs)
      for (auto c : cs) out.push_back({e, q, c});
  return out;
}

// Runs the external trainer as
//   <cmd> --samples <file> --problems <dir> --out <dir> --epochs e1,e2,...
GnnFamily::Trainer external_trainer(const Options& o, const std::vector<GnnConfig>& grid) {
  std::set<unsigned> epochs;
  for (const auto& g : grid) epochs.insert(g.epoch);
  std::string list;
  for (auto e : epochs) list += (list.empty() ? "" : ",") + std::to_string(e);
  const fs::path base = o.out.empty() ? fs::path("loop-out") : fs::path(o.out);
  return [cmd = o.gnn_trainer, problems = o.problems, list, base](const SampleArchive& archive,
                                                                    std::size_t iteration) {
    const auto dir = base / ("N" + std::to_string(iteration));
    fs::create_directories(dir);
    const auto samples_path = dir / "train.jsonl";
    {
      std::ofstream out(samples_path);
      write_samples_jsonl(out, archive.samples());
    }
    const std::string line = cmd + " --samples '" + samples_path.string() + "' --problems '" +
                             problems + "' --out '" + dir.string() + "' --epochs " + list;
    if (std::system(line.c_str()) != 0) throw std::runtime_error("gnn trainer failed: " + line);
    return dir;
  };
}

void print_grid(const GridResult& g) {
  std::cout << "config,solved,processed,status\n";
  for (const auto& c : g.candidates)
    std::cout << '"' << c.label << "\"," << c.solved << ',' << c.processed << ','
              << (c.failed ? "failed: " + c.error : "ok") << '\n';
  if (g.best) std::cout << "best: " << g.candidates[*g.best].label << '\n';
}

// Commands ------------------------------------------------------------------------

int cmd_prove(const Options& o) {
  require_file(o.problem, "--problem");
  const auto problem = load_problem(o.problem);
  const auto strategy = strategy_of(o);
  const auto result = given_clause_loop(problem, strategy, limits_of(o));
  std::cout << "status: " << to_string(result.status) << '\n'
            << "processed: " << result.processed.size() << '\n'
            << "generated: " << result.generated << '\n';
  if (o.trace) std::cout << format_trace(result);
  if (result.status == ProofStatus::kProved && !o.no_proof)
    std::cout << "proof:\n" << format_proof(result, problem.signature);
  return result.status == ProofStatus::kProved ? kExitOk : kExitNotProved;
}

int cmd_eval(const Options& o) {
  require_dir(o.problems, "--problems");
  const auto corpus = load_corpus(o.problems);
  if (corpus.empty()) throw ConfigError("no .p files in " + o.problems);
  const auto strategy = strategy_of(o);
  const auto limits = limits_of(o);
  const auto result = evaluate_strategy(corpus, strategy, limits, o.jobs);
  const auto csv = records_text(result.records, !limits.wall_seconds);
  if (o.records_out.empty())
    std::cout << csv;
  else
    write_text(o.records_out, csv);
  if (!o.samples_out.empty()) {
    std::ostringstream s;
    write_samples_jsonl(s, result.samples);
    write_text(o.samples_out, s.str());
  }
  std::size_t solved = 0;
  for (const auto& r : result.records) solved += r.solved();
  std::cerr << strategy.id << ": solved " << solved << " of " << result.records.size() << '\n';
  return kExitOk;
}

int cmd_train_gbdt(const Options& o) {
  if (o.out.empty()) throw ConfigError("missing --out");
  const auto params = gbdt_params(o);
  const auto samples = read_samples(o);
  const auto data = build_dataset(samples, params.anonymize, params.hash_base);
  TrainingReport report;
  const auto model = train_gbdt(data, params, &report);
  model.save(o.out);
  const auto rates = evaluate_classifier(model, data);
  std::cout << "rows: " << data.rows.size() << " (" << data.positives() << " positive)\n"
            << "loss: " << report.loss.front() << " -> " << report.loss.back() << '\n'
            << "train tpr: " << rates.tpr() << " tnr: " << rates.tnr() << '\n';
  return kExitOk;
}

int cmd_score(const Options& o) {
  require_file(o.problem, "--problem");
  require_file(o.clauses, "--clauses");
  auto problem = load_problem(o.problem);
  const auto evaluator = load_evaluator(o);
  std::ifstream in(o.clauses);
  std::vector<Clause> clauses;
  ClauseId next = static_cast<ClauseId>(problem.clauses.size());
  Signature sig = problem.signature;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '%') continue;
    Clause c;
    c.id = next++;
    c.role = ClauseRole::kDerived;
    c.literals = parse_literals(line, sig);
    clauses.push_back(std::move(c));
  }
  if (sig.size() != problem.signature.size())
    throw ConfigError("clauses use symbols not in the problem");
  std::vector<const Clause*> queries;
  for (const auto& c : clauses) queries.push_back(&c);
  auto session = evaluator->open(problem);
  const auto weights = session->weigh(queries, {});
  for (std::size_t i = 0; i < clauses.size(); ++i)
    std::cout << weights[i] << '\t' << format_literals(clauses[i].literals, sig) << '\n';
  return kExitOk;
}

int cmd_grid(const Options& o) {
  require_dir(o.problems, "--problems");
  const auto corpus = load_corpus(o.problems);
  if (corpus.empty()) throw ConfigError("no .p files in " + o.problems);
  const auto dev = dev_subset(corpus, o.seed, o.dev_fraction);
  std::vector<Candidate> candidates;
  if (o.family == "gbdt") {
    SampleArchive archive;
    for (const auto& s : read_samples(o)) archive.add(s);
    GbdtFamily family(gbdt_grid(o));
    candidates = family.candidates(archive, 0);
  } else {
    require_dir(o.containers, "--containers");
    GnnFamily family(gnn_configs(o),
                     [dir = o.containers](const SampleArchive&, std::size_t) { return fs::path(dir); });
    candidates = family.candidates(SampleArchive{}, 0);
  }
  print_grid(grid_search(candidates, dev, Strategy{}, limits_of(o), o.jobs));
  return kExitOk;
}

int cmd_loop(const Options& o) {
  require_dir(o.problems, "--problems");
  if (o.out.empty()) throw ConfigError("missing --out");
  const auto corpus = load_corpus(o.problems);
  if (corpus.empty()) throw ConfigError("no .p files in " + o.problems);
  std::unique_ptr<ModelFamily> family;
  if (o.family == "gbdt") {
    family = std::make_unique<GbdtFamily>(gbdt_grid(o));
  } else {
    if (o.gnn_trainer.empty()) throw ConfigError("--family gnn requires --gnn-trainer");
    const auto grid = gnn_configs(o);
    family = std::make_unique<GnnFamily>(grid, external_trainer(o, grid));
  }
  fs::create_directories(o.out);
  LoopConfig cfg;
  cfg.iterations = o.iterations;
  cfg.limits = limits_of(o);
  cfg.seed = o.seed;
  cfg.dev_fraction = o.dev_fraction;
  cfg.jobs = o.jobs;
  const auto report = learning_loop(corpus, Strategy{}, *family, cfg);

  write_text((fs::path(o.out) / "records.csv").string(),
             records_text(report.all_records(), !cfg.limits.wall_seconds));
  auto solved = [](const std::vector<EvalRecord>& rs) {
    std::size_t n = 0;
    for (const auto& r : rs) n += r.solved();
    return n;
  };
  std::cout << "S: solved " << solved(report.base) << " of " << report.base.size()
            << ", archive " << report.initial_archive_clauses << " clauses\n";
  for (const auto& it : report.iterations) {
    std::cout << it.model << " [" << it.winner << "]: S+" << it.model << " solved "
              << solved(it.coop) << ", " << it.model << " solved " << solved(it.solo)
              << ", archive " << it.archive_clauses << " clauses";
    if (it.rates) std::cout << ", tpr " << it.rates->tpr() << " tnr " << it.rates->tnr();
    std::cout << '\n';
    if (const auto* g = dynamic_cast<const GbdtEvaluator*>(it.evaluator.get()))
      g->model().save(fs::path(o.out) / (it.model + ".json"));
  }
  return kExitOk;
}

int cmd_cover(const Options& o) {
  if (o.records_in.empty()) throw ConfigError("missing --records");
  std::vector<EvalRecord> records;
  for (const auto& path : o.records_in) {
    require_file(path, "--records");
    std::ifstream in(path);
    auto part = read_records_csv(in);
    records.insert(records.end(), part.begin(), part.end());
  }
  std::cout << "rank,strategy,gain,covered\n";
  std::size_t rank = 1;
  for (const auto& step : greedy_cover(solved_sets(records), o.top))
    std::cout << rank++ << ',' << step.strategy << ',' << step.gain << ',' << step.covered << '\n';
  return kExitOk;
}

int cmd_collisions(const Options& o) {
  const auto samples = read_samples(o);
  const auto named = collision_report(samples, false, o.hash_base);
  const auto anon = collision_report(samples, true, o.hash_base);
  std::cout << "setting,clauses,colliding,fraction\n"
            << "named," << named.clauses << ',' << named.colliding << ',' << named.fraction() << '\n'
            << "anonymized," << anon.clauses << ',' << anon.colliding << ',' << anon.fraction()
            << '\n';
  return kExitOk;
}

std::size_t default_jobs() {
  if (const char* env = std::getenv("ANON_ENIGMA_THREADS")) {
    try {
      const auto n = std::stoul(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  o.jobs = default_jobs();

  CLI::App app{"anon-enigma: learned clause selection for a saturation prover"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto add_shared = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "Random seed");
    c->add_option("--jobs", o.jobs, "Worker threads (default: ANON_ENIGMA_THREADS or 1)")
        ->check(CLI::PositiveNumber);
    c->add_option("--anonymize", o.anonymize, "Anonymize symbols in features")
        ->check(CLI::IsMember({"on", "off"}));
    c->add_option("--hash-base", o.hash_base, "Feature hash base (power of two)");
  };
  auto add_limits = [&](CLI::App* c) {
    c->add_flag("--abstract", o.abstract, "Limit by generated clauses only (default)");
    c->add_option("--cap", o.cap, "Generated-clause cap")->check(CLI::PositiveNumber);
    c->add_option("--seconds", o.seconds, "Wall-clock limit per problem (real-time mode)")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--max-symbols", o.max_symbols, "Drop generated clauses above this size (0: off)");
  };
  auto add_strategy = [&](CLI::App* c) {
    c->add_option("--mode", o.mode, "Clause selection")->check(CLI::IsMember({"base", "solo", "coop"}));
    c->add_option("--model", o.model, "GBDT model (.json) or GNN container (.gnn)");
    c->add_option("--query", o.query, "GNN query batch size")->check(CLI::PositiveNumber);
    c->add_option("--context", o.context, "GNN context size");
  };
  auto add_gbdt = [&](CLI::App* c) {
    c->add_option("--growth", o.growth, "Tree growth")->check(CLI::IsMember({"level", "leaf"}));
    c->add_option("--depth", o.depth, "Tree depth");
    c->add_option("--leaves", o.leaves, "Leaf limit (leaf-wise growth)");
    c->add_option("--eta", o.eta, "Learning rate");
    c->add_option("--rounds", o.rounds, "Boosting rounds");
    c->add_option("--lambda", o.lambda, "L2 regularization");
    c->add_option("--min-child-weight", o.min_child_weight, "Minimum hessian per child");
  };
  auto add_gnn_grid = [&](CLI::App* c) {
    c->add_option("--epochs", o.epochs, "GNN epochs to try")->delimiter(',');
    c->add_option("--queries", o.queries, "GNN query sizes to try")->delimiter(',');
    c->add_option("--contexts", o.contexts, "GNN context sizes to try")->delimiter(',');
  };

  auto* prove = app.add_subcommand("prove", "Run the prover on one problem");
  prove->add_option("--problem", o.problem, "Problem file")->required();
  prove->add_flag("--trace", o.trace, "Print the given-clause trace");
  prove->add_flag("--no-proof", o.no_proof, "Do not print the proof");
  add_shared(prove);
  add_limits(prove);
  add_strategy(prove);

  auto* eval = app.add_subcommand("eval", "Evaluate a strategy over a corpus");
  eval->add_option("--problems", o.problems, "Directory of .p files")->required();
  eval->add_option("--records", o.records_out, "CSV output (default stdout)");
  eval->add_option("--samples-out", o.samples_out, "Training sample JSONL output");
  add_shared(eval);
  add_limits(eval);
  add_strategy(eval);

  auto* train = app.add_subcommand("train-gbdt", "Train a GBDT clause classifier");
  train->add_option("--samples", o.samples, "Training sample JSONL")->required();
  train->add_option("--problems", o.problems, "Directory with the sampled problems")->required();
  train->add_option("--out", o.out, "Model output (.json)")->required();
  add_shared(train);
  add_gbdt(train);

  auto* score = app.add_subcommand("score", "Print evaluator weights for clauses");
  score->add_option("--model", o.model, "GBDT model or GNN container")->required();
  score->add_option("--problem", o.problem, "Problem providing signature and goal")->required();
  score->add_option("--clauses", o.clauses, "One disjunction per line")->required();
  score->add_option("--query", o.query, "GNN query batch size")->check(CLI::PositiveNumber);
  score->add_option("--context", o.context, "GNN context size");
  add_shared(score);

  auto* grid = app.add_subcommand("grid", "Grid-search model parameters on the dev subset");
  grid->add_option("--family", o.family, "Model family")->check(CLI::IsMember({"gbdt", "gnn"}));
  grid->add_option("--grid", o.grid, "GBDT grid")->check(CLI::IsMember({"level", "leaf"}));
  grid->add_option("--problems", o.problems, "Corpus directory")->required();
  grid->add_option("--samples", o.samples, "Training samples (gbdt)");
  grid->add_option("--containers", o.containers, "Directory of epoch-<e>.gnn files (gnn)");
  grid->add_option("--dev-fraction", o.dev_fraction, "Dev subset fraction");
  add_shared(grid);
  add_limits(grid);
  add_gbdt(grid);
  add_gnn_grid(grid);

  auto* loop = app.add_subcommand("loop", "Run the learning/evaluation loop");
  loop->add_option("--problems", o.problems, "Corpus directory")->required();
  loop->add_option("--out", o.out, "Output directory")->required();
  loop->add_option("--family", o.family, "Model family")->check(CLI::IsMember({"gbdt", "gnn"}));
  loop->add_option("--grid", o.grid, "GBDT grid")->check(CLI::IsMember({"level", "leaf"}));
  loop->add_option("--iterations", o.iterations, "Loop iterations")->check(CLI::PositiveNumber);
  loop->add_option("--dev-fraction", o.dev_fraction, "Dev subset fraction");
  loop->add_option("--gnn-trainer", o.gnn_trainer, "External GNN trainer command");
  add_shared(loop);
  add_limits(loop);
  add_gbdt(loop);
  add_gnn_grid(loop);

  auto* cover = app.add_subcommand("cover", "Greedy cover over evaluation records");
  cover->add_option("--records", o.records_in, "Record CSV files")->required();
  cover->add_option("--top", o.top, "Maximum strategies");

  auto* coll = app.add_subcommand("collisions", "Clause feature-vector collision report");
  coll->add_option("--samples", o.samples, "Training sample JSONL")->required();
  coll->add_option("--problems", o.problems, "Directory with the sampled problems")->required();
  add_shared(coll);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*prove) return cmd_prove(o);
    if (*eval) return cmd_eval(o);
    if (*train) return cmd_train_gbdt(o);
    if (*score) return cmd_score(o);
    if (*grid) return cmd_grid(o);
    if (*loop) return cmd_loop(o);
    if (*cover) return cmd_cover(o);
    if (*coll) return cmd_collisions(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContainerError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}
