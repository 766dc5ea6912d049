#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "anon_enigma/driver.hpp"
#include "anon_enigma/features.hpp"
#include "anon_enigma/gbdt.hpp"
#include "anon_enigma/gnn.hpp"
#include "anon_enigma/parser.hpp"
#include "anon_enigma/rename.hpp"
#include "anon_enigma/saturation.hpp"

namespace py = pybind11;
using namespace anon_enigma;

namespace {

std::shared_ptr<const ClauseEvaluator> load_evaluator(const std::filesystem::path& path,
                                                      std::size_t query, std::size_t context) {
  if (path.extension() == ".gnn")
    return std::make_shared<GnnEvaluator>(std::make_shared<const GnnWeights>(load_weights(path)),
                                          query, context);
  return std::make_shared<GbdtEvaluator>(std::make_shared<const GbdtModel>(GbdtModel::load(path)));
}

Strategy strategy(const std::string& mode, std::shared_ptr<const ClauseEvaluator> evaluator,
                  const std::string& id) {
  Strategy s;
  s.id = id;
  if (mode == "solo")
    s.mode = SelectionMode::kSolo;
  else if (mode == "coop")
    s.mode = SelectionMode::kCooperative;
  else if (mode != "base")
    throw std::invalid_argument("mode must be base, solo or coop");
  s.evaluator = std::move(evaluator);
  s.validate();
  return s;
}

Limits limits(std::optional<std::size_t> cap, std::optional<double> seconds) {
  if (!cap && !seconds) return abstract_limits();
  return Limits{cap, seconds};
}

py::dict result_dict(const ProofResult& r, const Signature& sig) {
  py::list trace;
  for (const auto& t : r.trace) trace.append(py::make_tuple(t.given, t.queue));
  py::list proof;
  for (auto id : r.proof) proof.append(format_literals(r.clauses[id].literals, sig));
  py::dict d;
  d["status"] = std::string(to_string(r.status));
  d["processed"] = r.processed.size();
  d["generated"] = r.generated;
  d["evaluator_selections"] = r.evaluator_selections;
  d["trace"] = trace;
  d["proof"] = proof;
  d["batches"] = r.batches.size();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Saturation prover with learned clause selection";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<ContainerError>(m, "ContainerError", PyExc_ValueError);

  py::class_<Problem, std::shared_ptr<Problem>>(m, "Problem")
      .def_readonly("name", &Problem::name)
      .def_property_readonly("clause_count", [](const Problem& p) { return p.clauses.size(); })
      .def("clauses", [](const Problem& p) {
        std::vector<std::string> out;
        for (const auto& c : p.clauses) out.push_back(format_literals(c.literals, p.signature));
        return out;
      })
      .def("__str__", &format_problem);

  m.def("parse_problem", [](const std::string& text, const std::string& name) {
        return std::make_shared<Problem>(parse_problem(text, name));
      }, py::arg("text"), py::arg("name") = "");
  m.def("load_problem", [](const std::filesystem::path& p) {
    return std::make_shared<Problem>(load_problem(p));
  });
  m.def("rename_problem", [](const Problem& p, std::uint64_t seed) {
    return std::make_shared<Problem>(rename_problem(p, seed).first);
  });

  m.def("prove", [](const Problem& p, const std::string& mode,
                    std::optional<std::filesystem::path> model, std::optional<std::size_t> cap,
                    std::optional<double> seconds, std::size_t query, std::size_t context) {
        auto ev = model ? load_evaluator(*model, query, context) : nullptr;
        ProofResult r;
        {
          py::gil_scoped_release release;
          r = given_clause_loop(p, strategy(mode, ev, "S"), limits(cap, seconds));
        }
        return result_dict(r, p.signature);
      }, py::arg("problem"), py::arg("mode") = "base", py::arg("model") = py::none(),
      py::arg("cap") = py::none(), py::arg("seconds") = py::none(), py::arg("query") = 128,
      py::arg("context") = 512);

  m.def("evaluate", [](const std::filesystem::path& dir, const std::string& mode,
                       std::optional<std::filesystem::path> model, std::size_t cap,
                       std::size_t jobs) {
        const auto corpus = load_corpus(dir);
        auto ev = model ? load_evaluator(*model, 128, 512) : nullptr;
        EvalOutput out;
        {
          py::gil_scoped_release release;
          out = evaluate_strategy(corpus, strategy(mode, ev, mode == "base" ? "S" : mode),
                                  abstract_limits(cap), jobs);
        }
        py::list rows;
        for (const auto& r : out.records) {
          py::dict d;
          d["problem"] = r.problem;
          d["strategy"] = r.strategy;
          d["status"] = r.status;
          d["processed"] = r.processed;
          d["generated"] = r.generated;
          rows.append(d);
        }
        return rows;
      }, py::arg("problems"), py::arg("mode") = "base", py::arg("model") = py::none(),
      py::arg("cap") = kAbstractTimeCap, py::arg("jobs") = 1);

  m.def("train_gbdt", [](const std::filesystem::path& dir, const std::filesystem::path& out,
                         const std::string& growth, unsigned depth, unsigned leaves, double eta,
                         unsigned rounds, std::size_t cap) {
        const auto corpus = load_corpus(dir);
        GbdtParams p;
        p.growth = parse_growth(growth);
        p.depth = depth;
        p.leaves = leaves;
        p.eta = eta;
        p.rounds = rounds;
        py::gil_scoped_release release;
        const auto base = evaluate_strategy(corpus, Strategy{}, abstract_limits(cap));
        const auto model = train_gbdt(build_dataset(base.samples, p.anonymize, p.hash_base), p);
        model.save(out);
        return p.label();
      }, py::arg("problems"), py::arg("out"), py::arg("growth") = "level", py::arg("depth") = 9,
      py::arg("leaves") = 1200, py::arg("eta") = 0.2, py::arg("rounds") = 50,
      py::arg("cap") = kAbstractTimeCap);

  m.def("clause_features", [](const Problem& p, std::size_t index, bool anonymize,
                              std::uint32_t base) {
        return feature_triple(p.clauses.at(index), p, anonymize, base).flatten();
      }, py::arg("problem"), py::arg("index"), py::arg("anonymize") = true,
      py::arg("base") = kDefaultHashBase);
  m.def("cut_features", [](const Problem& p, std::size_t index, bool anonymize) {
    return cut_features(p.clauses.at(index), p.signature, anonymize);
  }, py::arg("problem"), py::arg("index"), py::arg("anonymize") = true);
  m.def("fnv1a64", [](const std::string& s) { return fnv1a64(s); });
  m.def("classify_to_weight", &classify_to_weight);
  m.def("sigmoid", &sigmoid);

  m.def("gnn_scores", [](const std::filesystem::path& weights, const Problem& p,
                         const std::vector<std::string>& queries,
                         const std::vector<std::string>& context) {
        const auto w = load_weights(weights);
        Signature sig = p.signature;
        std::vector<Clause> qs, cs;
        auto id = static_cast<ClauseId>(p.clauses.size());
        auto make = [&](const std::string& text) {
          Clause c;
          c.id = id++;
          c.role = ClauseRole::kDerived;
          c.literals = parse_literals(text, sig);
          return c;
        };
        for (const auto& q : queries) qs.push_back(make(q));
        for (const auto& c : context) cs.push_back(make(c));
        std::vector<const Clause*> qp, cp;
        for (const auto& c : qs) qp.push_back(&c);
        for (const auto& c : cs) cp.push_back(&c);
        return forward(w, tensorize(build_hypergraph(qp, cp, p.goal(), sig)));
      }, py::arg("weights"), py::arg("problem"), py::arg("queries"),
      py::arg("context") = std::vector<std::string>{});
}
