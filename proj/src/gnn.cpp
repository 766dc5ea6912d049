#include "anon_enigma/gnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "anon_enigma/rng.hpp"
#include "json.hpp"

namespace anon_enigma {

// Hypergraph -----------------------------------------------------------------

namespace {

class GraphBuilder {
 public:
  explicit GraphBuilder(const Signature& sig) : sig_(sig) {}

  void clause(std::uint32_t node, const Clause& c) {
    for (const auto& l : normalize_variables(c.literals))
      graph_.clause_edges.emplace_back(node, literal(l));
  }

  Hypergraph finish() {
    // Canonical symbol order: kind, arity, then first occurrence.
    std::vector<std::uint32_t> order(first_seen_.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const Symbol& x = sig_.at(first_seen_[a]);
      const Symbol& y = sig_.at(first_seen_[b]);
      if (x.kind != y.kind) return x.kind < y.kind;
      return x.arity < y.arity;
    });
    std::vector<std::uint32_t> remap(order.size());
    for (std::uint32_t pos = 0; pos < order.size(); ++pos) {
      remap[order[pos]] = pos;
      const Symbol& s = sig_.at(first_seen_[order[pos]]);
      graph_.symbols.push_back(SymbolNode{s.kind, s.arity});
    }
    for (auto& e : graph_.app_edges) e.head = remap[e.head];
    graph_.term_count = next_term_;
    return std::move(graph_);
  }

  Hypergraph& graph() { return graph_; }

 private:
  std::uint32_t symbol(SymbolId id) {
    auto [it, inserted] = symbols_.try_emplace(id, static_cast<std::uint32_t>(first_seen_.size()));
    if (inserted) first_seen_.push_back(id);
    return it->second;
  }

  std::uint32_t literal(const Literal& l) {
    auto key = std::make_pair(l.positive, l.atom);
    if (auto it = literals_.find(key); it != literals_.end()) return it->second;
    const std::uint32_t node = next_term_++;
    literals_.emplace(std::move(key), node);
    AppEdge e;
    e.result = node;
    e.head = symbol(l.atom.head());
    e.polarity = l.positive ? 1 : -1;
    for (const auto& a : l.atom.args()) e.args.push_back(term(a));
    graph_.app_edges.push_back(std::move(e));
    return node;
  }

  std::uint32_t term(const Term& t) {
    if (auto it = terms_.find(t); it != terms_.end()) return it->second;
    const std::uint32_t node = next_term_++;
    terms_.emplace(t, node);
    if (t.is_variable()) return node;
    AppEdge e;
    e.result = node;
    e.head = symbol(t.head());
    for (const auto& a : t.args()) e.args.push_back(term(a));
    graph_.app_edges.push_back(std::move(e));
    return node;
  }

  const Signature& sig_;
  Hypergraph graph_;
  std::map<SymbolId, std::uint32_t> symbols_;
  std::vector<SymbolId> first_seen_;
  std::map<Term, std::uint32_t> terms_;
  std::map<std::pair<bool, Term>, std::uint32_t> literals_;
  std::uint32_t next_term_ = 0;
};

}  // namespace

Hypergraph build_hypergraph(std::span<const Clause* const> queries,
                            std::span<const Clause* const> context,
                            std::span<const Clause* const> goal, const Signature& sig) {
  std::vector<std::pair<const Clause*, ClauseNodeRole>> all;
  for (const Clause* c : queries) all.emplace_back(c, ClauseNodeRole::kQuery);
  for (const Clause* c : context) all.emplace_back(c, ClauseNodeRole::kContext);
  for (const Clause* c : goal) all.emplace_back(c, ClauseNodeRole::kGoal);
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.first->id < b.first->id; });
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].first->id == all[i - 1].first->id)
      throw std::invalid_argument("clause " + std::to_string(all[i].first->id) +
                                  " appears in more than one role");

  GraphBuilder builder(sig);
  for (std::uint32_t node = 0; node < all.size(); ++node) {
    builder.graph().clause_ids.push_back(all[node].first->id);
    builder.graph().clause_roles.push_back(all[node].second);
    builder.clause(node, *all[node].first);
  }
  return builder.finish();
}

void TensorGraph::validate() const {
  const std::size_t edges = app_result.size();
  auto fail = [](const std::string& what) { throw std::invalid_argument("tensor graph: " + what); };
  if (app_head.size() != edges || app_polarity.size() != edges ||
      app_arg_offsets.size() != edges + 1)
    fail("application arrays disagree in length");
  if (app_arg_offsets.front() != 0 || app_arg_offsets.back() != app_args.size())
    fail("argument offsets do not cover the argument array");
  for (std::size_t e = 0; e < edges; ++e) {
    if (app_result[e] >= term_count || app_head[e] >= symbol_count) fail("edge index out of range");
    if (app_arg_offsets[e] > app_arg_offsets[e + 1]) fail("argument offsets decrease");
  }
  for (auto a : app_args)
    if (a >= term_count) fail("argument index out of range");
  if (clause_edge_clause.size() != clause_edge_literal.size()) fail("clause edge arrays differ");
  for (std::size_t i = 0; i < clause_edge_clause.size(); ++i)
    if (clause_edge_clause[i] >= clause_count || clause_edge_literal[i] >= term_count)
      fail("clause edge out of range");
  if (goal_mask.size() != clause_count || query_mask.size() != clause_count ||
      clause_ids.size() != clause_count)
    fail("mask sizes differ from clause count");
  for (std::size_t i = 0; i < clause_count; ++i)
    if (goal_mask[i] && query_mask[i]) fail("clause both goal and query");
}

TensorGraph tensorize(const Hypergraph& g) {
  TensorGraph t;
  t.clause_count = g.clause_ids.size();
  t.symbol_count = g.symbols.size();
  t.term_count = g.term_count;
  t.app_arg_offsets.push_back(0);
  for (const auto& e : g.app_edges) {
    t.app_result.push_back(e.result);
    t.app_head.push_back(e.head);
    t.app_polarity.push_back(e.polarity);
    t.app_args.insert(t.app_args.end(), e.args.begin(), e.args.end());
    t.app_arg_offsets.push_back(static_cast<std::uint32_t>(t.app_args.size()));
  }
  for (const auto& [c, l] : g.clause_edges) {
    t.clause_edge_clause.push_back(c);
    t.clause_edge_literal.push_back(l);
  }
  t.clause_ids = g.clause_ids;
  for (auto role : g.clause_roles) {
    t.goal_mask.push_back(role == ClauseNodeRole::kGoal);
    t.query_mask.push_back(role == ClauseNodeRole::kQuery);
  }
  return t;
}

// Weights ----------------------------------------------------------------------

std::vector<TensorSpec> GnnWeights::layout(std::size_t dim, std::size_t rounds) {
  std::vector<TensorSpec> out{{"init.clause", {dim}}, {"init.symbol", {dim}}, {"init.term", {dim}}};
  static const char* kMatrices[] = {"clause.self", "clause.literal", "symbol.self",
                                    "symbol.app",  "term.self",      "term.head",
                                    "term.arg1",   "term.arg2",      "term.arg3",
                                    "term.parent", "term.clause"};
  static const char* kVectors[] = {"clause.bias", "symbol.bias", "term.bias", "term.positive",
                                   "term.negative"};
  for (std::size_t r = 0; r < rounds; ++r) {
    const std::string prefix = "round" + std::to_string(r) + ".";
    for (const char* m : kMatrices) out.push_back({prefix + m, {dim, dim}});
    for (const char* v : kVectors) out.push_back({prefix + v, {dim}});
  }
  out.push_back({"head.hidden", {dim, 2 * dim}});
  out.push_back({"head.hidden_bias", {dim}});
  out.push_back({"head.out", {dim}});
  out.push_back({"head.out_bias", {1}});
  return out;
}

namespace {

// Visits every parameter block in container order.
template <typename W, typename F>
void for_each_block(W& w, F&& f) {
  f(w.init_clause);
  f(w.init_symbol);
  f(w.init_term);
  for (auto& r : w.round) {
    f(r.clause_self);
    f(r.clause_literal);
    f(r.symbol_self);
    f(r.symbol_app);
    f(r.term_self);
    f(r.term_head);
    f(r.term_arg1);
    f(r.term_arg2);
    f(r.term_arg3);
    f(r.term_parent);
    f(r.term_clause);
    f(r.clause_bias);
    f(r.symbol_bias);
    f(r.term_bias);
    f(r.positive_bias);
    f(r.negative_bias);
  }
  f(w.head_hidden);
  f(w.head_hidden_bias);
  f(w.head_out);
}

}  // namespace

GnnWeights GnnWeights::zeros(std::size_t dim, std::size_t rounds) {
  GnnWeights w;
  w.dim = dim;
  w.rounds = rounds;
  const auto d = static_cast<Eigen::Index>(dim);
  w.init_clause = w.init_symbol = w.init_term = Vector::Zero(d);
  w.round.resize(rounds);
  for (auto& r : w.round) {
    for (Matrix* m : {&r.clause_self, &r.clause_literal, &r.symbol_self, &r.symbol_app,
                      &r.term_self, &r.term_head, &r.term_arg1, &r.term_arg2, &r.term_arg3,
                      &r.term_parent, &r.term_clause})
      *m = Matrix::Zero(d, d);
    for (Vector* v : {&r.clause_bias, &r.symbol_bias, &r.term_bias, &r.positive_bias,
                      &r.negative_bias})
      *v = Vector::Zero(d);
  }
  w.head_hidden = Matrix::Zero(d, 2 * d);
  w.head_hidden_bias = Vector::Zero(d);
  w.head_out = Vector::Zero(d);
  return w;
}

GnnWeights GnnWeights::random(std::uint64_t seed, std::size_t dim, std::size_t rounds,
                              double scale) {
  GnnWeights w = zeros(dim, rounds);
  Rng rng(seed);
  auto draw = [&] { return static_cast<double>(static_cast<float>(rng.uniform(-scale, scale))); };
  for_each_block(w, [&](auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = draw();
  });
  w.head_out_bias = draw();
  return w;
}

std::vector<float> GnnWeights::flatten() const {
  std::vector<float> out;
  for_each_block(*this, [&](const auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i)
      out.push_back(static_cast<float>(block.data()[i]));
  });
  out.push_back(static_cast<float>(head_out_bias));
  return out;
}

GnnWeights GnnWeights::unflatten(std::size_t dim, std::size_t rounds,
                                 std::span<const float> values) {
  GnnWeights w = zeros(dim, rounds);
  std::size_t pos = 0;
  auto take = [&]() -> double {
    if (pos >= values.size()) throw ContainerSizeError("payload shorter than layout");
    return values[pos++];
  };
  for_each_block(w, [&](auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = take();
  });
  w.head_out_bias = take();
  if (pos != values.size()) throw ContainerSizeError("payload longer than layout");
  return w;
}

std::string encode_container(const GnnWeights& w) {
  const auto values = w.flatten();
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& spec : GnnWeights::layout(w.dim, w.rounds)) {
    std::size_t length = 1;
    for (auto s : spec.shape) length *= s;
    tensors.push_back({{"name", spec.name}, {"shape", spec.shape}, {"offset", offset},
                       {"length", length}});
    offset += length;
  }
  if (offset != values.size()) throw ContainerShapeError("weights disagree with layout");
  for (float v : values)
    if (!std::isfinite(v)) throw ContainerValueError("refusing to encode non-finite weights");
  nlohmann::json manifest{{"format", "anon-enigma-gnn"}, {"version", kGnnContainerVersion},
                          {"dim", w.dim},           {"rounds", w.rounds},
                          {"tensors", tensors},     {"payload_floats", values.size()}};
  std::string out = manifest.dump();
  out += '\n';
  const std::size_t header = out.size();
  out.resize(header + 4 * values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b)
      out[header + 4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  return out;
}

GnnWeights decode_container(std::string_view bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string_view::npos) throw ContainerError("missing manifest line");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(0, newline));
  } catch (const nlohmann::json::exception& e) {
    throw ContainerError(std::string("malformed manifest: ") + e.what());
  }
  try {
    if (manifest.value("format", "") != "anon-enigma-gnn")
      throw ContainerError("not a weight container");
    if (manifest.at("version") != kGnnContainerVersion)
      throw ContainerVersionError("unsupported container version " +
                                  manifest.at("version").dump());
    const auto dim = manifest.at("dim").get<std::size_t>();
    const auto rounds = manifest.at("rounds").get<std::size_t>();
    if (dim == 0 || rounds == 0) throw ContainerShapeError("dim and rounds must be positive");
    const auto expected = GnnWeights::layout(dim, rounds);
    const auto& tensors = manifest.at("tensors");
    if (tensors.size() != expected.size())
      throw ContainerShapeError("container lists " + std::to_string(tensors.size()) +
                                " tensors, expected " + std::to_string(expected.size()));
    std::size_t offset = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const auto& t = tensors[i];
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      if (t.at("name").get<std::string>() != expected[i].name || shape != expected[i].shape)
        throw ContainerShapeError("tensor '" + t.at("name").get<std::string>() +
                                  "' does not match dim=" + std::to_string(dim) +
                                  " rounds=" + std::to_string(rounds));
      std::size_t length = 1;
      for (auto s : shape) length *= s;
      if (t.at("offset").get<std::size_t>() != offset || t.at("length").get<std::size_t>() != length)
        throw ContainerShapeError("tensor '" + expected[i].name + "' has inconsistent extent");
      offset += length;
    }
    if (manifest.at("payload_floats").get<std::size_t>() != offset)
      throw ContainerShapeError("payload_floats disagrees with tensor extents");
    const auto payload = bytes.substr(newline + 1);
    if (payload.size() != 4 * offset)
      throw ContainerSizeError("payload has " + std::to_string(payload.size()) +
                               " bytes, manifest needs " + std::to_string(4 * offset));
    std::vector<float> values(offset);
    for (std::size_t i = 0; i < offset; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[4 * i + b])) << (8 * b);
      values[i] = std::bit_cast<float>(bits);
      if (!std::isfinite(values[i]))
        throw ContainerValueError("non-finite value at payload index " + std::to_string(i));
    }
    return GnnWeights::unflatten(dim, rounds, values);
  } catch (const nlohmann::json::exception& e) {
    throw ContainerError(std::string("invalid manifest: ") + e.what());
  }
}

void save_weights(const GnnWeights& w, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContainerError("cannot write " + path.string());
  const auto bytes = encode_container(w);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

GnnWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContainerError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return decode_container(buf.str());
}

// Inference --------------------------------------------------------------------

namespace {

Matrix broadcast(const Vector& v, std::size_t rows) {
  return v.transpose().replicate(static_cast<Eigen::Index>(rows), 1);
}

void scale_rows(Matrix& m, const std::vector<double>& counts) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (counts[i] > 0) m.row(i) /= counts[i];
}

void check_finite(const Matrix& m, std::size_t round, const char* what) {
  if (!m.allFinite())
    throw GnnError("non-finite " + std::string(what) + " embedding in round " +
                   std::to_string(round));
}

}  // namespace

std::vector<double> forward(const GnnWeights& w, const TensorGraph& t) {
  t.validate();
  if (w.round.size() != w.rounds) throw GnnError("weights have inconsistent round count");
  const auto d = static_cast<Eigen::Index>(w.dim);
  const std::size_t nc = t.clause_count, ns = t.symbol_count, nu = t.term_count;
  const std::size_t edges = t.app_result.size();

  Matrix C = broadcast(w.init_clause, nc);
  Matrix S = broadcast(w.init_symbol, ns);
  Matrix U = broadcast(w.init_term, nu);

  // Aggregation counts depend only on the graph.
  std::vector<double> clause_lits(nc, 0), symbol_apps(ns, 0), term_defs(nu, 0), term_arg1(nu, 0),
      term_arg2(nu, 0), term_arg3(nu, 0), term_parents(nu, 0), term_clauses(nu, 0);
  for (std::size_t i = 0; i < t.clause_edge_clause.size(); ++i) {
    clause_lits[t.clause_edge_clause[i]] += 1;
    term_clauses[t.clause_edge_literal[i]] += 1;
  }
  for (std::size_t e = 0; e < edges; ++e) {
    symbol_apps[t.app_head[e]] += 1;
    const auto r = t.app_result[e];
    term_defs[r] += 1;
    const auto begin = t.app_arg_offsets[e], end = t.app_arg_offsets[e + 1];
    for (auto k = begin; k < end; ++k) {
      const auto pos = k - begin;
      (pos == 0 ? term_arg1 : pos == 1 ? term_arg2 : term_arg3)[r] += 1;
      term_parents[t.app_args[k]] += 1;
    }
  }

  for (std::size_t round = 0; round < w.rounds; ++round) {
    const RoundWeights& rw = w.round[round];
    Matrix lit_mean = Matrix::Zero(nc, d), app_mean = Matrix::Zero(ns, d);
    Matrix head_mean = Matrix::Zero(nu, d), arg1 = Matrix::Zero(nu, d), arg2 = Matrix::Zero(nu, d),
           arg3 = Matrix::Zero(nu, d), parent_mean = Matrix::Zero(nu, d),
           clause_mean = Matrix::Zero(nu, d), polarity = Matrix::Zero(nu, d);

    for (std::size_t i = 0; i < t.clause_edge_clause.size(); ++i) {
      lit_mean.row(t.clause_edge_clause[i]) += U.row(t.clause_edge_literal[i]);
      clause_mean.row(t.clause_edge_literal[i]) += C.row(t.clause_edge_clause[i]);
    }
    for (std::size_t e = 0; e < edges; ++e) {
      const auto r = t.app_result[e];
      app_mean.row(t.app_head[e]) += U.row(r);
      head_mean.row(r) += S.row(t.app_head[e]);
      if (t.app_polarity[e] > 0) polarity.row(r) += rw.positive_bias.transpose();
      if (t.app_polarity[e] < 0) polarity.row(r) += rw.negative_bias.transpose();
      const auto begin = t.app_arg_offsets[e], end = t.app_arg_offsets[e + 1];
      for (auto k = begin; k < end; ++k) {
        const auto pos = k - begin;
        (pos == 0 ? arg1 : pos == 1 ? arg2 : arg3).row(r) += U.row(t.app_args[k]);
        parent_mean.row(t.app_args[k]) += U.row(r);
      }
    }
    scale_rows(lit_mean, clause_lits);
    scale_rows(clause_mean, term_clauses);
    scale_rows(app_mean, symbol_apps);
    scale_rows(head_mean, term_defs);
    scale_rows(polarity, term_defs);
    scale_rows(arg1, term_arg1);
    scale_rows(arg2, term_arg2);
    scale_rows(arg3, term_arg3);
    scale_rows(parent_mean, term_parents);

    Matrix C2 = C * rw.clause_self.transpose() + lit_mean * rw.clause_literal.transpose() +
                broadcast(rw.clause_bias, nc);
    Matrix S2 = S * rw.symbol_self.transpose() + app_mean * rw.symbol_app.transpose() +
                broadcast(rw.symbol_bias, ns);
    Matrix U2 = U * rw.term_self.transpose() + head_mean * rw.term_head.transpose() +
                arg1 * rw.term_arg1.transpose() + arg2 * rw.term_arg2.transpose() +
                arg3 * rw.term_arg3.transpose() + parent_mean * rw.term_parent.transpose() +
                clause_mean * rw.term_clause.transpose() + broadcast(rw.term_bias, nu) + polarity;
    C = C2.cwiseMax(0.0);
    S = S2.cwiseMax(0.0);
    U = U2.cwiseMax(0.0);
    check_finite(C, round, "clause");
    check_finite(S, round, "symbol");
    check_finite(U, round, "term");
  }

  Vector goal = Vector::Zero(d);
  double goals = 0;
  for (std::size_t c = 0; c < nc; ++c)
    if (t.goal_mask[c]) {
      goal += C.row(static_cast<Eigen::Index>(c)).transpose();
      goals += 1;
    }
  if (goals > 0) goal /= goals;

  std::vector<double> scores;
  for (std::size_t c = 0; c < nc; ++c) {
    if (!t.query_mask[c]) continue;
    Vector z(2 * d);
    z << C.row(static_cast<Eigen::Index>(c)).transpose(), goal;
    const Vector hidden = (w.head_hidden * z + w.head_hidden_bias).cwiseMax(0.0);
    const double s = w.head_out.dot(hidden) + w.head_out_bias;
    if (!std::isfinite(s)) throw GnnError("non-finite clause score in head");
    scores.push_back(s);
  }
  return scores;
}

namespace {

class GnnSession : public EvaluationSession {
 public:
  GnnSession(const GnnWeights& w, const Problem& problem, std::size_t q, std::size_t c)
      : weights_(w), problem_(problem), query_size_(q), context_size_(c) {}

  std::size_t query_size() const override { return query_size_; }
  std::size_t context_size() const override { return context_size_; }

  std::vector<double> weigh(std::span<const Clause* const> queries,
                            std::span<const Clause* const> context) override {
    std::set<ClauseId> taken;
    for (const Clause* q : queries) taken.insert(q->id);
    std::vector<const Clause*> goal;
    for (const Clause* g : problem_.goal())
      if (taken.insert(g->id).second) goal.push_back(g);
    std::vector<const Clause*> ctx;
    for (const Clause* c : context)
      if (taken.insert(c->id).second) ctx.push_back(c);

    const auto graph = build_hypergraph(queries, ctx, goal, problem_.signature);
    const auto scores = forward(weights_, tensorize(graph));
    // Scores come back in clause-node (ascending id) order.
    std::map<ClauseId, double> by_id;
    std::size_t k = 0;
    for (std::size_t node = 0; node < graph.clause_ids.size(); ++node)
      if (graph.clause_roles[node] == ClauseNodeRole::kQuery)
        by_id[graph.clause_ids[node]] = scores[k++];
    std::vector<double> out;
    out.reserve(queries.size());
    for (const Clause* q : queries) out.push_back(-by_id.at(q->id));
    return out;
  }

 private:
  const GnnWeights& weights_;
  const Problem& problem_;
  std::size_t query_size_;
  std::size_t context_size_;
};

}  // namespace

GnnEvaluator::GnnEvaluator(std::shared_ptr<const GnnWeights> weights, std::size_t query_size,
                           std::size_t context_size)
    : weights_(std::move(weights)), query_size_(query_size), context_size_(context_size) {
  if (query_size_ < 1) throw std::invalid_argument("query size must be >= 1");
}

std::unique_ptr<EvaluationSession> GnnEvaluator::open(const Problem& problem) const {
  return std::make_unique<GnnSession>(*weights_, problem, query_size_, context_size_);
}

}  // namespace anon_enigma
