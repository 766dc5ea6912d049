#include "anon_enigma/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace anon_enigma {

using nlohmann::json;

std::string_view to_string(TreeGrowth g) { return g == TreeGrowth::kLevel ? "level" : "leaf"; }

TreeGrowth parse_growth(std::string_view s) {
  if (s == "level") return TreeGrowth::kLevel;
  if (s == "leaf") return TreeGrowth::kLeaf;
  throw std::invalid_argument("unknown tree growth '" + std::string(s) + "'");
}

void GbdtParams::validate() const {
  if (depth < 1) throw TrainingError("tree depth must be >= 1");
  if (leaves < 2) throw TrainingError("leaf count must be >= 2");
  if (!(eta > 0.0 && eta <= 1.0)) throw TrainingError("eta must lie in (0, 1]");
  if (rounds < 1) throw TrainingError("rounds must be >= 1");
  if (!(lambda >= 0.0) || !(min_child_weight >= 0.0))
    throw TrainingError("lambda and min_child_weight must be non-negative");
}

std::string GbdtParams::label() const {
  std::ostringstream out;
  out << to_string(growth) << ",d" << depth;
  if (growth == TreeGrowth::kLeaf) out << ",l" << leaves;
  out << ",eta" << eta << ",r" << rounds;
  return out.str();
}

namespace {

double feature_value(const SparseRow& row, std::uint32_t feature) {
  auto it = std::lower_bound(row.begin(), row.end(), feature,
                             [](const auto& e, std::uint32_t f) { return e.first < f; });
  return it != row.end() && it->first == feature ? it->second : 0.0;
}

}  // namespace

double Tree::evaluate(const SparseRow& row) const {
  std::int32_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = feature_value(row, static_cast<std::uint32_t>(n.feature)) < n.threshold ? n.left : n.right;
  }
  return nodes[i].value;
}

unsigned Tree::depth() const {
  std::vector<unsigned> d(nodes.size(), 0);
  unsigned best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
  }
  return best;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double GbdtModel::margin(const SparseRow& row, std::size_t trees) const {
  double m = base_score_;
  const std::size_t n = std::min(trees, trees_.size());
  for (std::size_t t = 0; t < n; ++t) m += trees_[t].evaluate(row);
  return m;
}

double GbdtModel::predict(const SparseRow& row) const { return sigmoid(margin(row)); }

double GbdtModel::predict(const FeatureTriple& v) const {
  if (v.dimension() != num_features_)
    throw ModelError("feature dimension " + std::to_string(v.dimension()) +
                     " does not match model dimension " + std::to_string(num_features_));
  return predict(v.flatten());
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

// -log p(label | margin), computed without overflow.
double row_loss(double margin, bool label) {
  const double z = label ? -margin : margin;
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

double log_loss(std::span<const double> margins, std::span<const std::uint8_t> labels) {
  if (margins.empty()) return 0.0;
  std::vector<double> losses(margins.size());
  for (std::size_t i = 0; i < margins.size(); ++i) losses[i] = row_loss(margins[i], labels[i]);
  // Summing in sorted order keeps the value independent of row order.
  std::sort(losses.begin(), losses.end());
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(margins.size());
}

double classify_to_weight(double probability) { return probability >= 0.5 ? 1.0 : 10.0; }

std::size_t Dataset::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

void Dataset::add(SparseRow row, bool label) {
  rows.push_back(std::move(row));
  labels.push_back(label ? 1 : 0);
}

Dataset build_dataset(std::span<const TrainingSample> samples, bool anonymize,
                      std::uint32_t base) {
  Dataset data;
  data.num_features = 2 * std::size_t{base} + kProblemFeatureCount;
  for (const auto& s : samples) {
    const auto ctx = problem_context(*s.problem, anonymize, base);
    for (const auto& c : s.positives)
      data.add(feature_triple(c, s.problem->signature, ctx, anonymize).flatten(), true);
    for (const auto& c : s.negatives)
      data.add(feature_triple(c, s.problem->signature, ctx, anonymize).flatten(), false);
  }
  return data;
}

namespace {

struct Split {
  double gain = 0.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
};

struct GradStats {
  double g = 0.0;
  double h = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const GbdtParams& params, std::span<const double> grad,
              std::span<const double> hess)
      : data_(data), params_(params), grad_(grad), hess_(hess) {}

  Tree build() {
    std::vector<std::uint32_t> all(data_.rows.size());
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    nodes_.clear();
    pending_.clear();
    make_node(std::move(all), 0);
    if (params_.growth == TreeGrowth::kLevel)
      grow_levels();
    else
      grow_leaves();
    Tree tree;
    for (const auto& n : nodes_) tree.nodes.push_back(n.node);
    return tree;
  }

 private:
  struct Work {
    TreeNode node;
    std::vector<std::uint32_t> rows;
    unsigned depth = 0;
    Split split;
  };

  std::int32_t make_node(std::vector<std::uint32_t> rows, unsigned depth) {
    Work w;
    const GradStats total = totals(rows);
    w.node.value = -params_.eta * total.g / (total.h + params_.lambda);
    w.rows = std::move(rows);
    w.depth = depth;
    if (depth < params_.depth) w.split = best_split(w.rows, total);
    nodes_.push_back(std::move(w));
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  void apply_split(std::int32_t index) {
    std::vector<std::uint32_t> left, right;
    const Split s = nodes_[index].split;
    for (std::uint32_t r : nodes_[index].rows)
      (feature_value(data_.rows[r], static_cast<std::uint32_t>(s.feature)) < s.threshold ? left
                                                                                          : right)
          .push_back(r);
    const unsigned depth = nodes_[index].depth + 1;
    nodes_[index].rows.clear();
    const std::int32_t l = make_node(std::move(left), depth);
    const std::int32_t r = make_node(std::move(right), depth);
    auto& n = nodes_[index].node;
    n.feature = s.feature;
    n.threshold = s.threshold;
    n.left = l;
    n.right = r;
    n.value = 0.0;
  }

  void grow_levels() {
    std::vector<std::int32_t> frontier{0};
    for (unsigned level = 0; level < params_.depth && !frontier.empty(); ++level) {
      std::vector<std::int32_t> next;
      for (std::int32_t i : frontier) {
        if (nodes_[i].split.feature < 0) continue;
        apply_split(i);
        next.push_back(nodes_[i].node.left);
        next.push_back(nodes_[i].node.right);
      }
      frontier = std::move(next);
    }
  }

  void grow_leaves() {
    std::size_t leaves = 1;
    while (leaves < params_.leaves) {
      std::int32_t best = -1;
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& w = nodes_[i];
        if (!w.node.is_leaf() || w.split.feature < 0) continue;
        if (best < 0 || w.split.gain > nodes_[best].split.gain) best = static_cast<std::int32_t>(i);
      }
      if (best < 0) break;
      apply_split(best);
      ++leaves;
    }
  }

  GradStats totals(const std::vector<std::uint32_t>& rows) const {
    std::vector<std::pair<double, double>> gh;
    gh.reserve(rows.size());
    for (std::uint32_t r : rows) gh.emplace_back(grad_[r], hess_[r]);
    std::sort(gh.begin(), gh.end());
    GradStats t;
    for (const auto& [g, h] : gh) {
      t.g += g;
      t.h += h;
    }
    return t;
  }

  double score(double g, double h) const { return g * g / (h + params_.lambda); }

  void consider(Split& best, std::uint32_t feature, double lo, double hi, const GradStats& left,
                const GradStats& total) const {
    const double gr = total.g - left.g;
    const double hr = total.h - left.h;
    if (left.h < params_.min_child_weight || hr < params_.min_child_weight) return;
    const double gain = 0.5 * (score(left.g, left.h) + score(gr, hr) - score(total.g, total.h));
    if (!(gain > kMinGain) || gain <= best.gain) return;
    double t = lo + (hi - lo) / 2.0;
    if (!(t > lo)) t = hi;
    best = Split{gain, static_cast<std::int32_t>(feature), t};
  }

  Split best_split(const std::vector<std::uint32_t>& rows, const GradStats& total) const {
    struct Entry {
      std::uint32_t feature;
      double value, g, h;
      auto operator<=>(const Entry&) const = default;
    };
    std::vector<Entry> entries;
    for (std::uint32_t r : rows)
      for (const auto& [f, v] : data_.rows[r])
        if (v != 0.0) entries.push_back(Entry{f, v, grad_[r], hess_[r]});
    std::sort(entries.begin(), entries.end());

    Split best;
    std::size_t a = 0;
    while (a < entries.size()) {
      const std::uint32_t f = entries[a].feature;
      std::size_t b = a;
      GradStats nz;
      while (b < entries.size() && entries[b].feature == f) {
        nz.g += entries[b].g;
        nz.h += entries[b].h;
        ++b;
      }
      const std::size_t zeros = rows.size() - (b - a);
      const GradStats zero{total.g - nz.g, total.h - nz.h};

      GradStats left;
      bool have_prev = false;
      bool zero_done = zeros == 0;
      double prev = 0.0;
      std::size_t i = a;
      for (;;) {
        double value;
        GradStats group;
        if (!zero_done && (i == b || entries[i].value > 0.0)) {
          value = 0.0;
          group = zero;
          zero_done = true;
        } else if (i < b) {
          value = entries[i].value;
          while (i < b && entries[i].value == value) {
            group.g += entries[i].g;
            group.h += entries[i].h;
            ++i;
          }
        } else {
          break;
        }
        if (have_prev) consider(best, f, prev, value, left, total);
        left.g += group.g;
        left.h += group.h;
        prev = value;
        have_prev = true;
      }
      a = b;
    }
    return best;
  }

  static constexpr double kMinGain = 1e-12;

  const Dataset& data_;
  const GbdtParams& params_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  std::vector<Work> nodes_;
  std::vector<std::int32_t> pending_;
};

void scale_leaves(Tree& t, double factor) {
  for (auto& n : t.nodes)
    if (n.is_leaf()) n.value *= factor;
}

}  // namespace

GbdtModel train_gbdt(const Dataset& data, const GbdtParams& params, TrainingReport* report) {
  params.validate();
  if (data.rows.empty()) throw TrainingError("empty training set");
  const std::size_t pos = data.positives();
  const std::size_t neg = data.rows.size() - pos;
  if (pos == 0 || neg == 0) throw TrainingError("training set needs both labels");
  for (const auto& row : data.rows)
    for (const auto& [f, v] : row)
      if (f >= data.num_features || !std::isfinite(v))
        throw TrainingError("feature out of range or non-finite");

  const double prior = std::log(static_cast<double>(pos) / static_cast<double>(neg));
  GbdtModel model(params, prior, data.num_features);
  std::vector<double> margins(data.rows.size(), prior);
  std::vector<double> grad(data.rows.size()), hess(data.rows.size());
  double loss = log_loss(margins, data.labels);
  if (report) report->loss = {loss};

  for (unsigned round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < margins.size(); ++i) {
      const double p = sigmoid(margins[i]);
      grad[i] = p - data.labels[i];
      hess[i] = p * (1.0 - p);
    }
    Tree tree = TreeBuilder(data, params, grad, hess).build();

    // Newton steps can overshoot on mixed leaves; halve until the loss does
    // not increase.
    std::vector<double> next(margins.size());
    double next_loss = loss;
    bool accepted = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      for (std::size_t i = 0; i < margins.size(); ++i)
        next[i] = margins[i] + tree.evaluate(data.rows[i]);
      next_loss = log_loss(next, data.labels);
      if (next_loss <= loss) {
        accepted = true;
        break;
      }
      if (report && attempt == 0) ++report->backtracked_rounds;
      scale_leaves(tree, 0.5);
    }
    if (!accepted) {
      scale_leaves(tree, 0.0);
      next = margins;
      next_loss = loss;
    }
    margins = std::move(next);
    loss = next_loss;
    model.add_tree(std::move(tree));
    if (report) report->loss.push_back(loss);
  }
  return model;
}

double ClassifierRates::tpr() const {
  const auto p = true_pos + false_neg;
  return p ? static_cast<double>(true_pos) / static_cast<double>(p) : 0.0;
}

double ClassifierRates::tnr() const {
  const auto n = true_neg + false_pos;
  return n ? static_cast<double>(true_neg) / static_cast<double>(n) : 0.0;
}

ClassifierRates evaluate_classifier(const GbdtModel& model, const Dataset& data) {
  ClassifierRates r;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const bool predicted = model.predict(data.rows[i]) >= 0.5;
    if (data.labels[i])
      ++(predicted ? r.true_pos : r.false_neg);
    else
      ++(predicted ? r.false_pos : r.true_neg);
  }
  return r;
}

// Serialization --------------------------------------------------------------

namespace {

json node_to_json(const Tree& t, std::int32_t i) {
  const auto& n = t.nodes[i];
  if (n.is_leaf()) return json{{"leaf", n.value}};
  return json{{"f", n.feature},
              {"t", n.threshold},
              {"l", node_to_json(t, n.left)},
              {"r", node_to_json(t, n.right)}};
}

double finite_number(const json& j, const char* what) {
  if (!j.is_number()) throw ModelError(std::string("expected number for ") + what);
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ModelError(std::string("non-finite value for ") + what);
  return v;
}

std::int32_t node_from_json(const json& j, Tree& t, std::size_t num_features, unsigned depth) {
  if (!j.is_object()) throw ModelError("tree node must be an object");
  if (depth > 4096) throw ModelError("tree too deep");
  const auto index = static_cast<std::int32_t>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("leaf")) {
    t.nodes[index].value = finite_number(j.at("leaf"), "leaf");
    return index;
  }
  if (!j.contains("f") || !j.contains("t") || !j.contains("l") || !j.contains("r"))
    throw ModelError("split node needs f, t, l, r");
  if (!j.at("f").is_number_integer()) throw ModelError("split feature must be an integer");
  const auto f = j.at("f").get<std::int64_t>();
  if (f < 0 || static_cast<std::size_t>(f) >= num_features)
    throw ModelError("split feature " + std::to_string(f) + " out of range");
  const double threshold = finite_number(j.at("t"), "threshold");
  const std::int32_t l = node_from_json(j.at("l"), t, num_features, depth + 1);
  const std::int32_t r = node_from_json(j.at("r"), t, num_features, depth + 1);
  auto& n = t.nodes[index];
  n.feature = static_cast<std::int32_t>(f);
  n.threshold = threshold;
  n.left = l;
  n.right = r;
  return index;
}

}  // namespace

std::string GbdtModel::to_json() const {
  json trees = json::array();
  for (const auto& t : trees_) trees.push_back(node_to_json(t, 0));
  json j{{"version", kGbdtFormatVersion},
         {"growth", std::string(to_string(params_.growth))},
         {"eta", params_.eta},
         {"base_score", base_score_},
         {"num_features", num_features_},
         {"params",
          {{"depth", params_.depth},
           {"leaves", params_.leaves},
           {"rounds", params_.rounds},
           {"min_child_weight", params_.min_child_weight},
           {"lambda", params_.lambda},
           {"anonymize", params_.anonymize},
           {"hash_base", params_.hash_base}}},
         {"trees", std::move(trees)}};
  return j.dump();
}

GbdtModel GbdtModel::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("version")) throw ModelError("missing version field");
    if (j.at("version") != kGbdtFormatVersion)
      throw ModelError("unsupported model version " + j.at("version").dump());
    GbdtParams p;
    p.growth = parse_growth(j.at("growth").get<std::string>());
    p.eta = finite_number(j.at("eta"), "eta");
    const auto& jp = j.at("params");
    p.depth = jp.at("depth").get<unsigned>();
    p.leaves = jp.at("leaves").get<unsigned>();
    p.rounds = jp.at("rounds").get<unsigned>();
    p.min_child_weight = finite_number(jp.at("min_child_weight"), "min_child_weight");
    p.lambda = finite_number(jp.at("lambda"), "lambda");
    p.anonymize = jp.at("anonymize").get<bool>();
    p.hash_base = jp.at("hash_base").get<std::uint32_t>();
    const auto num_features = j.at("num_features").get<std::size_t>();
    GbdtModel m(p, finite_number(j.at("base_score"), "base_score"), num_features);
    for (const auto& jt : j.at("trees")) {
      Tree t;
      node_from_json(jt, t, num_features, 0);
      m.add_tree(std::move(t));
    }
    return m;
  } catch (const json::exception& e) {
    throw ModelError(std::string("invalid model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ModelError(std::string("invalid model file: ") + e.what());
  }
}

void GbdtModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path.string());
  out << to_json() << '\n';
}

GbdtModel GbdtModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

// Evaluator --------------------------------------------------------------------

namespace {

class GbdtSession : public EvaluationSession {
 public:
  GbdtSession(const GbdtModel& model, const Problem& problem)
      : model_(model),
        problem_(problem),
        ctx_(problem_context(problem, model.params().anonymize, model.params().hash_base)) {}

  std::vector<double> weigh(std::span<const Clause* const> queries,
                            std::span<const Clause* const>) override {
    std::vector<double> out;
    out.reserve(queries.size());
    for (const Clause* c : queries) {
      const auto triple = feature_triple(*c, problem_.signature, ctx_, model_.params().anonymize);
      out.push_back(classify_to_weight(model_.predict(triple)));
    }
    return out;
  }

 private:
  const GbdtModel& model_;
  const Problem& problem_;
  ProblemContext ctx_;
};

}  // namespace

GbdtEvaluator::GbdtEvaluator(std::shared_ptr<const GbdtModel> model) : model_(std::move(model)) {}

std::unique_ptr<EvaluationSession> GbdtEvaluator::open(const Problem& problem) const {
  return std::make_unique<GbdtSession>(*model_, problem);
}

}  // namespace anon_enigma
