#include "anon_enigma/corpus.hpp"

#include <set>
#include <sstream>

#include "anon_enigma/parser.hpp"

namespace anon_enigma {

namespace {

class Names {
 public:
  explicit Names(Rng& rng) : rng_(rng) {}

  std::string fresh() {
    static constexpr char kLetters[] = "abcdefghijklmnopqrstuvwxyz";
    for (;;) {
      std::string s(1, kLetters[rng_.below(26)]);
      const auto len = 2 + rng_.below(5);
      for (std::size_t i = 0; i < len; ++i) {
        const auto k = rng_.below(36);
        s += k < 26 ? kLetters[k] : static_cast<char>('0' + (k - 26));
      }
      if (used_.insert(s).second) return s;
    }
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

unsigned between(Rng& rng, unsigned lo, unsigned hi) {
  return lo + static_cast<unsigned>(rng.below(hi - lo + 1));
}

class Writer {
 public:
  void axiom(const std::string& lits) { add("axiom", lits); }
  void goal(const std::string& lits) { add("negated_conjecture", lits); }
  std::string str() const { return out_.str(); }

 private:
  void add(const char* role, const std::string& lits) {
    out_ << "cnf(c" << n_++ << ", " << role << ", " << lits << ").\n";
  }
  std::ostringstream out_;
  unsigned n_ = 0;
};

std::string app(const std::string& f, std::initializer_list<std::string> args) {
  std::string s = f + "(";
  bool first = true;
  for (const auto& a : args) {
    if (!first) s += ",";
    s += a;
    first = false;
  }
  return s + ")";
}

}  // namespace

std::string reachability_text(Rng& rng, const ReachabilityParams& params) {
  Names names(rng);
  const auto reach = names.fresh();
  const auto edge = names.fresh();
  const unsigned path = between(rng, params.min_path, params.max_path);
  const unsigned nodes = path + 1 + between(rng, params.min_extra, params.max_extra);
  std::vector<std::string> node(nodes);
  for (auto& n : node) n = names.fresh();

  std::set<std::pair<unsigned, unsigned>> edges;
  for (unsigned i = 0; i < path; ++i) edges.insert({i, i + 1});
  const unsigned noise = between(rng, params.min_noise, params.max_noise);
  // Noise edges never leave the goal path towards the target.
  for (unsigned k = 0; k < noise * 4 && edges.size() < path + noise; ++k) {
    const auto a = static_cast<unsigned>(rng.below(nodes));
    const auto b = static_cast<unsigned>(path + 1 + rng.below(nodes - path - 1));
    if (a != b) edges.insert({a, b});
  }

  Writer w;
  std::vector<std::string> facts;
  for (const auto& [a, b] : edges) facts.push_back(app(edge, {node[a], node[b]}));
  rng.shuffle(facts);
  w.axiom(app(reach, {node[0]}));
  w.axiom("~" + app(reach, {"X"}) + " | ~" + app(edge, {"X", "Y"}) + " | " + app(reach, {"Y"}));
  for (const auto& f : facts) w.axiom(f);
  if (params.arithmetic_noise) {
    const auto num = names.fresh();
    const auto zero = names.fresh();
    const auto succ = names.fresh();
    const auto sum = names.fresh();
    w.axiom(app(num, {zero}));
    w.axiom("~" + app(num, {"X"}) + " | " + app(num, {app(succ, {"X"})}));
    w.axiom("~" + app(num, {"X"}) + " | ~" + app(num, {"Y"}) + " | " +
            app(num, {app(sum, {"X", "Y"})}));
  }
  w.goal("~" + app(reach, {node[path]}));
  return w.str();
}

std::string parity_text(Rng& rng) {
  Names names(rng);
  const auto even = names.fresh(), odd = names.fresh();
  const auto zero = names.fresh(), succ = names.fresh();
  const auto le = names.fresh();
  const unsigned n = 2 * between(rng, 2, 5);
  std::string t = zero;
  for (unsigned i = 0; i < n; ++i) t = app(succ, {t});

  Writer w;
  w.axiom(app(even, {zero}));
  w.axiom("~" + app(even, {"X"}) + " | " + app(odd, {app(succ, {"X"})}));
  w.axiom("~" + app(odd, {"X"}) + " | " + app(even, {app(succ, {"X"})}));
  w.axiom(app(le, {zero, "X"}));
  w.axiom("~" + app(le, {"X", "Y"}) + " | " + app(le, {app(succ, {"X"}), app(succ, {"Y"})}));
  w.goal("~" + app(even, {t}));
  return w.str();
}

std::string counter_text(Rng& rng, const CounterParams& params) {
  Names names(rng);
  const unsigned mod = between(rng, 2, 3);
  std::vector<std::string> state(mod);
  for (auto& s : state) s = names.fresh();
  const auto zero = names.fresh(), succ = names.fresh();
  const unsigned n = between(rng, params.min_steps, params.max_steps);
  std::string t = zero;
  for (unsigned i = 0; i < n; ++i) t = app(succ, {t});

  Writer w;
  w.axiom(app(state[0], {zero}));
  for (unsigned i = 0; i < mod; ++i)
    w.axiom("~" + app(state[i], {"X"}) + " | " + app(state[(i + 1) % mod], {app(succ, {"X"})}));
  const auto le = names.fresh(), plus = names.fresh();
  w.axiom(app(le, {zero, "X"}));
  w.axiom("~" + app(le, {"X", "Y"}) + " | " + app(le, {app(succ, {"X"}), app(succ, {"Y"})}));
  w.axiom(app(plus, {zero, "X", "X"}));
  w.axiom("~" + app(plus, {"X", "Y", "Z"}) + " | " +
          app(plus, {app(succ, {"X"}), "Y", app(succ, {"Z"})}));
  if (rng.coin()) {
    const auto tree = names.fresh(), leaf = names.fresh(), node = names.fresh();
    w.axiom(app(tree, {leaf}));
    w.axiom("~" + app(tree, {"X"}) + " | ~" + app(tree, {"Y"}) + " | " +
            app(tree, {app(node, {"X", "Y"})}));
  }
  w.goal("~" + app(state[n % mod], {t}));
  return w.str();
}

std::string implication_text(Rng& rng) {
  Names names(rng);
  const unsigned len = between(rng, 3, 8);
  std::vector<std::string> atom(len + between(rng, 2, 5));
  for (auto& a : atom) a = names.fresh();

  Writer w;
  w.axiom(atom[0]);
  for (unsigned i = 0; i + 1 < len; ++i) w.axiom("~" + atom[i] + " | " + atom[i + 1]);
  for (std::size_t i = len; i < atom.size(); ++i) {
    const auto from = atom[rng.below(atom.size())];
    if (from != atom[i]) w.axiom("~" + from + " | " + atom[i]);
  }
  w.goal("~" + atom[len - 1]);
  return w.str();
}

std::string membership_text(Rng& rng) {
  Names names(rng);
  const auto in = names.fresh(), sub = names.fresh();
  const unsigned sets = between(rng, 3, 6);
  std::vector<std::string> set(sets);
  for (auto& s : set) s = names.fresh();
  const auto elem = names.fresh();

  Writer w;
  w.axiom("~" + app(in, {"X", "A"}) + " | ~" + app(sub, {"A", "B"}) + " | " + app(in, {"X", "B"}));
  w.axiom("~" + app(sub, {"A", "B"}) + " | ~" + app(sub, {"B", "C"}) + " | " + app(sub, {"A", "C"}));
  for (unsigned i = 0; i + 1 < sets; ++i) w.axiom(app(sub, {set[i], set[i + 1]}));
  w.axiom(app(in, {elem, set[0]}));
  w.goal("~" + app(in, {elem, set[sets - 1]}));
  return w.str();
}

std::vector<std::shared_ptr<const Problem>> reachability_family(std::size_t count,
                                                                std::uint64_t seed,
                                                                const ReachabilityParams& params) {
  Rng rng(seed);
  std::vector<std::shared_ptr<const Problem>> out;
  const auto width = std::to_string(count).size();
  for (std::size_t i = 0; i < count; ++i) {
    auto id = std::to_string(i);
    id.insert(0, width - id.size(), '0');
    out.push_back(std::make_shared<const Problem>(
        parse_problem(reachability_text(rng, params), "reach" + id)));
  }
  return out;
}

std::vector<std::shared_ptr<const Problem>> counter_family(std::size_t count, std::uint64_t seed,
                                                           const CounterParams& params) {
  Rng rng(seed);
  std::vector<std::shared_ptr<const Problem>> out;
  const auto width = std::to_string(count).size();
  for (std::size_t i = 0; i < count; ++i) {
    auto id = std::to_string(i);
    id.insert(0, width - id.size(), '0');
    out.push_back(
        std::make_shared<const Problem>(parse_problem(counter_text(rng, params), "counter" + id)));
  }
  return out;
}

std::vector<std::shared_ptr<const Problem>> mixed_corpus(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::shared_ptr<const Problem>> out;
  const auto width = std::to_string(count).size();
  for (std::size_t i = 0; i < count; ++i) {
    auto id = std::to_string(i);
    id.insert(0, width - id.size(), '0');
    std::string text, kind;
    switch (i % 5) {
      case 0: text = reachability_text(rng), kind = "reach"; break;
      case 1: text = parity_text(rng), kind = "parity"; break;
      case 2: text = implication_text(rng), kind = "chain"; break;
      case 3: text = membership_text(rng), kind = "member"; break;
      default: text = counter_text(rng), kind = "counter"; break;
    }
    out.push_back(std::make_shared<const Problem>(parse_problem(text, kind + id)));
  }
  return out;
}

}  // namespace anon_enigma
