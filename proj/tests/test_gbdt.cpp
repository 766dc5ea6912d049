#include <cmath>
#include <filesystem>
#include <fstream>

#include "anon_enigma/gbdt.hpp"
#include "anon_enigma/parser.hpp"
#include "doctest.h"
#include "gbdt_data.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace anon_enigma;

namespace {

std::map<std::uint32_t, double> as_map(const SparseRow& row) { return {row.begin(), row.end()}; }

unsigned max_depth(const Tree& t, std::int32_t n = 0) {
  const auto& node = t.nodes[n];
  if (node.is_leaf()) return 0;
  return 1 + std::max(max_depth(t, node.left), max_depth(t, node.right));
}

nlohmann::json single_leaf_model(double leaf) {
  GbdtModel m(GbdtParams{}, 0.0, 10);
  m.add_tree(Tree{{TreeNode{-1, 0, -1, -1, leaf}}});
  return nlohmann::json::parse(m.to_json());
}

}  // namespace

TEST_SUITE("gbdt prediction") {
  TEST_CASE("sigmoid") {
    CHECK(sigmoid(0) == 0.5);
    CHECK(sigmoid(2) == doctest::Approx(0.8807970779778823).epsilon(1e-15));
    CHECK(sigmoid(-800) >= 0.0);
    CHECK(sigmoid(800) == 1.0);
    for (double x = -30; x <= 30; x += 0.37) CHECK(sigmoid(x) == oracle::logistic(x));
  }

  TEST_CASE("empty model predicts one half") {
    GbdtModel m(GbdtParams{}, 0.0, 10);
    CHECK(m.predict(SparseRow{}) == 0.5);
  }

  TEST_CASE("single leaf") {
    GbdtModel m(GbdtParams{}, 0.0, 10);
    m.add_tree(Tree{{TreeNode{-1, 0, -1, -1, 2.0}}});
    CHECK(m.predict(SparseRow{{3, 1.0}}) == doctest::Approx(0.8808).epsilon(1e-4));
  }

  TEST_CASE("split navigation: left iff below threshold, missing is zero") {
    Tree t{{TreeNode{4, 0.5, 1, 2, 0}, TreeNode{-1, 0, -1, -1, -1.0}, TreeNode{-1, 0, -1, -1, 1.0}}};
    CHECK(t.evaluate({}) == -1.0);
    CHECK(t.evaluate({{4, 0.5}}) == 1.0);
    CHECK(t.evaluate({{4, 0.49}}) == -1.0);
    CHECK(t.evaluate({{3, 7.0}}) == -1.0);
  }

  TEST_CASE("dimension mismatch") {
    const auto p = parse_problem("cnf(a,axiom,p(a)).");
    GbdtModel m(GbdtParams{}, 0.0, 100);
    CHECK_THROWS_AS(m.predict(feature_triple(p.clauses[0], p, true, 64)), ModelError);
  }

  TEST_CASE("reference traversal of the serialized model") {
    GbdtParams params;
    params.rounds = 15;
    params.depth = 4;
    const auto data = support::toy_dataset(11);
    const auto model = train_gbdt(data, params);
    const auto j = nlohmann::json::parse(model.to_json());
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
      SparseRow row;
      for (std::uint32_t f = 0; f < 12; ++f)
        if (rng.coin(0.5)) row.emplace_back(f, rng.uniform(-1, 6));
      const double m = oracle::model_margin(j, as_map(row));
      CHECK(model.margin(row) == m);
      CHECK(model.predict(row) == oracle::logistic(m));
    }
  }
}

TEST_SUITE("classify to weight") {
  TEST_CASE("examples") {
    CHECK(classify_to_weight(0.9) == 1.0);
    CHECK(classify_to_weight(0.1) == 10.0);
    CHECK(classify_to_weight(0.5) == 1.0);
    CHECK(classify_to_weight(std::nextafter(0.5, 0.0)) == 10.0);
    for (int i = 0; i <= 1000; ++i) {
      const double p = i / 1000.0;
      CHECK(classify_to_weight(p) == (p >= 0.5 ? 1.0 : 10.0));
    }
  }
}

TEST_SUITE("gbdt training") {
  TEST_CASE("separable single feature beats the constant baseline") {
    Dataset d;
    d.num_features = 1;
    for (int i = 0; i < 20; ++i) d.add({{0, 1.0}}, true);
    for (int i = 0; i < 30; ++i) d.add({}, false);
    GbdtParams params;
    params.rounds = 1;
    TrainingReport report;
    const auto m = train_gbdt(d, params, &report);
    // Constant prediction at the class prior.
    const double prior = 20.0 / 50.0;
    const double baseline = -(0.4 * std::log(prior) + 0.6 * std::log(1 - prior));
    std::vector<double> margins;
    for (const auto& r : d.rows) margins.push_back(m.margin(r));
    CHECK(log_loss(margins, d.labels) < baseline - 1e-6);
    CHECK(report.loss.size() == 2);
    CHECK(report.loss[0] == doctest::Approx(baseline));
  }

  TEST_CASE("identical rows give the class prior") {
    Dataset d;
    d.num_features = 3;
    for (int i = 0; i < 10; ++i) d.add({{1, 2.0}}, i < 3);
    GbdtParams params;
    params.rounds = 200;
    params.eta = 0.5;
    const auto m = train_gbdt(d, params);
    CHECK(m.trees().size() == 200);
    for (const auto& t : m.trees()) CHECK(t.leaf_count() == 1);
    CHECK(m.predict(d.rows[0]) == doctest::Approx(0.3).epsilon(1e-3));
  }

  TEST_CASE("loss never increases") {
    for (auto growth : {TreeGrowth::kLevel, TreeGrowth::kLeaf})
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        GbdtParams params;
        params.growth = growth;
        params.rounds = 25;
        params.depth = 6;
        params.leaves = 10;
        params.eta = 0.6;
        TrainingReport report;
        train_gbdt(support::toy_dataset(seed), params, &report);
        REQUIRE(report.loss.size() == 26);
        for (std::size_t k = 1; k < report.loss.size(); ++k)
          CHECK(report.loss[k] <= report.loss[k - 1]);
      }
  }

  TEST_CASE("depth and leaf bounds") {
    const auto data = support::toy_dataset(21, 600, 20);
    for (auto [d, l] : {std::pair{1u, 2u}, {3u, 5u}, {30u, 1800u}, {2u, 1800u}}) {
      GbdtParams params;
      params.growth = TreeGrowth::kLeaf;
      params.depth = d;
      params.leaves = l;
      params.rounds = 5;
      params.min_child_weight = 0.0;
      const auto leafwise = train_gbdt(data, params);
      for (const auto& t : leafwise.trees()) {
        CHECK(t.depth() <= d);
        CHECK(max_depth(t) == t.depth());
        CHECK(t.leaf_count() <= l);
      }
      params.growth = TreeGrowth::kLevel;
      const auto levelwise = train_gbdt(data, params);
      for (const auto& t : levelwise.trees()) CHECK(t.depth() <= d);
    }
  }

  TEST_CASE("sample order does not matter") {
    auto data = support::toy_dataset(4);
    GbdtParams params;
    params.rounds = 8;
    const auto a = train_gbdt(data, params);
    Dataset rev;
    rev.num_features = data.num_features;
    for (std::size_t i = data.rows.size(); i-- > 0;) rev.add(data.rows[i], data.labels[i]);
    CHECK(a.to_json() == train_gbdt(rev, params).to_json());
  }

  TEST_CASE("errors") {
    Dataset d;
    d.num_features = 2;
    CHECK_THROWS_AS(train_gbdt(d, {}), TrainingError);
    d.add({{0, 1.0}}, true);
    CHECK_THROWS_AS(train_gbdt(d, {}), TrainingError);
    d.add({}, false);
    GbdtParams bad;
    bad.eta = 0;
    CHECK_THROWS_AS(train_gbdt(d, bad), TrainingError);
    bad = {};
    bad.depth = 0;
    CHECK_THROWS_AS(train_gbdt(d, bad), TrainingError);
    bad = {};
    bad.leaves = 1;
    CHECK_THROWS_AS(train_gbdt(d, bad), TrainingError);
  }

  TEST_CASE("classifier rates") {
    const auto data = support::toy_dataset(7);
    GbdtParams params;
    params.rounds = 20;
    const auto m = train_gbdt(data, params);
    const auto r = evaluate_classifier(m, data);
    CHECK(r.true_pos + r.false_neg == data.positives());
    CHECK(r.true_neg + r.false_pos == data.rows.size() - data.positives());
    CHECK(r.tpr() > 0.7);
    CHECK(r.tnr() > 0.7);
  }
}

TEST_SUITE("gbdt model files") {
  TEST_CASE("round trip") {
    GbdtParams params;
    params.growth = TreeGrowth::kLeaf;
    params.leaves = 8;
    params.rounds = 12;
    const auto data = support::toy_dataset(9);
    const auto m = train_gbdt(data, params);
    const auto path = std::filesystem::temp_directory_path() / "anon_enigma_gbdt_rt.json";
    m.save(path);
    const auto back = GbdtModel::load(path);
    std::filesystem::remove(path);
    CHECK(back.to_json() == m.to_json());
    CHECK(back.params().label() == m.params().label());
    for (const auto& r : data.rows) CHECK(back.predict(r) == m.predict(r));
  }

  TEST_CASE("malformed files are rejected") {
    auto j = single_leaf_model(1.0);
    CHECK_NOTHROW(GbdtModel::from_json(j.dump()));

    auto bad = j;
    bad["version"] = 2;
    CHECK_THROWS_WITH_AS(GbdtModel::from_json(bad.dump()), doctest::Contains("version"), ModelError);
    bad = j;
    bad.erase("version");
    CHECK_THROWS_AS(GbdtModel::from_json(bad.dump()), ModelError);

    std::string text = j.dump();
    const auto at = text.find("\"leaf\":") + 7;
    text.replace(at, text.find('}', at) - at, "NaN");
    CHECK_THROWS_AS(GbdtModel::from_json(text), ModelError);

    CHECK_THROWS_AS(GbdtModel::from_json("{"), ModelError);
    bad = j;
    bad["trees"][0] = {{"f", 99}, {"t", 0.5}, {"l", {{"leaf", 0}}}, {"r", {{"leaf", 0}}}};
    CHECK_THROWS_AS(GbdtModel::from_json(bad.dump()), ModelError);
  }
}
