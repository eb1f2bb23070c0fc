#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "relcl/error.hpp"
#include "relcl/eval.hpp"

using namespace relcl;
using namespace relcl::testing;

namespace {

PredictionRecord rec(const std::string& s, const std::string& o, LabelSet pred, LabelSet gold) {
  return PredictionRecord{"d", 0, 1, s, o, std::move(pred), std::move(gold)};
}

// TP = 2, FP = 1, FN = 1 with NA (0) present on both sides.
std::vector<PredictionRecord> fixture() {
  return {rec("a", "b", {1}, {1}), rec("b", "c", {2}, {2}), rec("c", "d", {1}, {0}), rec("d", "e", {0}, {2}),
          rec("e", "f", {0}, {0})};
}

std::vector<PredictionRecord> random_records(std::size_t n, std::size_t r, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> rel(0, static_cast<int>(r) - 1), ent(0, 9);
  std::bernoulli_distribution coin(0.3);
  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    LabelSet p, g;
    for (RelationId k = 1; k < static_cast<RelationId>(r); ++k) {
      if (coin(rng)) p.push_back(k);
      if (coin(rng)) g.push_back(k);
    }
    out.push_back(rec("E" + std::to_string(ent(rng)), "E" + std::to_string(ent(rng)), p, g));
  }
  return out;
}

}  // namespace

TEST_CASE("micro-F1 arithmetic") {
  const F1Score f = micro_f1(fixture(), 0);
  CHECK(f.tp == 2);
  CHECK(f.fp == 1);
  CHECK(f.fn == 1);
  CHECK(f.precision == 2.0 / 3.0);
  CHECK(f.recall == 2.0 / 3.0);
  CHECK(f.f1 == 2.0 / 3.0);
  const std::vector<PredictionRecord> perfect = {rec("a", "b", {1}, {1}), rec("a", "c", {2, 3}, {2, 3})};
  const F1Score p = micro_f1(perfect, 0);
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 1.0);
  CHECK(p.f1 == 1.0);
  const F1Score none = micro_f1(std::vector<PredictionRecord>{rec("a", "b", {0}, {0})}, 0);
  CHECK(none.f1 == 0.0);
  CHECK(f1_from_counts(0, 0, 0).f1 == 0.0);
}

TEST_CASE("micro-F1 matches a cell-counting oracle on 500 random records") {
  std::mt19937_64 rng(500);
  auto records = random_records(500, 5, rng);
  const Counts c = brute_counts(records, 0, 5, [](const PredictionRecord&, RelationId) { return false; });
  const F1Score f = micro_f1(records, 0);
  CHECK(f.tp == c.tp);
  CHECK(f.fp == c.fp);
  CHECK(f.fn == c.fn);
  CHECK(f.f1 >= 0.0);
  CHECK(f.f1 <= 1.0);
  std::shuffle(records.begin(), records.end(), rng);
  CHECK(micro_f1(records, 0).f1 == f.f1);
}

TEST_CASE("F1-Ign") {
  const auto records = fixture();
  CHECK(micro_f1_ign(records, {}, 0).f1 == micro_f1(records, 0).f1);
  CHECK(micro_f1_ign(records, {Fact{"x", 1, "y"}}, 0).f1 == micro_f1(records, 0).f1);

  // every gold fact seen in training: no TP or FN remains
  const std::set<Fact> all = {{"a", 1, "b"}, {"b", 2, "c"}, {"d", 2, "e"}};
  const F1Score ign = micro_f1_ign(records, all, 0);
  CHECK(ign.tp == 0);
  CHECK(ign.fn == 0);
  CHECK(ign.fp == 1);
  CHECK(ign.f1 == 0.0);

  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const auto rs = random_records(200, 4, rng);
    std::set<Fact> train;
    for (int i = 0; i < 30; ++i) {
      train.insert(Fact{"E" + std::to_string(rng() % 10), static_cast<RelationId>(1 + rng() % 3),
                        "E" + std::to_string(rng() % 10)});
    }
    const Counts c = brute_counts(rs, 0, 4, [&](const PredictionRecord& r, RelationId k) {
      return train.count(Fact{r.subject_id, k, r.object_id}) != 0;
    });
    const F1Score got = micro_f1_ign(rs, train, 0);
    CHECK(got.tp == c.tp);
    CHECK(got.fp == c.fp);
    CHECK(got.fn == c.fn);
  }
}

TEST_CASE("facts are non-NA and deduplicated") {
  Corpus c;
  c.inventory = RelationInventory({"NA", "R1"}, "NA", LabelMode::single);
  Document d;
  d.id = "d";
  d.tokens = {"x", "y"};
  d.entities = {{"A", "T"}, {"B", "T"}};
  d.mentions = {{0, 0, 1}, {1, 1, 2}};
  Document d2 = d;
  d2.id = "d2";
  c.documents = {d, d2};
  c.reindex();
  const std::vector<PairInstance> pairs = {{"d", 0, 1, {1}}, {"d2", 0, 1, {1}}, {"d", 1, 0, {0}}};
  CHECK(facts_of(c, pairs) == std::set<Fact>{{"A", 1, "B"}});
}

TEST_CASE("k selection") {
  const std::vector<std::pair<std::size_t, double>> single = {{10, 0.3}};
  CHECK(select_k(single) == 10);
  const std::vector<std::pair<std::size_t, double>> peak = {{1, 0.2}, {3, 0.4}, {5, 0.6}, {10, 0.5}, {20, 0.1}};
  CHECK(select_k(peak) == 5);
  const std::vector<std::pair<std::size_t, double>> tie = {{20, 0.5}, {3, 0.5}, {10, 0.5}};
  CHECK(select_k(tie) == 3);
  CHECK_THROWS_AS(select_k(std::span<const std::pair<std::size_t, double>>{}), ArgumentError);
}

TEST_CASE("probe report shape and one-cluster case") {
  ClusterGeometryConfig c;
  c.clusters_per_relation = 1;
  c.center_norm = 0.0;
  const ClusterGeometry g = make_cluster_geometry(c);
  // one separated cluster per relation
  const ProbeReport r = probe(g.train_z, g.train_labels, g.test_z, g.test_labels, g.inventory, 5);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].name == "softmax");
  CHECK(r.rows[1].name == "nearest_centroid");
  CHECK(r.rows[2].name == "classwise_knn");
  for (const ProbeRow& row : r.rows) CHECK(row.f1 == 1.0);
  CHECK(r.to_csv().rfind("probe,f1\n", 0) == 0);
}

TEST_CASE("colliding centroids favour classwise kNN") {
  const ClusterGeometry g = make_cluster_geometry(ClusterGeometryConfig{});
  const ProbeReport r = probe(g.train_z, g.train_labels, g.test_z, g.test_labels, g.inventory, 5);
  CHECK(r.rows[2].f1 > r.rows[1].f1);
  const ClusterGeometry again = make_cluster_geometry(ClusterGeometryConfig{});
  CHECK(again.train_z == g.train_z);
}
