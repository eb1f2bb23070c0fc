#include <set>

#include "doctest.h"
#include "relcl/error.hpp"
#include "relcl/synthetic.hpp"

using namespace relcl;

TEST_CASE("same seed gives identical corpora") {
  SyntheticWorldConfig c;
  c.seed = 7;
  c.docs = 50;
  const Corpus a = generate_synthetic_world(c);
  const Corpus b = generate_synthetic_world(c);
  CHECK(a.documents == b.documents);
  CHECK(a.pairs == b.pairs);
  c.seed = 8;
  CHECK(generate_synthetic_world(c).documents != a.documents);
}

TEST_CASE("every relation appears in at least one gold pair") {
  for (bool multi : {false, true}) {
    SyntheticWorldConfig c;
    c.docs = 100;
    c.n_relations = 4;
    c.multi_label = multi;
    const Corpus corpus = generate_synthetic_world(c);
    CHECK_NOTHROW(validate_corpus(corpus));
    std::set<RelationId> seen;
    for (const auto& p : corpus.pairs) seen.insert(p.labels.begin(), p.labels.end());
    for (RelationId r = 0; r < static_cast<RelationId>(corpus.inventory.size()); ++r) {
      if (r == corpus.inventory.na() && multi) continue;
      CHECK(seen.count(r) == 1);
    }
  }
}

TEST_CASE("one mode per relation leaves one template family") {
  SyntheticWorldConfig c;
  c.modes_per_relation = 1;
  const SyntheticWorld world(c);
  for (const auto& f : world.facts()) {
    CHECK(f.mode == 0);
    CHECK(world.mode_of(f.subject, f.object) == 0);
  }
  c.modes_per_relation = 2;
  const SyntheticWorld two(c);
  std::set<std::size_t> modes;
  for (const auto& f : two.facts()) modes.insert(f.mode);
  CHECK(modes == std::set<std::size_t>{0, 1});
}

TEST_CASE("gold labels agree with the world's knowledge base") {
  SyntheticWorldConfig c;
  c.docs = 40;
  const SyntheticWorld world(c);
  const Corpus corpus = world.sample_documents(40, 3, "x");
  for (const auto& p : corpus.pairs) {
    const Document& d = corpus.document(p.document_id);
    CHECK(world.gold(d.entities[p.subject].global_id, d.entities[p.object].global_id) == p.labels);
    CHECK(world.type_of(d.entities[p.subject].global_id) == d.entities[p.subject].type);
  }
  CHECK(corpus.documents.front().id.rfind("x", 0) == 0);
}

TEST_CASE("invalid world configurations are configuration errors") {
  SyntheticWorldConfig c;
  c.vocab_size = 10;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SyntheticWorldConfig{};
  c.na_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SyntheticWorldConfig{};
  c.n_relations = 0;
  CHECK_THROWS_AS(SyntheticWorld{c}, ConfigError);
}
