#pragma once

// Synthetic relational world: a fixed knowledge base of typed entities and
// relation facts, rendered into documents through per-relation surface
// templates. Each relation owns `modes_per_relation` disjoint template
// families with distinct entity-type signatures, so a relation naturally
// splits into several clusters under pair-identity pretraining.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "relcl/corpus.hpp"

namespace relcl {

struct SyntheticWorldConfig {
  std::size_t n_entities = 60;
  std::size_t n_types = 4;
  std::size_t n_relations = 4;  // excluding NA
  std::size_t modes_per_relation = 2;
  std::size_t docs = 300;
  std::size_t pairs_per_doc = 3;  // relation facts rendered per document
  std::size_t vocab_size = 400;
  std::uint64_t seed = 1;

  double na_fraction = 0.5;        // share of labeled pairs that are NA
  std::size_t facts_per_mode = 6;  // knowledge-base facts per (relation, mode)
  std::size_t template_words = 4;  // context words owned by each (relation, mode)
  std::size_t filler_words = 40;   // shared noise vocabulary
  std::size_t distractor_sentences = 2;
  double noise_rate = 0.3;         // chance of a filler word between template slots
  double popularity_exponent = 1.0;  // Zipf exponent over facts
  bool multi_label = false;
  double second_label_rate = 0.2;  // multi-label only: facts carrying two relations

  void validate() const;
};

// Number of encoder special tokens the vocabulary budget must leave room for.
std::size_t reserved_special_tokens(std::size_t n_types);

struct SyntheticFact {
  std::string subject;  // global ids
  std::string object;
  std::vector<RelationId> relations;  // sorted
  std::size_t mode = 0;
};

class SyntheticWorld {
 public:
  explicit SyntheticWorld(const SyntheticWorldConfig& config);

  const SyntheticWorldConfig& config() const { return config_; }
  const RelationInventory& inventory() const { return inventory_; }
  const std::vector<SyntheticFact>& facts() const { return facts_; }
  const std::string& type_of(const std::string& global_id) const;

  // Gold labels of an ordered entity pair; NA ({na} or {}) when not a fact.
  std::vector<RelationId> gold(const std::string& subject, const std::string& object) const;
  // Template mode of a fact pair, -1 for NA pairs.
  int mode_of(const std::string& subject, const std::string& object) const;

  // Renders `count` documents with ids "<prefix><n>". Deterministic in seed.
  Corpus sample_documents(std::size_t count, std::uint64_t seed, const std::string& prefix) const;

 private:
  struct Template {
    std::vector<std::string> words;
    bool subject_first = true;
  };

  SyntheticWorldConfig config_;
  RelationInventory inventory_;
  std::vector<std::string> entity_ids_;
  std::vector<std::string> entity_types_;
  std::vector<std::string> entity_tokens_;
  std::map<std::string, std::size_t> entity_index_;
  std::vector<SyntheticFact> facts_;
  std::map<std::pair<std::string, std::string>, std::size_t> fact_index_;
  std::vector<Template> templates_;  // relation-major: (r - 1) * modes + mode
  std::vector<std::string> na_words_;
  std::vector<std::string> fillers_;
  std::string separator_;
  std::vector<double> popularity_cdf_;

  const Template& template_for(RelationId relation, std::size_t mode) const;
};

// Builds the world and renders config.docs documents with prefix "doc".
Corpus generate_synthetic_world(const SyntheticWorldConfig& config);

}  // namespace relcl
