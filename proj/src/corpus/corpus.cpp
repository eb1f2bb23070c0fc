#include "relcl/corpus.hpp"

#include <algorithm>
#include <set>

#include "relcl/error.hpp"

namespace relcl {

std::vector<std::size_t> Document::mentions_of(std::size_t entity) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    if (mentions[i].entity == entity) out.push_back(i);
  }
  return out;
}

RelationInventory::RelationInventory(std::vector<std::string> relations, const std::string& na,
                                     LabelMode mode, std::vector<std::string> entity_types)
    : relations_(std::move(relations)), mode_(mode), entity_types_(std::move(entity_types)) {
  std::set<std::string> seen;
  for (const auto& r : relations_) {
    if (r.empty()) throw ValidationError("relations: empty relation id");
    if (!seen.insert(r).second) throw ValidationError("relations: duplicate relation id '" + r + "'");
  }
  const auto it = std::find(relations_.begin(), relations_.end(), na);
  if (it == relations_.end()) throw ValidationError("na: '" + na + "' is not in relations");
  na_ = static_cast<RelationId>(it - relations_.begin());
  std::set<std::string> types;
  for (const auto& t : entity_types_) {
    if (t.empty() || !types.insert(t).second) {
      throw ValidationError("entity_types: empty or duplicate type '" + t + "'");
    }
  }
}

std::optional<RelationId> RelationInventory::find(const std::string& name) const {
  const auto it = std::find(relations_.begin(), relations_.end(), name);
  if (it == relations_.end()) return std::nullopt;
  return static_cast<RelationId>(it - relations_.begin());
}

bool RelationInventory::has_type(const std::string& type) const {
  return entity_types_.empty() ||
         std::find(entity_types_.begin(), entity_types_.end(), type) != entity_types_.end();
}

void Corpus::reindex() {
  by_id.clear();
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (!by_id.emplace(documents[i].id, i).second) {
      throw ValidationError("id: duplicate document id '" + documents[i].id + "'");
    }
  }
}

const Document& Corpus::document(const std::string& id) const {
  const auto it = by_id.find(id);
  if (it == by_id.end()) throw ValidationError("document_id: unknown document '" + id + "'");
  return documents[it->second];
}

void validate_document(const Document& doc, const RelationInventory& inventory) {
  const auto where = [&](const std::string& field) {
    return "document '" + doc.id + "': " + field;
  };
  if (doc.id.empty()) throw ValidationError("id: empty document id");
  std::set<std::string> globals;
  for (std::size_t e = 0; e < doc.entities.size(); ++e) {
    const Entity& ent = doc.entities[e];
    const std::string field = "entities[" + std::to_string(e) + "]";
    if (ent.global_id.empty()) throw ValidationError(where(field + ".global_id is empty"));
    if (ent.type.empty()) throw ValidationError(where(field + ".type is empty"));
    if (!inventory.has_type(ent.type)) {
      throw ValidationError(where(field + ".type '" + ent.type + "' is not a declared type"));
    }
    if (!globals.insert(ent.global_id).second) {
      throw ValidationError(where(field + ".global_id '" + ent.global_id + "' repeats"));
    }
  }
  std::vector<std::size_t> mention_count(doc.entities.size(), 0);
  for (std::size_t m = 0; m < doc.mentions.size(); ++m) {
    const Mention& men = doc.mentions[m];
    const std::string field = "mentions[" + std::to_string(m) + "]";
    if (men.entity >= doc.entities.size()) {
      throw ValidationError(where(field + ".entity out of range"));
    }
    if (men.start >= men.end) throw ValidationError(where(field + ".start must be < end"));
    if (men.end > doc.tokens.size()) throw ValidationError(where(field + ".end beyond tokens"));
    ++mention_count[men.entity];
  }
  for (std::size_t e = 0; e < mention_count.size(); ++e) {
    if (mention_count[e] == 0) {
      throw ValidationError(where("entities[" + std::to_string(e) + "] has no mention"));
    }
  }
  std::vector<const Mention*> sorted;
  for (const auto& m : doc.mentions) sorted.push_back(&m);
  std::sort(sorted.begin(), sorted.end(),
            [](const Mention* a, const Mention* b) { return a->start < b->start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->start < sorted[i - 1]->end) {
      throw ValidationError(where("mentions overlap at token " + std::to_string(sorted[i]->start)));
    }
  }
}

void validate_pair(const PairInstance& pair, const Corpus& corpus) {
  const Document& doc = corpus.document(pair.document_id);
  const std::string where = "pair (" + pair.document_id + ", " + std::to_string(pair.subject) +
                            ", " + std::to_string(pair.object) + "): ";
  if (pair.subject >= doc.entities.size()) throw ValidationError(where + "subject out of range");
  if (pair.object >= doc.entities.size()) throw ValidationError(where + "object out of range");
  if (pair.subject == pair.object) throw ValidationError(where + "subject equals object");
  for (RelationId r : pair.labels) {
    if (!corpus.inventory.valid(r)) throw ValidationError(where + "labels: unknown relation");
  }
  if (!std::is_sorted(pair.labels.begin(), pair.labels.end()) ||
      std::adjacent_find(pair.labels.begin(), pair.labels.end()) != pair.labels.end()) {
    throw ValidationError(where + "labels must be sorted and unique");
  }
  if (corpus.inventory.mode() == LabelMode::single) {
    if (pair.labels.size() != 1) throw ValidationError(where + "labels: single-label mode needs exactly one");
  } else {
    for (RelationId r : pair.labels) {
      if (r == corpus.inventory.na()) {
        throw ValidationError(where + "labels: NA must be encoded as an empty set in multi-label mode");
      }
    }
  }
}

void validate_corpus(const Corpus& corpus) {
  for (const auto& d : corpus.documents) validate_document(d, corpus.inventory);
  for (const auto& p : corpus.pairs) validate_pair(p, corpus);
}

}  // namespace relcl
