#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace relcl {

using RelationId = int;

struct Mention {
  std::size_t entity = 0;  // local entity index
  std::size_t start = 0;   // inclusive
  std::size_t end = 0;     // exclusive

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct Entity {
  std::string global_id;
  std::string type;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Document {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Entity> entities;  // local id = position
  std::vector<Mention> mentions;

  // Mention indices of one entity, in mention order.
  std::vector<std::size_t> mentions_of(std::size_t entity) const;

  friend bool operator==(const Document&, const Document&) = default;
};

struct PairInstance {
  std::string document_id;
  std::size_t subject = 0;
  std::size_t object = 0;
  std::vector<RelationId> labels;  // sorted, unique

  friend bool operator==(const PairInstance&, const PairInstance&) = default;
};

enum class LabelMode { single, multi };

class RelationInventory {
 public:
  RelationInventory() = default;
  RelationInventory(std::vector<std::string> relations, const std::string& na, LabelMode mode,
                    std::vector<std::string> entity_types = {});

  std::size_t size() const { return relations_.size(); }
  RelationId na() const { return na_; }
  LabelMode mode() const { return mode_; }
  const std::vector<std::string>& names() const { return relations_; }
  const std::string& name(RelationId id) const { return relations_.at(static_cast<std::size_t>(id)); }
  std::optional<RelationId> find(const std::string& name) const;
  bool valid(RelationId id) const { return id >= 0 && static_cast<std::size_t>(id) < relations_.size(); }

  // Declared entity types. Empty means "any type".
  const std::vector<std::string>& entity_types() const { return entity_types_; }
  bool has_type(const std::string& type) const;

  friend bool operator==(const RelationInventory&, const RelationInventory&) = default;

 private:
  std::vector<std::string> relations_;
  RelationId na_ = 0;
  LabelMode mode_ = LabelMode::single;
  std::vector<std::string> entity_types_;
};

// Documents, labeled pairs and the relation inventory they are drawn from.
struct Corpus {
  RelationInventory inventory;
  std::vector<Document> documents;
  std::vector<PairInstance> pairs;

  // Document index by id. Rebuilt by reindex().
  std::unordered_map<std::string, std::size_t> by_id;

  void reindex();
  const Document& document(const std::string& id) const;
  bool has_document(const std::string& id) const { return by_id.count(id) != 0; }
};

// Throws ValidationError naming the offending field.
void validate_document(const Document& doc, const RelationInventory& inventory);
void validate_pair(const PairInstance& pair, const Corpus& corpus);
void validate_corpus(const Corpus& corpus);

// ---- JSONL interchange ------------------------------------------------------

std::string document_to_json(const Document& doc);
std::string pair_to_json(const PairInstance& pair, const RelationInventory& inventory);
std::string inventory_to_json(const RelationInventory& inventory);

Document document_from_json(const std::string& line, std::size_t line_number);
PairInstance pair_from_json(const std::string& line, std::size_t line_number,
                            const RelationInventory& inventory);
RelationInventory inventory_from_json(const std::string& text);

RelationInventory load_inventory(const std::filesystem::path& path);
std::vector<Document> load_documents(const std::filesystem::path& path);
std::vector<PairInstance> load_pairs(const std::filesystem::path& path,
                                     const RelationInventory& inventory);

// Loads and validates inventory, documents and labels. Labels may be absent
// (unlabeled pretraining corpus).
Corpus load_corpus(const std::filesystem::path& inventory_path,
                   const std::filesystem::path& documents_path,
                   const std::optional<std::filesystem::path>& labels_path);

void save_inventory(const RelationInventory& inventory, const std::filesystem::path& path);
void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path);
void save_pairs(const std::vector<PairInstance>& pairs, const RelationInventory& inventory,
                const std::filesystem::path& path);

// ---- low-resource subsampling ----------------------------------------------

// floor(p * N) pairs drawn uniformly without replacement. The subset for a
// larger p always contains the subset for a smaller p under the same seed.
std::vector<PairInstance> split_low_resource(const std::vector<PairInstance>& pairs, double p,
                                             std::uint64_t seed);

// Corpus restricted to `pairs` and the documents they reference.
Corpus restrict_to_pairs(const Corpus& corpus, std::vector<PairInstance> pairs);

std::size_t low_resource_count(std::size_t n, double p);

}  // namespace relcl
