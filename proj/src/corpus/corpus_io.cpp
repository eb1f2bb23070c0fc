#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "relcl/corpus.hpp"
#include "relcl/error.hpp"

namespace relcl {

using ojson = nlohmann::ordered_json;

namespace {

template <class T>
T field(const nlohmann::json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'", line);
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("field '") + key + "' has the wrong type", line);
  }
}

nlohmann::json parse_line(const std::string& line, std::size_t line_number) {
  try {
    auto j = nlohmann::json::parse(line);
    if (!j.is_object()) throw ParseError("expected a JSON object", line_number);
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_number);
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::string document_to_json(const Document& doc) {
  ojson j;
  j["id"] = doc.id;
  j["tokens"] = doc.tokens;
  ojson ents = ojson::array();
  for (const auto& e : doc.entities) {
    ojson o;
    o["global_id"] = e.global_id;
    o["type"] = e.type;
    ents.push_back(std::move(o));
  }
  j["entities"] = std::move(ents);
  ojson mens = ojson::array();
  for (const auto& m : doc.mentions) {
    ojson o;
    o["entity"] = m.entity;
    o["start"] = m.start;
    o["end"] = m.end;
    mens.push_back(std::move(o));
  }
  j["mentions"] = std::move(mens);
  return j.dump();
}

std::string pair_to_json(const PairInstance& pair, const RelationInventory& inventory) {
  ojson j;
  j["document_id"] = pair.document_id;
  j["subject"] = pair.subject;
  j["object"] = pair.object;
  ojson labels = ojson::array();
  for (RelationId r : pair.labels) labels.push_back(inventory.name(r));
  j["labels"] = std::move(labels);
  return j.dump();
}

std::string inventory_to_json(const RelationInventory& inventory) {
  ojson j;
  j["relations"] = inventory.names();
  j["na"] = inventory.name(inventory.na());
  j["mode"] = inventory.mode() == LabelMode::single ? "single" : "multi";
  if (!inventory.entity_types().empty()) j["entity_types"] = inventory.entity_types();
  return j.dump();
}

Document document_from_json(const std::string& line, std::size_t n) {
  const auto j = parse_line(line, n);
  Document doc;
  doc.id = field<std::string>(j, "id", n);
  doc.tokens = field<std::vector<std::string>>(j, "tokens", n);
  const auto ents = field<nlohmann::json>(j, "entities", n);
  if (!ents.is_array()) throw ParseError("field 'entities' must be an array", n);
  for (const auto& e : ents) {
    doc.entities.push_back({field<std::string>(e, "global_id", n), field<std::string>(e, "type", n)});
  }
  const auto mens = field<nlohmann::json>(j, "mentions", n);
  if (!mens.is_array()) throw ParseError("field 'mentions' must be an array", n);
  for (const auto& m : mens) {
    doc.mentions.push_back({field<std::size_t>(m, "entity", n), field<std::size_t>(m, "start", n),
                            field<std::size_t>(m, "end", n)});
  }
  return doc;
}

PairInstance pair_from_json(const std::string& line, std::size_t n,
                            const RelationInventory& inventory) {
  const auto j = parse_line(line, n);
  PairInstance p;
  p.document_id = field<std::string>(j, "document_id", n);
  p.subject = field<std::size_t>(j, "subject", n);
  p.object = field<std::size_t>(j, "object", n);
  for (const auto& name : field<std::vector<std::string>>(j, "labels", n)) {
    const auto id = inventory.find(name);
    if (!id) throw ParseError("labels: unknown relation '" + name + "'", n);
    p.labels.push_back(*id);
  }
  std::sort(p.labels.begin(), p.labels.end());
  p.labels.erase(std::unique(p.labels.begin(), p.labels.end()), p.labels.end());
  // A lone NA in multi-label files is accepted as the empty set.
  if (inventory.mode() == LabelMode::multi && p.labels.size() == 1 && p.labels[0] == inventory.na()) {
    p.labels.clear();
  }
  return p;
}

RelationInventory inventory_from_json(const std::string& text) {
  const auto j = parse_line(text, 1);
  const auto mode = field<std::string>(j, "mode", 1);
  if (mode != "single" && mode != "multi") throw ParseError("mode must be 'single' or 'multi'", 1);
  std::vector<std::string> types;
  if (j.contains("entity_types")) types = field<std::vector<std::string>>(j, "entity_types", 1);
  return RelationInventory(field<std::vector<std::string>>(j, "relations", 1),
                           field<std::string>(j, "na", 1),
                           mode == "single" ? LabelMode::single : LabelMode::multi, std::move(types));
}

RelationInventory load_inventory(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return inventory_from_json(ss.str());
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<Document> docs;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (blank(line)) continue;
    docs.push_back(document_from_json(line, n));
  }
  return docs;
}

std::vector<PairInstance> load_pairs(const std::filesystem::path& path,
                                     const RelationInventory& inventory) {
  auto in = open_in(path);
  std::vector<PairInstance> pairs;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (blank(line)) continue;
    pairs.push_back(pair_from_json(line, n, inventory));
  }
  return pairs;
}

Corpus load_corpus(const std::filesystem::path& inventory_path,
                   const std::filesystem::path& documents_path,
                   const std::optional<std::filesystem::path>& labels_path) {
  Corpus c;
  c.inventory = load_inventory(inventory_path);
  c.documents = load_documents(documents_path);
  for (std::size_t i = 0; i < c.documents.size(); ++i) {
    try {
      validate_document(c.documents[i], c.inventory);
    } catch (const ValidationError& e) {
      throw ValidationError(documents_path.filename().string() + ": document " + std::to_string(i + 1) +
                            ": " + e.what());
    }
  }
  c.reindex();
  if (labels_path) {
    c.pairs = load_pairs(*labels_path, c.inventory);
    for (std::size_t i = 0; i < c.pairs.size(); ++i) {
      try {
        validate_pair(c.pairs[i], c);
      } catch (const ValidationError& e) {
        throw ValidationError(labels_path->filename().string() + ": record " + std::to_string(i + 1) +
                              ": " + e.what());
      }
    }
  }
  return c;
}

void save_inventory(const RelationInventory& inventory, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << inventory_to_json(inventory) << '\n';
}

void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& d : docs) out << document_to_json(d) << '\n';
}

void save_pairs(const std::vector<PairInstance>& pairs, const RelationInventory& inventory,
                const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& p : pairs) out << pair_to_json(p, inventory) << '\n';
}

}  // namespace relcl
