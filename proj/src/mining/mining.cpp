#include "relcl/mining.hpp"

#include <algorithm>
#include <set>

#include "relcl/error.hpp"

namespace relcl {

void PairStats::merge(const PairStats& other) {
  for (const auto& [k, v] : other.entity_doc_count) entity_doc_count[k] += v;
  for (const auto& [k, v] : other.pair_doc_count) pair_doc_count[k] += v;
}

PairStats compute_pair_stats(const std::vector<Document>& documents) {
  PairStats stats;
  for (const auto& doc : documents) {
    std::set<std::string> present;
    for (const auto& m : doc.mentions) present.insert(doc.entities[m.entity].global_id);
    for (const auto& e : present) ++stats.entity_doc_count[e];
    for (const auto& s : present) {
      for (const auto& o : present) {
        if (s != o) ++stats.pair_doc_count[{s, o}];
      }
    }
  }
  return stats;
}

double pmi(const PairStats& stats, const EntityPairKey& pair) {
  const auto it = stats.pair_doc_count.find(pair);
  if (it == stats.pair_doc_count.end()) {
    throw ArgumentError("pmi: pair (" + pair.first + ", " + pair.second + ") not in stats");
  }
  const double ns = static_cast<double>(stats.entity_doc_count.at(pair.first));
  const double no = static_cast<double>(stats.entity_doc_count.at(pair.second));
  return static_cast<double>(it->second) / (ns * no);
}

bool PretrainPairSet::contains(const EntityPairKey& pair) const {
  return std::any_of(selected.begin(), selected.end(),
                     [&](const SelectedPair& s) { return s.pair == pair; });
}

PretrainPairSet select_pretraining_pairs(const PairStats& stats, std::size_t freq_threshold,
                                         std::size_t top_k) {
  if (freq_threshold < 1 || top_k < 1) throw ArgumentError("freq_threshold and top_k must be >= 1");
  PretrainPairSet out;
  for (const auto& [pair, freq] : stats.pair_doc_count) {
    if (freq < freq_threshold) continue;
    out.selected.push_back({pair, freq, pmi(stats, pair)});
  }
  std::sort(out.selected.begin(), out.selected.end(), [](const SelectedPair& a, const SelectedPair& b) {
    if (a.pmi != b.pmi) return a.pmi > b.pmi;
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.pair < b.pair;
  });
  if (out.selected.size() > top_k) out.selected.resize(top_k);
  return out;
}

std::vector<std::vector<PairOccurrence>> pair_occurrences(const std::vector<Document>& documents,
                                                          const PretrainPairSet& selected) {
  std::map<EntityPairKey, std::size_t> slot;
  for (std::size_t i = 0; i < selected.selected.size(); ++i) slot[selected.selected[i].pair] = i;
  std::vector<std::vector<PairOccurrence>> out(selected.selected.size());
  for (std::size_t d = 0; d < documents.size(); ++d) {
    const Document& doc = documents[d];
    for (std::size_t s = 0; s < doc.entities.size(); ++s) {
      for (std::size_t o = 0; o < doc.entities.size(); ++o) {
        if (s == o) continue;
        const auto it = slot.find({doc.entities[s].global_id, doc.entities[o].global_id});
        if (it != slot.end()) out[it->second].push_back({d, s, o});
      }
    }
  }
  return out;
}

void enumerate_positive_pairs(const std::vector<Document>& documents, const PretrainPairSet& selected,
                              const std::function<void(const PairInstance&, const PairInstance&)>& emit) {
  const auto occ = pair_occurrences(documents, selected);
  for (const auto& list : occ) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        if (list[i].document == list[j].document) continue;
        const PairInstance a{documents[list[i].document].id, list[i].subject, list[i].object, {}};
        const PairInstance b{documents[list[j].document].id, list[j].subject, list[j].object, {}};
        emit(a, b);
      }
    }
  }
}

std::size_t count_positive_pairs(const std::vector<Document>& documents, const PretrainPairSet& selected) {
  std::size_t total = 0;
  for (const auto& list : pair_occurrences(documents, selected)) {
    // global ids are unique per document, so occurrences are in distinct documents
    const std::size_t n = list.size();
    total += n < 2 ? 0 : n * (n - 1) / 2;
  }
  return total;
}

bool is_valid_negative(const std::string& subject_type_a, const std::string& object_type_a,
                       const std::string& subject_type_b, const std::string& object_type_b) {
  return subject_type_a != subject_type_b || object_type_a != object_type_b;
}

bool is_valid_negative(const PairInstance& a, const PairInstance& b, const Corpus& corpus) {
  const Document& da = corpus.document(a.document_id);
  const Document& db = corpus.document(b.document_id);
  return is_valid_negative(da.entities.at(a.subject).type, da.entities.at(a.object).type,
                           db.entities.at(b.subject).type, db.entities.at(b.object).type);
}

std::string blank_token(const std::string& type) { return "[BLANK_" + type + "]"; }

Document mask_entities(const Document& doc, double probability, std::mt19937_64& rng) {
  if (!(probability >= 0.0 && probability <= 1.0)) throw ArgumentError("mask probability must be in [0, 1]");
  std::vector<bool> masked(doc.entities.size(), false);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // one draw per entity regardless of outcome keeps the stream aligned
  for (std::size_t e = 0; e < doc.entities.size(); ++e) masked[e] = u(rng) < probability;

  std::vector<std::size_t> order(doc.mentions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return doc.mentions[a].start < doc.mentions[b].start; });

  Document out;
  out.id = doc.id;
  out.entities = doc.entities;
  out.mentions = doc.mentions;
  std::size_t cursor = 0;
  for (std::size_t mi : order) {
    const Mention& m = doc.mentions[mi];
    out.tokens.insert(out.tokens.end(), doc.tokens.begin() + static_cast<long>(cursor),
                      doc.tokens.begin() + static_cast<long>(m.start));
    const std::size_t start = out.tokens.size();
    if (masked[m.entity]) {
      out.tokens.push_back(blank_token(doc.entities[m.entity].type));
    } else {
      out.tokens.insert(out.tokens.end(), doc.tokens.begin() + static_cast<long>(m.start),
                        doc.tokens.begin() + static_cast<long>(m.end));
    }
    out.mentions[mi].start = start;
    out.mentions[mi].end = out.tokens.size();
    cursor = m.end;
  }
  out.tokens.insert(out.tokens.end(), doc.tokens.begin() + static_cast<long>(cursor), doc.tokens.end());
  return out;
}

}  // namespace relcl
