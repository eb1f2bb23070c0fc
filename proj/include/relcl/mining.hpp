#pragma once

// Pretraining-pair mining over an entity-annotated corpus: document
// frequencies, PMI ranking, positive-pair enumeration, type-based negative
// filtering and entity masking.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "relcl/corpus.hpp"

namespace relcl {

using EntityPairKey = std::pair<std::string, std::string>;  // (subject, object) global ids

struct PairStats {
  std::map<std::string, std::size_t> entity_doc_count;      // N(e)
  std::map<EntityPairKey, std::size_t> pair_doc_count;      // N(e_s, e_o), ordered

  // Adds another shard's counts (counts are additive over disjoint documents).
  void merge(const PairStats& other);
};

PairStats compute_pair_stats(const std::vector<Document>& documents);

// N(s,o) / (N(s) * N(o)). Throws ArgumentError when the pair is not in stats.
double pmi(const PairStats& stats, const EntityPairKey& pair);

struct SelectedPair {
  EntityPairKey pair;
  std::size_t frequency = 0;
  double pmi = 0.0;

  friend bool operator==(const SelectedPair&, const SelectedPair&) = default;
};

struct PretrainPairSet {
  std::vector<SelectedPair> selected;  // PMI desc, frequency desc, ids asc

  bool contains(const EntityPairKey& pair) const;
};

inline constexpr std::size_t kDefaultTopK = 5000;
inline constexpr std::size_t kFreqThresholdBiomedical = 16;
inline constexpr std::size_t kFreqThresholdGeneral = 3;

PretrainPairSet select_pretraining_pairs(const PairStats& stats, std::size_t freq_threshold,
                                         std::size_t top_k);

// One occurrence of a selected entity pair in a document.
struct PairOccurrence {
  std::size_t document = 0;  // index into the document vector
  std::size_t subject = 0;   // local entity ids
  std::size_t object = 0;
};

// Occurrences per selected pair, aligned with selected.selected.
std::vector<std::vector<PairOccurrence>> pair_occurrences(const std::vector<Document>& documents,
                                                          const PretrainPairSet& selected);

// Calls `emit` once for every unordered cross-document pair of occurrences of
// the same selected entity pair.
void enumerate_positive_pairs(const std::vector<Document>& documents, const PretrainPairSet& selected,
                              const std::function<void(const PairInstance&, const PairInstance&)>& emit);

std::size_t count_positive_pairs(const std::vector<Document>& documents, const PretrainPairSet& selected);

// True iff the subject types differ or the object types differ.
bool is_valid_negative(const PairInstance& a, const PairInstance& b, const Corpus& corpus);
bool is_valid_negative(const std::string& subject_type_a, const std::string& object_type_a,
                       const std::string& subject_type_b, const std::string& object_type_b);

// Token used in place of a masked mention of an entity of `type`.
std::string blank_token(const std::string& type);

inline constexpr double kEntityMaskProbability = 0.7;

// Replaces every mention of each independently chosen entity (probability p)
// with a single type-specific blank token and re-bases all spans.
Document mask_entities(const Document& doc, double probability, std::mt19937_64& rng);

}  // namespace relcl
