#pragma once

// Micro-averaged F1 over non-NA labels, the F1-Ign variant, k selection, the
// three-probe report and a synthetic embedding geometry for probing.

#include <array>
#include <compare>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relcl/corpus.hpp"
#include "relcl/inference.hpp"
#include "relcl/matrix.hpp"

namespace relcl {

struct PredictionRecord {
  std::string document_id;
  std::size_t subject = 0;
  std::size_t object = 0;
  std::string subject_id;  // global ids
  std::string object_id;
  LabelSet predicted;
  LabelSet gold;
};

struct Fact {
  std::string subject;
  RelationId relation = 0;
  std::string object;

  friend auto operator<=>(const Fact&, const Fact&) = default;
};

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
};

// F1 from counts; each ratio is 0 when its denominator is 0.
F1Score f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// NA never counts toward TP, FP or FN.
F1Score micro_f1(std::span<const PredictionRecord> records, RelationId na);

// Gold labels whose fact is in `train_facts` are dropped from TP and FN; FP is untouched.
F1Score micro_f1_ign(std::span<const PredictionRecord> records, const std::set<Fact>& train_facts, RelationId na);

// Non-NA facts of `pairs`, deduplicated.
std::set<Fact> facts_of(const Corpus& corpus, std::span<const PairInstance> pairs);

inline constexpr std::array<std::size_t, 5> kCandidateK = {1, 3, 5, 10, 20};

// k with the highest dev F1; smallest k on ties. Throws ArgumentError when empty.
std::size_t select_k(std::span<const std::pair<std::size_t, double>> dev_f1_by_k);

struct ProbeRow {
  std::string name;
  double f1 = 0.0;
};

struct ProbeReport {
  std::vector<ProbeRow> rows;  // softmax, nearest_centroid, classwise_knn

  std::string to_csv() const;
};

// Fits the three probes on frozen single-label embeddings and scores test micro-F1.
ProbeReport probe(const Matrix& train_z, std::span<const RelationId> train_labels, const Matrix& test_z,
                  std::span<const RelationId> test_labels, const RelationInventory& inventory, std::size_t k,
                  const ProbeFitOptions& options = {});

// Relation r places its clusters at center +/- offset_r, so every relation's
// mean sits on the shared center while its members stay separated.
struct ClusterGeometryConfig {
  std::size_t n_relations = 5;  // relation 0 is NA
  std::size_t dim = 32;
  std::size_t clusters_per_relation = 2;
  std::size_t train_per_cluster = 20;
  std::size_t test_per_cluster = 20;
  double center_norm = 1.0;
  double offset_norm = 1.0;
  double noise = 0.05;
  std::uint64_t seed = 1;
};

struct ClusterGeometry {
  RelationInventory inventory;
  Matrix train_z, test_z;
  std::vector<RelationId> train_labels, test_labels;
};

ClusterGeometry make_cluster_geometry(const ClusterGeometryConfig& config);

}  // namespace relcl
