#pragma once

// Classwise kNN over stored training-pair embeddings, plus the two probes it
// is compared against: nearest centroid and a softmax classifier on frozen
// embeddings. Scans are exhaustive.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "relcl/corpus.hpp"
#include "relcl/losses.hpp"
#include "relcl/matrix.hpp"

namespace relcl {

struct Model;

inline constexpr double kEmptyGroupScore = -std::numeric_limits<double>::infinity();

struct EmbeddingIndex {
  std::size_t dim = 0;
  RelationId na = 0;
  LabelMode mode = LabelMode::single;
  std::vector<Matrix> groups;                        // per relation: unit rows
  std::vector<std::vector<std::size_t>> instance_ids;  // per relation: source row ids
  std::vector<double> biases;                        // per relation; zeros without an mccl head

  std::size_t n_relations() const { return groups.size(); }
};

// Groups unit-normalized copies of `z` rows by label. Multi-label rows are
// stored once per positive label; rows with no positive label form NA's group.
EmbeddingIndex build_index(const Matrix& z, std::span<const LabelSet> labels, const RelationInventory& inventory,
                           std::vector<double> biases = {});

// Embeds `pairs` with the model and indexes them with the model's rel_bias (or zeros).
EmbeddingIndex build_index(const Model& model, const Corpus& corpus, const std::vector<PairInstance>& pairs);

// Mean cosine similarity of the min(k, |group|) nearest members of each group;
// kEmptyGroupScore for empty groups.
std::vector<double> knn_scores(const EmbeddingIndex& index, std::span<const double> query, std::size_t k);

// argmax s_r + b_r, lowest id on ties. Throws PredictionError when no score is finite.
RelationId predict_single(std::span<const double> scores, std::span<const double> biases);

// {r != NA : s_r + b_r > s_NA + b_NA}. Throws PredictionError when NA's score is not finite.
LabelSet predict_multi(std::span<const double> scores, std::span<const double> biases, RelationId na);

// argmax cosine to the re-normalized group means; empty groups skipped, lowest id on ties.
RelationId nearest_centroid_predict(const EmbeddingIndex& index, std::span<const double> query);

struct SoftmaxProbe {
  Matrix w;  // R x d
  Matrix b;  // 1 x R

  RelationId predict(std::span<const double> z) const;
};

struct ProbeFitOptions {
  std::size_t epochs = 300;
  double learning_rate = 0.5;
  std::uint64_t seed = 1;
};

// Full-batch gradient descent on mean cross-entropy over frozen embeddings.
// `loss_trace` (optional) receives the loss before each epoch's update.
SoftmaxProbe softmax_probe_fit(const Matrix& z, std::span<const RelationId> labels, std::size_t n_relations,
                               const ProbeFitOptions& options = {}, std::vector<double>* loss_trace = nullptr);

void save_index(const EmbeddingIndex& index, const std::filesystem::path& path);
EmbeddingIndex load_index(const std::filesystem::path& path);

}  // namespace relcl
