#pragma once

// Training objectives over batches of pair embeddings. Every function returns
// its value together with exact gradients with respect to its inputs; callers
// chain those into the encoder backward pass. All softmax-like terms are
// max-shifted.

#include <span>
#include <utility>
#include <vector>

#include "relcl/corpus.hpp"
#include "relcl/matrix.hpp"

namespace relcl {

class Temperature {
 public:
  explicit Temperature(double value);
  double value() const { return value_; }

 private:
  double value_;
};

inline constexpr double kPretrainTemperature = 0.05;
inline constexpr double kSingleLabelTau1 = 0.2;
inline constexpr double kSingleLabelTau2 = 0.2;
inline constexpr double kMultiLabelTau1 = 0.01;
inline constexpr double kMultiLabelTau2 = 0.03;

inline constexpr double kNormFloor = 1e-12;

using LabelSet = std::vector<RelationId>;

double cosine_sim(std::span<const double> a, std::span<const double> b);

// Rows scaled to unit norm (norm floored at kNormFloor) and the backward map.
struct NormalizedRows {
  Matrix unit;
  std::vector<double> norms;
};
NormalizedRows normalize_rows(const Matrix& z);
// dZ += d(unit) pulled back through the normalization.
void normalize_rows_backward(const NormalizedRows& n, const Matrix& d_unit, Matrix& d_z);

struct LossResult {
  double value = 0.0;
  Matrix grad;  // same shape as the differentiated input
};

// Contrastive pair-identity loss. `positives` holds ordered (anchor, positive)
// row pairs; `negatives[i]` lists the negative rows of anchor i.
LossResult loss_rel(const Matrix& z, std::span<const std::pair<std::size_t, std::size_t>> positives,
                    const std::vector<std::vector<std::size_t>>& negatives, Temperature tau);

struct DualLossResult {
  double value = 0.0;
  Matrix grad_z;
  Matrix grad_z_hat;
};

// Dropout-pair InfoNCE: anchor z_i against its second pass z_hat_i, with the
// second-pass embeddings of every other batch row as negatives.
DualLossResult loss_self(const Matrix& z, const Matrix& z_hat, std::span<const std::size_t> anchors,
                         Temperature tau);

// Mean token cross-entropy over rows of logits; 0 for no rows.
LossResult loss_mlm(const Matrix& logits, std::span<const int> targets);

struct PretrainLoss {
  double rel = 0.0;
  double self = 0.0;
  double mlm = 0.0;
  double total() const { return rel + self + mlm; }
};

struct ClassifierLossResult {
  double value = 0.0;
  Matrix grad_z;
  Matrix grad_w;  // R x d
  Matrix grad_b;  // 1 x R
};

// Softmax classifier over W z + b. Single-label only.
ClassifierLossResult loss_ce(const Matrix& z, std::span<const LabelSet> labels, const Matrix& w, const Matrix& b);

// Adaptive-thresholding loss over classifier logits W z + b (multi-label CE substitute).
ClassifierLossResult loss_classifier_atl(const Matrix& z, std::span<const LabelSet> labels, const Matrix& w,
                                         const Matrix& b, RelationId na);

// Supervised contrastive loss over cosine similarities. Anchors without a
// same-label peer are skipped; throws UndefinedLossError if none remain.
LossResult loss_supcon(const Matrix& z, std::span<const RelationId> labels, Temperature tau);

// ---- multi-center contrastive loss -----------------------------------------

enum class CandidateWeighting {
  softmax,  // similarity-weighted, multi-center
  uniform,  // plain mean similarity, one-center
};

// softmax(sims / tau1).
std::vector<double> mccl_weights(std::span<const double> sims, Temperature tau1);

struct McclScores {
  Matrix s;                               // n x R
  std::vector<std::vector<char>> defined; // n x R, 0 where the candidate set is empty
};

// Candidate groups: single-label rows join their label's group; multi-label
// rows join each positive label's group, or NA's when the set is empty.
std::vector<std::vector<std::size_t>> relation_groups(std::span<const LabelSet> labels, std::size_t n_relations,
                                                      RelationId na);

// s_r for every row and relation. `proxies` is R x d or empty (no proxies).
McclScores mccl_scores(const Matrix& z, std::span<const LabelSet> labels, const Matrix& proxies,
                       std::size_t n_relations, RelationId na, Temperature tau1,
                       CandidateWeighting weighting = CandidateWeighting::softmax);

struct ScoreLossResult {
  double value = 0.0;
  Matrix grad_s;  // n x R
  Matrix grad_b;  // 1 x R
};

// Mean -log softmax((s + b) / tau2)[y] over rows whose gold relation is defined.
ScoreLossResult loss_mccl(const McclScores& scores, const Matrix& biases, Temperature tau2,
                          std::span<const LabelSet> labels);

struct AtlResult {
  double value = 0.0;
  std::vector<double> grad;
};

// L1 + L2 of the adaptive-thresholding loss over one logit vector.
AtlResult loss_atl(std::span<const double> logits, std::span<const RelationId> positives,
                   std::span<const RelationId> negatives, RelationId na);

struct ObjectiveResult {
  double value = 0.0;
  Matrix grad_z;
  Matrix grad_proxies;  // empty when proxies are disabled
  Matrix grad_b;
};

struct McclOptions {
  double tau1 = kSingleLabelTau1;
  double tau2 = kSingleLabelTau2;
  LabelMode mode = LabelMode::single;
  CandidateWeighting weighting = CandidateWeighting::softmax;
};

// Full multi-center objective: scores, softmax (single-label) or adaptive
// thresholding (multi-label), and gradients back to embeddings, proxies and biases.
ObjectiveResult mccl_objective(const Matrix& z, std::span<const LabelSet> labels, const Matrix& proxies,
                               const Matrix& biases, RelationId na, const McclOptions& options);

// Multi-label variant: logits (s_r + b_r) / tau2 fed to loss_atl, mean over rows.
ObjectiveResult loss_mccl_multilabel(const Matrix& z, std::span<const LabelSet> labels, const Matrix& proxies,
                                     const Matrix& biases, RelationId na, double tau1, double tau2);

}  // namespace relcl
